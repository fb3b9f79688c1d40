// Copyright 2026 The ntdh Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Experiment configuration and its plain-text format:
//
//   # comment
//   [experiment]
//   name = gamma_sweep
//   seeds = 0, 1, 2
//   [train]
//   hidden = 40
//
// Every key lives in a section; keys before the first header belong to
// [experiment]. One registry drives parsing, the accepted-key listing in
// error messages, the manifest dump and the config hash.

#pragma once

#include <bit>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ntdh/datagen.hpp"
#include "ntdh/error.hpp"
#include "ntdh/trainer.hpp"

namespace ntdh::exp {

enum class ExperimentKind { gamma_sweep, weight_sweep, feature_mask_sweep, sample_mask_sweep };

inline const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::gamma_sweep: return "gamma_sweep";
    case ExperimentKind::weight_sweep: return "weight_sweep";
    case ExperimentKind::feature_mask_sweep: return "feature_mask_sweep";
    case ExperimentKind::sample_mask_sweep: return "sample_mask_sweep";
  }
  return "?";
}

/// Training defaults used by the sweeps. lr is lower than the optimizer's
/// own default: at 0.05 the 1410-parameter nets overfit within ~10 epochs and
/// every soft target acts mainly as a regularizer.
inline TrainConfig experiment_train_defaults() {
  TrainConfig t;
  t.hidden = {40};
  t.epochs = 60;
  t.batch_size = 64;
  t.sgd.lr = 0.01;
  t.sgd.momentum = 0.9;
  t.sgd.weight_decay = 1e-4;
  t.kd.lambda = 0.5;
  t.kd.temperature = 1.0;
  return t;
}

inline std::vector<double> ratio_grid(int first_tenth, int last_tenth) {
  std::vector<double> v;
  for (int i = first_tenth; i <= last_tenth; ++i) v.push_back(i / 10.0);
  return v;
}

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::gamma_sweep;
  std::uint64_t master_seed = 1;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  std::vector<double> gap_gammas = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<double> alpha_grid = {0.25, 0.5, 1.0, 2.0, 4.0};
  std::vector<double> beta_grid = {0.25, 0.5, 1.0, 2.0, 4.0};
  /// Feature-mask ratios.
  std::vector<double> mask_ratios = ratio_grid(1, 9);
  /// Sample-mask ratios; the trailing 1.0 is the full-mask collapse check.
  std::vector<double> sample_mask_ratios = ratio_grid(1, 10);
  /// Gap values at which the two mask sweeps run.
  std::vector<double> mask_gammas = {0.5};
  double test_fraction = 0.5;
  double strength_tolerance = 0.03;

  GenConfig gen;
  bool shared_noise = false;
  TrainConfig train = experiment_train_defaults();

  std::size_t joint_epochs = 30;
  std::size_t saliency_repeats = 16;
  bool subtract_baseline = true;
  bool drop_whole_sample = false;

  std::string output_dir = "out";

  void validate() const {
    auto need = [](bool c, const std::string& m) {
      if (!c) throw ConfigError(m);
    };
    need(!seeds.empty(), "seeds must not be empty");
    need(!gap_gammas.empty(), "gap_gammas must not be empty");
    need(!alpha_grid.empty() && !beta_grid.empty(), "alpha_grid and beta_grid must not be empty");
    need(!mask_ratios.empty() && !sample_mask_ratios.empty(), "mask ratio grids must not be empty");
    need(!mask_gammas.empty(), "mask_gammas must not be empty");
    for (double g : gap_gammas) need(g >= 0.0 && g <= 1.0, "gap_gammas entries must lie in [0, 1]");
    for (double g : mask_gammas) need(g >= 0.0 && g <= 1.0, "mask_gammas entries must lie in [0, 1]");
    for (double r : mask_ratios) need(r >= 0.0 && r <= 1.0, "mask_ratios entries must lie in [0, 1]");
    for (double r : sample_mask_ratios)
      need(r >= 0.0 && r <= 1.0, "sample_mask_ratios entries must lie in [0, 1]");
    for (double a : alpha_grid) need(std::isfinite(a) && a >= 0.0, "alpha_grid entries must be >= 0");
    for (double b : beta_grid) need(std::isfinite(b) && b >= 0.0, "beta_grid entries must be >= 0");
    need(test_fraction > 0.0 && test_fraction < 1.0, "test_fraction must lie in (0, 1)");
    need(strength_tolerance >= 0.0, "strength_tolerance must be >= 0");
    need(gen.d_decisive % 2 == 0, "gen.d_decisive must be even (two views of d_decisive/2)");
    need(saliency_repeats >= 1, "mask.saliency_repeats must be >= 1");
    need(joint_epochs >= 1, "mask.joint_epochs must be >= 1");
    need(!train.hidden.empty(), "train.hidden must name at least one hidden layer");
    try {
      gen.validate();
      train.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v))
    throw ConfigError("not a finite number: '" + s + "'");
  return v;
}

inline std::uint64_t parse_u64(const std::string& s) {
  if (s.empty() || s[0] == '-') throw ConfigError("not a non-negative integer: '" + s + "'");
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size() || errno == ERANGE)
    throw ConfigError("not a non-negative integer: '" + s + "'");
  return static_cast<std::uint64_t>(v);
}

inline std::size_t parse_size(const std::string& s) { return static_cast<std::size_t>(parse_u64(s)); }

inline bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("not a boolean: '" + s + "'");
}

inline std::vector<std::string> split_list(std::string_view raw) {
  std::string s = trim(raw);
  if (s.size() >= 2 && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  for (const auto& item : out)
    if (item.empty()) throw ConfigError("empty list element in '" + std::string(raw) + "'");
  return out;
}

inline std::vector<double> parse_doubles(const std::string& s) {
  std::vector<double> v;
  for (const auto& item : split_list(s)) v.push_back(parse_double(item));
  return v;
}

/// Seed lists accept single values and inclusive ranges: "0-4, 7".
inline std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> v;
  for (const auto& item : split_list(s)) {
    const auto dash = item.find('-', 1);
    if (dash == std::string::npos) {
      v.push_back(parse_u64(item));
      continue;
    }
    const auto lo = parse_u64(trim(item.substr(0, dash)));
    const auto hi = parse_u64(trim(item.substr(dash + 1)));
    if (hi < lo) throw ConfigError("descending seed range '" + item + "'");
    if (hi - lo > 100000) throw ConfigError("seed range too large: '" + item + "'");
    for (auto x = lo; x <= hi; ++x) v.push_back(x);
  }
  return v;
}

template <typename T, typename F>
std::string join(const std::vector<T>& v, F&& f) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += f(v[i]);
  }
  return out;
}

inline std::string join_doubles(const std::vector<double>& v) { return join(v, fmt_double); }

struct Key {
  std::string name;  // section.key
  /// Whether the value can change any row of a sweep CSV. Grid and seed
  /// lists are excluded: each row names its own grid point and seed.
  bool hashed;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

inline const std::vector<Key>& registry() {
  using C = ExperimentConfig;
  static const std::vector<Key> keys = {
      {"experiment.name", false,
       [](C& c, const std::string& v) {
         if (v == "gamma_sweep") c.experiment = ExperimentKind::gamma_sweep;
         else if (v == "weight_sweep") c.experiment = ExperimentKind::weight_sweep;
         else if (v == "feature_mask_sweep") c.experiment = ExperimentKind::feature_mask_sweep;
         else if (v == "sample_mask_sweep") c.experiment = ExperimentKind::sample_mask_sweep;
         else
           throw ConfigError("unknown experiment '" + v +
                             "' (gamma_sweep, weight_sweep, feature_mask_sweep, sample_mask_sweep)");
       },
       [](const C& c) { return std::string(to_string(c.experiment)); }},
      {"experiment.master_seed", true, [](C& c, const std::string& v) { c.master_seed = parse_u64(v); },
       [](const C& c) { return std::to_string(c.master_seed); }},
      {"experiment.seeds", false, [](C& c, const std::string& v) { c.seeds = parse_seed_list(v); },
       [](const C& c) { return join(c.seeds, [](std::uint64_t s) { return std::to_string(s); }); }},
      {"experiment.gap_gammas", false, [](C& c, const std::string& v) { c.gap_gammas = parse_doubles(v); },
       [](const C& c) { return join_doubles(c.gap_gammas); }},
      {"experiment.alpha_grid", false, [](C& c, const std::string& v) { c.alpha_grid = parse_doubles(v); },
       [](const C& c) { return join_doubles(c.alpha_grid); }},
      {"experiment.beta_grid", false, [](C& c, const std::string& v) { c.beta_grid = parse_doubles(v); },
       [](const C& c) { return join_doubles(c.beta_grid); }},
      {"experiment.mask_ratios", false, [](C& c, const std::string& v) { c.mask_ratios = parse_doubles(v); },
       [](const C& c) { return join_doubles(c.mask_ratios); }},
      {"experiment.sample_mask_ratios", false,
       [](C& c, const std::string& v) { c.sample_mask_ratios = parse_doubles(v); },
       [](const C& c) { return join_doubles(c.sample_mask_ratios); }},
      {"experiment.mask_gammas", false, [](C& c, const std::string& v) { c.mask_gammas = parse_doubles(v); },
       [](const C& c) { return join_doubles(c.mask_gammas); }},
      {"experiment.test_fraction", true, [](C& c, const std::string& v) { c.test_fraction = parse_double(v); },
       [](const C& c) { return fmt_double(c.test_fraction); }},
      {"experiment.strength_tolerance", false,
       [](C& c, const std::string& v) { c.strength_tolerance = parse_double(v); },
       [](const C& c) { return fmt_double(c.strength_tolerance); }},
      {"experiment.output_dir", false, [](C& c, const std::string& v) { c.output_dir = v; },
       [](const C& c) { return c.output_dir; }},

      {"gen.n_samples", true, [](C& c, const std::string& v) { c.gen.n_samples = parse_size(v); },
       [](const C& c) { return std::to_string(c.gen.n_samples); }},
      {"gen.n_classes", true, [](C& c, const std::string& v) { c.gen.n_classes = parse_size(v); },
       [](const C& c) { return std::to_string(c.gen.n_classes); }},
      {"gen.d_decisive", true, [](C& c, const std::string& v) { c.gen.d_decisive = parse_size(v); },
       [](const C& c) { return std::to_string(c.gen.d_decisive); }},
      {"gen.d_total", true, [](C& c, const std::string& v) { c.gen.d_total = parse_size(v); },
       [](const C& c) { return std::to_string(c.gen.d_total); }},
      {"gen.class_sep", true, [](C& c, const std::string& v) { c.gen.class_sep = parse_double(v); },
       [](const C& c) { return fmt_double(c.gen.class_sep); }},
      {"gen.view_balanced", true, [](C& c, const std::string& v) { c.gen.view_balanced = parse_bool(v); },
       [](const C& c) { return std::string(c.gen.view_balanced ? "true" : "false"); }},
      {"gen.min_view_hamming", true,
       [](C& c, const std::string& v) { c.gen.min_view_hamming = parse_size(v); },
       [](const C& c) { return std::to_string(c.gen.min_view_hamming); }},
      {"gen.layout", true,
       [](C& c, const std::string& v) {
         if (v == "independent") c.gen.layout = CentroidLayout::independent;
         else if (v == "mirrored") c.gen.layout = CentroidLayout::mirrored;
         else if (v == "permuted_mirror") c.gen.layout = CentroidLayout::permuted_mirror;
         else throw ConfigError("unknown layout '" + v + "' (independent, mirrored, permuted_mirror)");
       },
       [](const C& c) {
         switch (c.gen.layout) {
           case CentroidLayout::independent: return std::string("independent");
           case CentroidLayout::mirrored: return std::string("mirrored");
           case CentroidLayout::permuted_mirror: return std::string("permuted_mirror");
         }
         return std::string("?");
       }},
      {"gen.shared_noise", true, [](C& c, const std::string& v) { c.shared_noise = parse_bool(v); },
       [](const C& c) { return std::string(c.shared_noise ? "true" : "false"); }},

      {"train.hidden", true,
       [](C& c, const std::string& v) {
         c.train.hidden.clear();
         for (const auto& item : split_list(v)) c.train.hidden.push_back(parse_size(item));
       },
       [](const C& c) { return join(c.train.hidden, [](std::size_t h) { return std::to_string(h); }); }},
      {"train.activation", true,
       [](C& c, const std::string& v) {
         if (v == "relu") c.train.activation = Activation::relu;
         else if (v == "tanh") c.train.activation = Activation::tanh;
         else throw ConfigError("unknown activation '" + v + "' (relu, tanh)");
       },
       [](const C& c) { return std::string(c.train.activation == Activation::relu ? "relu" : "tanh"); }},
      {"train.epochs", true, [](C& c, const std::string& v) { c.train.epochs = parse_size(v); },
       [](const C& c) { return std::to_string(c.train.epochs); }},
      {"train.batch_size", true, [](C& c, const std::string& v) { c.train.batch_size = parse_size(v); },
       [](const C& c) { return std::to_string(c.train.batch_size); }},
      {"train.lr", true, [](C& c, const std::string& v) { c.train.sgd.lr = parse_double(v); },
       [](const C& c) { return fmt_double(c.train.sgd.lr); }},
      {"train.momentum", true, [](C& c, const std::string& v) { c.train.sgd.momentum = parse_double(v); },
       [](const C& c) { return fmt_double(c.train.sgd.momentum); }},
      {"train.weight_decay", true,
       [](C& c, const std::string& v) { c.train.sgd.weight_decay = parse_double(v); },
       [](const C& c) { return fmt_double(c.train.sgd.weight_decay); }},

      {"kd.lambda", true, [](C& c, const std::string& v) { c.train.kd.lambda = parse_double(v); },
       [](const C& c) { return fmt_double(c.train.kd.lambda); }},
      {"kd.temperature", true, [](C& c, const std::string& v) { c.train.kd.temperature = parse_double(v); },
       [](const C& c) { return fmt_double(c.train.kd.temperature); }},

      {"mask.joint_epochs", true, [](C& c, const std::string& v) { c.joint_epochs = parse_size(v); },
       [](const C& c) { return std::to_string(c.joint_epochs); }},
      {"mask.saliency_repeats", true, [](C& c, const std::string& v) { c.saliency_repeats = parse_size(v); },
       [](const C& c) { return std::to_string(c.saliency_repeats); }},
      {"mask.subtract_baseline", true,
       [](C& c, const std::string& v) { c.subtract_baseline = parse_bool(v); },
       [](const C& c) { return std::string(c.subtract_baseline ? "true" : "false"); }},
      {"mask.drop_whole_sample", true,
       [](C& c, const std::string& v) { c.drop_whole_sample = parse_bool(v); },
       [](const C& c) { return std::string(c.drop_whole_sample ? "true" : "false"); }},
  };
  return keys;
}

}  // namespace detail

/// Comma-separated `section.key` names.
inline std::string accepted_keys() {
  std::string out;
  for (const auto& k : detail::registry()) {
    if (!out.empty()) out += ", ";
    out += k.name;
  }
  return out;
}

/// Sets one `section.key`; throws ConfigError on unknown keys or bad values.
inline void set_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& k : detail::registry()) {
    if (k.name == key) {
      k.set(cfg, value);
      return;
    }
  }
  throw ConfigError("unknown key '" + key + "'; accepted keys: " + accepted_keys());
}

inline ExperimentConfig parse_config_text(std::string_view text, ExperimentConfig cfg = {}) {
  std::string section = "experiment";
  std::istringstream is{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.resize(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError(where + "malformed section header '" + t + "'");
      section = detail::trim(std::string_view(t).substr(1, t.size() - 2));
      if (section.empty()) throw ConfigError(where + "empty section name");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value', got '" + t + "'");
    const std::string key = detail::trim(std::string_view(t).substr(0, eq));
    const std::string value = detail::trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "missing key before '='");
    try {
      set_key(cfg, section + "." + key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

/// Canonical `section.key=value` pairs in registry order.
inline std::vector<std::pair<std::string, std::string>> to_key_values(const ExperimentConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> kv;
  for (const auto& k : detail::registry()) kv.emplace_back(k.name, k.get(cfg));
  return kv;
}

/// 16 hex digits over the hashed keys. The experiment name is left out so
/// the four sweeps of one configuration share a hash.
inline std::string config_hash(const ExperimentConfig& cfg) {
  std::string text;
  for (const auto& k : detail::registry()) {
    if (!k.hashed) continue;
    text += k.name + "=" + k.get(cfg) + "\n";
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash_tag(text)));
  return buf;
}

}  // namespace ntdh::exp
