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

// The four sweeps plus the assumption harness. Each sweep is a list of groups
// (one per gap value x seed, gap outer); a group trains whatever it shares
// (teacher, baselines) once and yields one CSV row per cell.
//
// Seeds: every stage seed is derive_seed(master, seed, stage_tag). The gap
// value is deliberately not mixed in, so within one seed all gap values see
// the same base sample, split and initial weights and differ only in the
// teacher's columns. Stages that do depend on a grid point (random masks)
// mix in the bit pattern of that value, never its position in the grid.

#pragma once

#include <bit>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ntdh/datagen.hpp"
#include "ntdh/experiment/config.hpp"
#include "ntdh/experiment/csv.hpp"
#include "ntdh/experiment/plot.hpp"
#include "ntdh/experiment/pool.hpp"
#include "ntdh/experiment/stats.hpp"
#include "ntdh/masking.hpp"
#include "ntdh/trainer.hpp"

namespace ntdh::exp {

inline constexpr const char* kVersion = "1.0.0";

inline std::uint64_t stage_seed(const ExperimentConfig& c, std::uint64_t seed, std::string_view tag) {
  return derive_seed(c.master_seed, seed, hash_tag(tag));
}

inline std::uint64_t value_bits(double v) { return std::bit_cast<std::uint64_t>(v); }

inline TrainConfig stage_train(const ExperimentConfig& c, std::uint64_t seed, std::string_view tag) {
  TrainConfig t = c.train;
  t.seed = stage_seed(c, seed, tag);
  t.mask = {};
  return t;
}

/// The train/test pair for one (gap, seed) cell.
inline SplitPair make_split(const ExperimentConfig& c, double gamma, std::uint64_t seed) {
  GenConfig g = c.gen;
  g.rng_seed = stage_seed(c, seed, "data");
  const LabeledDataset base = generate_base(g);
  const ModalityPair pair =
      split_modalities(base, gamma, c.gen.d_total, stage_seed(c, seed, "views"), c.shared_noise);
  return train_test_split(pair, c.test_fraction, stage_seed(c, seed, "split"));
}

/// Short grid-point label used inside cell ids.
inline std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline std::string group_id(double gamma, std::uint64_t seed) {
  return "g" + label(gamma) + "_s" + std::to_string(seed);
}

// ---------------------------------------------------------------------------
// Resumable table engine

using Row = std::vector<std::string>;  // fields after config_hash, cell

struct Group {
  std::string id;
  std::vector<std::string> cells;
  /// Computes the rows for the cells flagged in `need` (others may be empty).
  std::function<std::vector<Row>(const std::vector<bool>& need)> run;
};

struct TableResult {
  std::string path;
  CsvTable table;  // final rows, canonical order
  std::size_t computed = 0;
  std::size_t reused = 0;
  std::size_t discarded = 0;
  /// cell -> row index in table.rows
  std::map<std::string, std::size_t> index;

  const Row& fields(const std::string& cell) const { return table.rows.at(index.at(cell)); }
};

struct RunOptions {
  std::size_t jobs = 1;
  bool verbose = true;
};

/// Skips cells already present under the same config hash, persists each
/// finished group immediately (append) and finally rewrites the file in
/// canonical order. Rows recorded under another hash are dropped.
inline TableResult run_table(const std::string& path, const std::string& hash,
                             const std::vector<std::string>& columns, const std::vector<Group>& groups,
                             const RunOptions& opt, const std::string& tag) {
  std::vector<std::string> header = {"config_hash", "cell"};
  header.insert(header.end(), columns.begin(), columns.end());
  const std::size_t width = header.size();

  TableResult res;
  res.path = path;
  std::map<std::string, Row> done;  // full row incl. hash, cell
  if (std::filesystem::exists(path)) {
    const CsvTable old = read_csv(path);
    if (old.header == header) {
      for (const auto& r : old.rows) {
        if (r[0] == hash) done[r[1]] = r;
        else ++res.discarded;
      }
    } else if (!old.header.empty()) {
      res.discarded = old.rows.size();
    }
  }
  std::set<std::string> wanted;
  for (const auto& g : groups) wanted.insert(g.cells.begin(), g.cells.end());
  for (auto it = done.begin(); it != done.end();) {
    if (!wanted.count(it->first)) it = done.erase(it);
    else ++it;
  }

  // Restart the file from the reusable rows, so progress of this run can be appended.
  {
    CsvTable t;
    t.header = header;
    for (const auto& g : groups)
      for (const auto& c : g.cells)
        if (auto it = done.find(c); it != done.end()) t.rows.push_back(it->second);
    write_csv(path, t);
  }

  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < groups.size(); ++i)
    for (const auto& c : groups[i].cells)
      if (!done.count(c)) {
        todo.push_back(i);
        break;
      }
  res.reused = done.size();

  std::mutex mu;
  std::size_t finished = 0;
  run_pool(todo.size(), opt.jobs, [&](std::size_t k) {
    const Group& g = groups[todo[k]];
    std::vector<bool> need(g.cells.size());
    {
      std::lock_guard<std::mutex> lock(mu);
      for (std::size_t c = 0; c < g.cells.size(); ++c) need[c] = !done.count(g.cells[c]);
    }
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<Row> rows = g.run(need);
    if (rows.size() != g.cells.size()) throw InvalidArgument("sweep group " + g.id + " returned a bad row count");
    std::lock_guard<std::mutex> lock(mu);
    std::ofstream app(path, std::ios::binary | std::ios::app);
    for (std::size_t c = 0; c < g.cells.size(); ++c) {
      if (!need[c]) continue;
      Row full = {hash, g.cells[c]};
      full.insert(full.end(), rows[c].begin(), rows[c].end());
      if (full.size() != width) throw InvalidArgument("sweep row width mismatch in " + g.cells[c]);
      app << join_csv(full) << '\n';
      done[g.cells[c]] = std::move(full);
      ++res.computed;
    }
    ++finished;
    if (opt.verbose) {
      const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::fprintf(stderr, "[%s] %zu/%zu %s (%.1fs)\n", tag.c_str(), finished, todo.size(), g.id.c_str(), s);
    }
  });

  res.table.header = header;
  for (const auto& g : groups)
    for (const auto& c : g.cells) {
      res.index[c] = res.table.rows.size();
      res.table.rows.push_back(done.at(c));
    }
  write_csv(path, res.table);
  return res;
}

// ---------------------------------------------------------------------------
// Summaries

/// Long-format summary accumulator: series,x,n,mean,std,min,max.
class Summary {
 public:
  void add(const std::string& series, double x, double value) {
    auto key = std::make_pair(series, value_bits(x));
    if (!cells_.count(key)) order_.push_back({series, x});
    cells_[key].push_back(value);
  }

  void write(const std::string& path) const {
    CsvTable t;
    t.header = {"series", "x", "n", "mean", "std", "min", "max"};
    for (const auto& [series, x] : order_) {
      const auto& v = cells_.at({series, value_bits(x)});
      t.rows.push_back({series, num(x), std::to_string(v.size()), num(mean(v)), num(stddev(v)),
                        num(*std::min_element(v.begin(), v.end())),
                        num(*std::max_element(v.begin(), v.end()))});
    }
    write_csv(path, t);
  }

 private:
  std::vector<std::pair<std::string, double>> order_;
  std::map<std::pair<std::string, std::uint64_t>, std::vector<double>> cells_;
};

inline std::string out_path(const ExperimentConfig& c, const std::string& file) {
  return (std::filesystem::path(c.output_dir) / file).string();
}

/// One manifest per sweep, so sweeps sharing an output directory keep theirs.
inline void write_manifest(const ExperimentConfig& c, const std::string& sweep, double wall_seconds) {
  std::ofstream os(out_path(c, "manifest_" + sweep + ".txt"), std::ios::binary | std::ios::trunc);
  if (!os) throw InvalidArgument("cannot write manifest in " + c.output_dir);
  os << "ntdh_version=" << kVersion << '\n';
#ifdef __VERSION__
  os << "compiler=" << __VERSION__ << '\n';
#endif
  os << "cxx_standard=" << __cplusplus << '\n';
  os << "sweep=" << sweep << '\n';
  os << "config_hash=" << config_hash(c) << '\n';
  for (const auto& [k, v] : to_key_values(c)) os << k << '=' << v << '\n';
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", wall_seconds);
  os << "wall_seconds=" << buf << '\n';
}

inline void plot_summary(const ExperimentConfig& c, const std::string& stem, const std::string& title,
                         const std::string& x_label, const std::string& y_label) {
  emit_plot(out_path(c, stem + ".csv"), out_path(c, stem + ".svg"), {title, x_label, y_label});
}

// ---------------------------------------------------------------------------
// Assumption harness

inline const std::vector<std::string>& assumption_columns() {
  static const std::vector<std::string> c = {"gamma", "seed", "capacity_teacher", "capacity_student",
                                             "acc_a", "acc_b"};
  return c;
}

inline Row assumption_row(const ExperimentConfig& c, double gamma, std::uint64_t seed, const SplitPair& sp) {
  const MlpSpec spec_t = c.train.spec_for(sp.train.x_a.cols(), sp.train.n_classes);
  const MlpSpec spec_s = c.train.spec_for(sp.train.x_b.cols(), sp.train.n_classes);
  const auto a = check_assumptions(spec_t, spec_s, sp.train, sp.test, stage_train(c, seed, "strength"),
                                   c.strength_tolerance);
  return {num(gamma), std::to_string(seed), std::to_string(a.capacity_teacher),
          std::to_string(a.capacity_student), num(a.acc_a), num(a.acc_b)};
}

inline TableResult run_check_assumptions(const ExperimentConfig& c, const RunOptions& opt = {}) {
  c.validate();
  std::filesystem::create_directories(c.output_dir);
  std::vector<Group> groups;
  for (double g : c.gap_gammas)
    for (auto s : c.seeds)
      groups.push_back({group_id(g, s), {group_id(g, s)}, [&c, g, s](const std::vector<bool>&) {
                          return std::vector<Row>{assumption_row(c, g, s, make_split(c, g, s))};
                        }});
  return run_table(out_path(c, "assumptions.csv"), config_hash(c), assumption_columns(), groups, opt,
                   "check-assumptions");
}

// ---------------------------------------------------------------------------
// Gap sweep

inline const std::vector<std::string>& gamma_columns() {
  static const std::vector<std::string> c = {
      "gamma", "gamma_realized", "seed", "d_shared", "teacher_acc", "ce_acc", "student_acc",
      "tckl_tail10", "nckl_tail10", "tcjsd_tail10", "ncjsd_tail10",
      "capacity_teacher", "capacity_student", "acc_a", "acc_b"};
  return c;
}

inline TableResult run_gamma_sweep(const ExperimentConfig& c, const RunOptions& opt = {}) {
  c.validate();
  std::filesystem::create_directories(c.output_dir);
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<Group> groups;
  for (double g : c.gap_gammas)
    for (auto s : c.seeds)
      groups.push_back({group_id(g, s), {group_id(g, s)}, [&c, g, s](const std::vector<bool>&) {
                          const SplitPair sp = make_split(c, g, s);
                          Row strength = assumption_row(c, g, s, sp);
                          const TrainConfig tt = stage_train(c, s, "teacher");
                          const auto teacher = train_teacher(sp.train.x_a, sp.train.y, sp.train.n_classes, tt);
                          TrainConfig st = stage_train(c, s, "student");
                          st.kd.mode = KdMode::vanilla;
                          const auto ce = train_teacher(sp.train.x_b, sp.train.y, sp.train.n_classes, st);
                          const auto student = distill_student(sp.train, sp.test, teacher.params, st);
                          const auto& rep = student.report;
                          return std::vector<Row>{{num(g), num(sp.train.gamma), std::to_string(s),
                                                   std::to_string(sp.train.d_t),
                                                   num(evaluate(teacher.params, sp.test.x_a, sp.test.y)),
                                                   num(evaluate(ce.params, sp.test.x_b, sp.test.y)),
                                                   num(rep.final_accuracy), num(rep.tail_mean(&EpochRow::tckl)),
                                                   num(rep.tail_mean(&EpochRow::nckl)),
                                                   num(rep.tail_mean(&EpochRow::tcjsd)),
                                                   num(rep.tail_mean(&EpochRow::ncjsd)), strength[2], strength[3],
                                                   strength[4], strength[5]}};
                        }});
  auto res = run_table(out_path(c, "gamma_sweep.csv"), config_hash(c), gamma_columns(), groups, opt,
                       "sweep-gamma");

  Summary acc, div;
  for (std::size_t r = 0; r < res.table.rows.size(); ++r) {
    const double g = res.table.num(r, "gamma");
    acc.add("student (KD)", g, res.table.num(r, "student_acc"));
    acc.add("teacher", g, res.table.num(r, "teacher_acc"));
    acc.add("no-KD student", g, res.table.num(r, "ce_acc"));
    div.add("TCJSD (last 10 epochs)", g, res.table.num(r, "tcjsd_tail10"));
    div.add("NCJSD (last 10 epochs)", g, res.table.num(r, "ncjsd_tail10"));
  }
  acc.write(out_path(c, "gamma_sweep_accuracy_summary.csv"));
  div.write(out_path(c, "gamma_sweep_divergence_summary.csv"));
  plot_summary(c, "gamma_sweep_accuracy_summary", "Accuracy vs modality gap", "gap gamma", "test accuracy");
  plot_summary(c, "gamma_sweep_divergence_summary", "Teacher/student divergence vs modality gap",
               "gap gamma", "JSD");
  write_manifest(c, "sweep-gamma",
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return res;
}

// ---------------------------------------------------------------------------
// Weight sweep

inline const std::vector<std::string>& weight_columns() {
  static const std::vector<std::string> c = {"gamma", "seed", "sub", "alpha", "beta", "student_acc"};
  return c;
}

struct WeightCell {
  std::string sub;  // ce | vanilla | alpha | beta | contrast
  double alpha = 0.0, beta = 0.0;
  std::string suffix;
};

inline std::vector<WeightCell> weight_cells(const ExperimentConfig& c) {
  std::vector<WeightCell> v = {{"ce", 0, 0, "ce"}, {"vanilla", 0, 0, "vanilla"}};
  for (double a : c.alpha_grid) v.push_back({"alpha", a, 1.0, "alpha" + label(a)});
  for (double b : c.beta_grid) v.push_back({"beta", 1.0, b, "beta" + label(b)});
  const double amax = *std::max_element(c.alpha_grid.begin(), c.alpha_grid.end());
  const double amin = *std::min_element(c.alpha_grid.begin(), c.alpha_grid.end());
  const double bmax = *std::max_element(c.beta_grid.begin(), c.beta_grid.end());
  const double bmin = *std::min_element(c.beta_grid.begin(), c.beta_grid.end());
  v.push_back({"contrast", amax, bmin, "contrast_a" + label(amax) + "_b" + label(bmin)});
  v.push_back({"contrast", amin, bmax, "contrast_a" + label(amin) + "_b" + label(bmax)});
  return v;
}

inline TableResult run_weight_sweep(const ExperimentConfig& c, const RunOptions& opt = {}) {
  c.validate();
  std::filesystem::create_directories(c.output_dir);
  const auto t0 = std::chrono::steady_clock::now();
  const auto cells = weight_cells(c);
  std::vector<Group> groups;
  for (double g : c.gap_gammas)
    for (auto s : c.seeds) {
      Group grp;
      grp.id = group_id(g, s);
      for (const auto& wc : cells) grp.cells.push_back(grp.id + "_" + wc.suffix);
      grp.run = [&c, g, s, cells](const std::vector<bool>& need) {
        const SplitPair sp = make_split(c, g, s);
        const auto teacher =
            train_teacher(sp.train.x_a, sp.train.y, sp.train.n_classes, stage_train(c, s, "teacher"));
        std::vector<Row> rows(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
          if (!need[i]) continue;
          const auto& wc = cells[i];
          TrainConfig st = stage_train(c, s, "student");
          double acc;
          if (wc.sub == "ce") {
            acc = evaluate(train_teacher(sp.train.x_b, sp.train.y, sp.train.n_classes, st).params, sp.test.x_b,
                           sp.test.y);
          } else {
            st.kd.mode = wc.sub == "vanilla" ? KdMode::vanilla : KdMode::decoupled;
            st.kd.alpha = wc.sub == "vanilla" ? 1.0 : wc.alpha;
            st.kd.beta = wc.sub == "vanilla" ? 1.0 : wc.beta;
            acc = distill_student(sp.train, sp.test, teacher.params, st).report.final_accuracy;
          }
          const bool weighted = wc.sub != "ce" && wc.sub != "vanilla";
          rows[i] = {num(g), std::to_string(s), wc.sub, weighted ? num(wc.alpha) : "na",
                     weighted ? num(wc.beta) : "na", num(acc)};
        }
        return rows;
      };
      groups.push_back(std::move(grp));
    }
  auto res = run_table(out_path(c, "weight_sweep.csv"), config_hash(c), weight_columns(), groups, opt,
                       "sweep-weights");

  Summary sa, sb;
  for (std::size_t r = 0; r < res.table.rows.size(); ++r) {
    const double g = res.table.num(r, "gamma");
    const double acc = res.table.num(r, "student_acc");
    const std::string& sub = res.table.str(r, "sub");
    if (sub == "ce" || sub == "vanilla") {
      const std::string name = sub == "ce" ? "no-KD student" : "vanilla KD";
      sa.add(name, g, acc);
      sb.add(name, g, acc);
    } else if (sub == "alpha") {
      sa.add("alpha=" + res.table.str(r, "alpha") + " (beta=1)", g, acc);
    } else if (sub == "beta") {
      sb.add("beta=" + res.table.str(r, "beta") + " (alpha=1)", g, acc);
    }
  }
  sa.write(out_path(c, "weight_sweep_alpha_summary.csv"));
  sb.write(out_path(c, "weight_sweep_beta_summary.csv"));
  plot_summary(c, "weight_sweep_alpha_summary", "Decoupled KD, target weight alpha", "gap gamma",
               "test accuracy");
  plot_summary(c, "weight_sweep_beta_summary", "Decoupled KD, non-target weight beta", "gap gamma",
               "test accuracy");
  write_manifest(c, "sweep-weights",
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return res;
}

// ---------------------------------------------------------------------------
// Mask sweeps

inline const std::vector<MaskMode>& all_mask_modes() {
  static const std::vector<MaskMode> m = {MaskMode::true_mask, MaskMode::false_mask, MaskMode::random_mask};
  return m;
}

inline const std::vector<std::string>& saliency_columns() {
  static const std::vector<std::string> c = {"gamma", "seed", "index", "provenance", "saliency",
                                             "permuted_ncjsd", "baseline_ncjsd"};
  return c;
}

inline const std::vector<std::string>& feature_mask_columns() {
  static const std::vector<std::string> c = {"gamma", "seed", "mode", "ratio", "n_masked", "masked",
                                             "teacher_acc", "student_acc"};
  return c;
}

inline std::string join_indices(const std::vector<std::size_t>& idx) {
  std::string s;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (i) s += ';';
    s += std::to_string(idx[i]);
  }
  return s.empty() ? "-" : s;
}

inline void write_mask_summary(const ExperimentConfig& c, const CsvTable& t, const std::string& stem_prefix,
                               const std::string& title_prefix) {
  for (double g : c.mask_gammas) {
    Summary sum;
    std::map<std::uint64_t, std::vector<double>> base, ce;
    std::set<double> ratios;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      if (t.num(r, "gamma") != g) continue;
      const std::string& mode = t.str(r, "mode");
      const double acc = t.num(r, "student_acc");
      if (mode == "none") base[0].push_back(acc);
      else if (mode == "ce") ce[0].push_back(acc);
      else {
        sum.add(mode + " mask", t.num(r, "ratio"), acc);
        ratios.insert(t.num(r, "ratio"));
      }
    }
    for (double x : ratios) {
      for (double v : base[0]) sum.add("unmasked KD", x, v);
      for (double v : ce[0]) sum.add("no-KD student", x, v);
    }
    const std::string stem = stem_prefix + "_g" + label(g);
    sum.write(out_path(c, stem + ".csv"));
    plot_summary(c, stem, title_prefix + " (gap " + label(g) + ")", "mask ratio", "test accuracy");
  }
}

inline TableResult run_feature_mask_sweep(const ExperimentConfig& c, const RunOptions& opt = {}) {
  c.validate();
  std::filesystem::create_directories(c.output_dir);
  const auto t0 = std::chrono::steady_clock::now();
  const std::string hash = config_hash(c);

  // Stage 1: saliency per (gap, seed). Values are stored round-trippable and
  // the masks below are always built from the parsed text, so a resumed run
  // and a fresh run use identical plans.
  std::vector<Group> sal_groups;
  for (double g : c.mask_gammas)
    for (auto s : c.seeds) {
      Group grp;
      grp.id = group_id(g, s);
      for (std::size_t i = 0; i < c.gen.d_total; ++i) grp.cells.push_back(grp.id + "_col" + std::to_string(i));
      grp.run = [&c, g, s](const std::vector<bool>&) {
        const SplitPair sp = make_split(c, g, s);
        JointTrainConfig jc;
        jc.epochs = c.joint_epochs;
        jc.batch_size = c.train.batch_size;
        jc.sgd = c.train.sgd;
        jc.seed = stage_seed(c, s, "joint");
        const auto spec = c.train.spec_for(sp.train.x_a.cols(), sp.train.n_classes);
        const auto nets = joint_train_unimodal(sp.train, spec, jc);
        FeatureSaliencyOptions fo;
        fo.repeats = c.saliency_repeats;
        fo.seed = stage_seed(c, s, "saliency");
        fo.subtract_baseline = c.subtract_baseline;
        const auto sal = feature_saliency(sp.train.x_a, sp.train.x_b, sp.train.y, nets.f_a, nets.f_b, fo);
        std::vector<Row> rows;
        for (std::size_t i = 0; i < sal.saliency.values.size(); ++i)
          rows.push_back({num(g), std::to_string(s), std::to_string(i), to_string(sp.train.columns_a[i].provenance),
                          detail::fmt_double(sal.saliency.values[i]), num(sal.permuted_ncjsd[i]),
                          num(sal.baseline_ncjsd)});
        return rows;
      };
      sal_groups.push_back(std::move(grp));
    }
  const auto sal = run_table(out_path(c, "feature_saliency.csv"), hash, saliency_columns(), sal_groups, opt,
                             "feature-saliency");

  // Stage 2: masked teachers and students.
  std::vector<Group> groups;
  for (double g : c.mask_gammas)
    for (auto s : c.seeds) {
      Group grp;
      grp.id = group_id(g, s);
      grp.cells = {grp.id + "_ce", grp.id + "_none"};
      for (auto m : all_mask_modes())
        for (double r : c.mask_ratios) grp.cells.push_back(grp.id + "_" + to_string(m) + label(r));
      std::vector<double> saliency;
      for (std::size_t i = 0; i < c.gen.d_total; ++i)
        saliency.push_back(detail::parse_double(sal.fields(grp.id + "_col" + std::to_string(i))[6]));
      grp.run = [&c, g, s, saliency](const std::vector<bool>& need) {
        const SplitPair sp = make_split(c, g, s);
        const TrainConfig tt = stage_train(c, s, "teacher");
        const TrainConfig st = stage_train(c, s, "student");
        std::vector<Row> rows;
        auto row = [&](const std::string& mode, double ratio, const MaskPlan* plan, double t_acc, double s_acc) {
          rows.push_back({num(g), std::to_string(s), mode, num(ratio),
                          std::to_string(plan ? plan->indices.size() : 0),
                          plan ? join_indices(plan->indices) : "-", num(t_acc), num(s_acc)});
        };
        std::size_t k = 0;
        if (need[k++]) {
          const auto ce = train_teacher(sp.train.x_b, sp.train.y, sp.train.n_classes, st);
          row("ce", 0.0, nullptr, 0.0, evaluate(ce.params, sp.test.x_b, sp.test.y));
        } else {
          rows.emplace_back();
        }
        if (need[k++]) {
          const auto teacher = train_teacher(sp.train.x_a, sp.train.y, sp.train.n_classes, tt);
          const auto student = distill_student(sp.train, sp.test, teacher.params, st);
          row("none", 0.0, nullptr, evaluate(teacher.params, sp.test.x_a, sp.test.y),
              student.report.final_accuracy);
        } else {
          rows.emplace_back();
        }
        for (auto m : all_mask_modes())
          for (double r : c.mask_ratios) {
            if (!need[k++]) {
              rows.emplace_back();
              continue;
            }
            TrainConfig sc = st;
            sc.mask.kind = MaskKind::feature;
            sc.mask.mode = m;
            sc.mask.ratio = r;
            sc.mask.feature_plan = build_mask_plan(saliency, m, r,
                                                   derive_seed(c.master_seed, s, hash_tag("random_feature_mask"),
                                                               value_bits(g), value_bits(r)));
            const Matrix xa_train = teacher_input(sp.train.x_a, sc.mask);
            const Matrix xa_test = teacher_input(sp.test.x_a, sc.mask);
            const auto teacher = train_teacher(xa_train, sp.train.y, sp.train.n_classes, tt);
            const auto student = distill_student(sp.train, sp.test, teacher.params, sc);
            row(to_string(m), r, &*sc.mask.feature_plan, evaluate(teacher.params, xa_test, sp.test.y),
                student.report.final_accuracy);
          }
        return rows;
      };
      groups.push_back(std::move(grp));
    }
  auto res = run_table(out_path(c, "feature_mask_sweep.csv"), hash, feature_mask_columns(), groups, opt,
                       "sweep-feature-mask");
  write_mask_summary(c, res.table, "feature_mask_summary", "Feature mask");
  write_manifest(c, "sweep-feature-mask",
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return res;
}

inline const std::vector<std::string>& sample_mask_columns() {
  static const std::vector<std::string> c = {"gamma", "seed", "mode", "ratio", "student_acc"};
  return c;
}

inline TableResult run_sample_mask_sweep(const ExperimentConfig& c, const RunOptions& opt = {}) {
  c.validate();
  std::filesystem::create_directories(c.output_dir);
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<Group> groups;
  for (double g : c.mask_gammas)
    for (auto s : c.seeds) {
      Group grp;
      grp.id = group_id(g, s);
      grp.cells = {grp.id + "_ce", grp.id + "_none"};
      for (auto m : all_mask_modes())
        for (double r : c.sample_mask_ratios) grp.cells.push_back(grp.id + "_" + to_string(m) + label(r));
      grp.run = [&c, g, s](const std::vector<bool>& need) {
        const SplitPair sp = make_split(c, g, s);
        const auto teacher =
            train_teacher(sp.train.x_a, sp.train.y, sp.train.n_classes, stage_train(c, s, "teacher"));
        const TrainConfig st = stage_train(c, s, "student");
        std::vector<Row> rows;
        std::size_t k = 0;
        if (need[k++]) {
          const auto ce = train_teacher(sp.train.x_b, sp.train.y, sp.train.n_classes, st);
          rows.push_back({num(g), std::to_string(s), "ce", num(0.0),
                          num(evaluate(ce.params, sp.test.x_b, sp.test.y))});
        } else {
          rows.emplace_back();
        }
        if (need[k++]) {
          rows.push_back({num(g), std::to_string(s), "none", num(0.0),
                          num(distill_student(sp.train, sp.test, teacher.params, st).report.final_accuracy)});
        } else {
          rows.emplace_back();
        }
        for (auto m : all_mask_modes())
          for (double r : c.sample_mask_ratios) {
            if (!need[k++]) {
              rows.emplace_back();
              continue;
            }
            TrainConfig sc = st;
            sc.mask.kind = MaskKind::sample;
            sc.mask.mode = m;
            sc.mask.ratio = r;
            sc.mask.drop_whole_sample = c.drop_whole_sample;
            // Random sample masks draw from derive_seed(student seed, "sample_mask", epoch, batch).
            rows.push_back({num(g), std::to_string(s), to_string(m), num(r),
                            num(distill_student(sp.train, sp.test, teacher.params, sc).report.final_accuracy)});
          }
        return rows;
      };
      groups.push_back(std::move(grp));
    }
  auto res = run_table(out_path(c, "sample_mask_sweep.csv"), config_hash(c), sample_mask_columns(), groups,
                       opt, "sweep-sample-mask");
  write_mask_summary(c, res.table, "sample_mask_summary", "Sample mask");
  write_manifest(c, "sweep-sample-mask",
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return res;
}

inline TableResult run_experiment(const ExperimentConfig& c, const RunOptions& opt = {}) {
  switch (c.experiment) {
    case ExperimentKind::gamma_sweep: return run_gamma_sweep(c, opt);
    case ExperimentKind::weight_sweep: return run_weight_sweep(c, opt);
    case ExperimentKind::feature_mask_sweep: return run_feature_mask_sweep(c, opt);
    case ExperimentKind::sample_mask_sweep: return run_sample_mask_sweep(c, opt);
  }
  throw ConfigError("unknown experiment");
}

}  // namespace ntdh::exp
