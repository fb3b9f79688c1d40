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

// Simulated two-modality classification data.
//
// The base dataset has 2*d_b decisive columns: each class sits on a vertex of
// the hypercube {-sep, +sep}^(2 d_b) and samples add unit Gaussian noise. The
// student view keeps base columns [0, d_b); the teacher view keeps
// [0, d_t) and [d_b, d_a) with d_a = round(d_b (1 + gamma)) and
// d_t = 2 d_b - d_a, so both views hold exactly d_b decisive columns and
// share d_t of them. Both views are padded with noise to d_total columns.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "ntdh/error.hpp"
#include "ntdh/matrix.hpp"
#include "ntdh/rng.hpp"

namespace ntdh {

/// independent: all 2*d_b centroid coordinates drawn at random.
/// mirrored: base column d_b + j repeats column d_b - 1 - j, so every teacher
///   window is a column permutation of the student window.
/// permuted_mirror: as mirrored, but the second half takes its values from a
///   seeded class permutation, so the fully disjoint views disagree on which
///   classes are neighbours.
enum class CentroidLayout { independent, mirrored, permuted_mirror };

struct GenConfig {
  std::size_t n_samples = 6000;
  std::size_t n_classes = 10;
  /// Base decisive block length (2 * d_b when feeding split_modalities).
  std::size_t d_decisive = 16;
  std::size_t d_total = 24;
  double class_sep = 1.0;
  std::uint64_t rng_seed = 1;
  /// When d_decisive is even, every teacher/student column window
  /// (one per realizable gamma) keeps all class centroids at least
  /// `min_view_hamming` coordinates apart.
  bool view_balanced = true;
  std::size_t min_view_hamming = 2;
  /// How the second decisive half relates to the first (even d_decisive).
  CentroidLayout layout = CentroidLayout::mirrored;

  void validate() const {
    detail::require(n_classes >= 2, "GenConfig: n_classes must be >= 2");
    detail::require(d_decisive >= 1, "GenConfig: d_decisive must be >= 1");
    detail::require(d_total >= d_decisive, "GenConfig: d_total must be >= d_decisive");
    detail::require(std::isfinite(class_sep) && class_sep >= 0.0,
                    "GenConfig: class_sep must be finite and >= 0");
    detail::require(n_samples >= 2 * n_classes,
                    "GenConfig: need at least 2 samples per class");
  }
};

struct LabeledDataset {
  Matrix x;
  std::vector<std::size_t> y;
  std::size_t n_classes = 0;
  /// Centroid sign pattern (+1/-1) per class, d_decisive entries each.
  std::vector<std::vector<int>> centroid_signs;
};

enum class Provenance { shared_decisive, exclusive_decisive, noise };

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::shared_decisive: return "shared-decisive";
    case Provenance::exclusive_decisive: return "exclusive-decisive";
    case Provenance::noise: return "noise";
  }
  return "?";
}

struct ColumnInfo {
  Provenance provenance;
  /// Base column index, or -1 for noise.
  int source;
  friend bool operator==(const ColumnInfo&, const ColumnInfo&) = default;
};

struct ModalityPair {
  Matrix x_a;  // teacher view
  Matrix x_b;  // student view
  std::vector<std::size_t> y;
  std::size_t n_classes = 0;
  double gamma = 0.0;  // realized (d_a - d_b) / d_b
  std::size_t d_b = 0, d_a = 0, d_t = 0;
  std::vector<ColumnInfo> columns_a;
  std::vector<ColumnInfo> columns_b;

  std::size_t size() const noexcept { return y.size(); }
};

namespace detail {

/// Column index set of the teacher's decisive block for a given d_t.
inline std::vector<std::size_t> teacher_window(std::size_t d_b, std::size_t d_t) {
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < d_t; ++c) cols.push_back(c);
  for (std::size_t c = d_b; c < 2 * d_b - d_t; ++c) cols.push_back(c);
  return cols;
}

inline std::size_t hamming_on(const std::vector<int>& a, const std::vector<int>& b,
                              const std::vector<std::size_t>& cols) {
  std::size_t h = 0;
  for (auto c : cols) h += a[c] != b[c] ? 1 : 0;
  return h;
}

inline std::vector<std::vector<int>> choose_centroids(const GenConfig& cfg, Rng& rng) {
  const std::size_t d = cfg.d_decisive;
  if (d < 63 && cfg.n_classes > (std::size_t{1} << d))
    throw InfeasibleConfig("generate_base: " + std::to_string(cfg.n_classes) +
                           " classes exceed the 2^" + std::to_string(d) + " hypercube vertices");

  std::vector<std::vector<std::size_t>> windows;
  std::size_t min_h = 1;
  if (cfg.view_balanced && d % 2 == 0) {
    const std::size_t d_b = d / 2;
    for (std::size_t d_t = 0; d_t <= d_b; ++d_t) windows.push_back(teacher_window(d_b, d_t));
    min_h = std::max<std::size_t>(1, cfg.min_view_hamming);
  } else {
    std::vector<std::size_t> all(d);
    for (std::size_t c = 0; c < d; ++c) all[c] = c;
    windows.push_back(std::move(all));
  }

  const bool mirror = cfg.layout != CentroidLayout::independent && d % 2 == 0;
  const std::size_t d_draw = mirror ? d / 2 : d;
  // For the mirrored layouts every view is a permutation of the first half,
  // so the first half alone carries the separation constraint.
  std::vector<std::size_t> first_half(d_draw);
  for (std::size_t c = 0; c < d_draw; ++c) first_half[c] = c;
  const auto& draw_windows = mirror ? std::vector<std::vector<std::size_t>>{first_half} : windows;

  auto fits = [&](const std::vector<std::vector<int>>& chosen, const std::vector<int>& cand,
                  const std::vector<std::vector<std::size_t>>& ws) {
    for (const auto& prev : chosen)
      for (const auto& w : ws)
        if (hamming_on(prev, cand, w) < min_h) return false;
    return true;
  };

  constexpr int kRestarts = 200;
  constexpr int kTriesPerClass = 2000;
  for (int restart = 0; restart < kRestarts; ++restart) {
    std::vector<std::vector<int>> chosen;
    while (chosen.size() < cfg.n_classes) {
      bool placed = false;
      for (int t = 0; t < kTriesPerClass && !placed; ++t) {
        std::vector<int> cand(d_draw);
        for (auto& s : cand) s = (rng.next_u64() >> 63) ? 1 : -1;
        if (fits(chosen, cand, draw_windows)) {
          chosen.push_back(std::move(cand));
          placed = true;
        }
      }
      if (!placed) break;
    }
    if (chosen.size() != cfg.n_classes) continue;
    if (!mirror) return chosen;

    std::vector<std::size_t> perm(cfg.n_classes);
    for (std::size_t k = 0; k < perm.size(); ++k) perm[k] = k;
    if (cfg.layout == CentroidLayout::permuted_mirror) rng.shuffle(std::span<std::size_t>(perm));
    std::vector<std::vector<int>> full(cfg.n_classes, std::vector<int>(d));
    for (std::size_t k = 0; k < cfg.n_classes; ++k)
      for (std::size_t c = 0; c < d_draw; ++c) {
        full[k][c] = chosen[k][c];
        full[k][d_draw + c] = chosen[perm[k]][d_draw - 1 - c];
      }
    bool ok = true;
    for (std::size_t k = 1; k < full.size() && ok; ++k) {
      std::vector<std::vector<int>> prev(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(k));
      ok = fits(prev, full[k], windows);
    }
    if (ok) return full;
  }
  throw InfeasibleConfig("generate_base: could not place " + std::to_string(cfg.n_classes) +
                         " centroids with the requested view separation");
}

}  // namespace detail

/// Balanced labels, hypercube-vertex centroids, unit Gaussian noise.
inline LabeledDataset generate_base(const GenConfig& cfg) {
  cfg.validate();
  Rng rng(derive_seed(cfg.rng_seed, hash_tag("generate_base")));
  LabeledDataset ds;
  ds.n_classes = cfg.n_classes;
  ds.centroid_signs = detail::choose_centroids(cfg, rng);

  ds.y.resize(cfg.n_samples);
  for (std::size_t i = 0; i < cfg.n_samples; ++i) ds.y[i] = i % cfg.n_classes;
  rng.shuffle(std::span<std::size_t>(ds.y));

  ds.x = Matrix(cfg.n_samples, cfg.d_decisive);
  for (std::size_t i = 0; i < cfg.n_samples; ++i) {
    const auto& signs = ds.centroid_signs[ds.y[i]];
    auto r = ds.x.row(i);
    for (std::size_t c = 0; c < cfg.d_decisive; ++c)
      r[c] = cfg.class_sep * signs[c] + rng.normal();
  }
  return ds;
}

/// Builds the teacher (a) and student (b) views. The base must carry 2*d_b
/// decisive columns; d_b = base width / 2.
inline ModalityPair split_modalities(const LabeledDataset& base, double gamma,
                                     std::size_t d_total, std::uint64_t rng_seed,
                                     bool shared_noise = false) {
  detail::require(std::isfinite(gamma) && gamma >= 0.0 && gamma <= 1.0,
                  "split_modalities: gamma must lie in [0, 1]");
  const std::size_t d_b = base.x.cols() / 2;
  detail::require(d_b >= 1, "split_modalities: base needs at least 2 decisive columns");
  const auto d_a = static_cast<std::size_t>(std::lround(static_cast<double>(d_b) * (1.0 + gamma)));
  const std::size_t d_t = 2 * d_b - d_a;
  detail::require(d_total >= d_b, "split_modalities: d_total must be >= d_b");

  ModalityPair pair;
  pair.y = base.y;
  pair.n_classes = base.n_classes;
  pair.d_b = d_b;
  pair.d_a = d_a;
  pair.d_t = d_t;
  pair.gamma = static_cast<double>(d_a - d_b) / static_cast<double>(d_b);

  const std::size_t n = base.x.rows();
  const std::size_t d_noise = d_total - d_b;
  const auto teacher_cols = detail::teacher_window(d_b, d_t);

  for (std::size_t c = 0; c < d_b; ++c)
    pair.columns_b.push_back(
        {c < d_t ? Provenance::shared_decisive : Provenance::exclusive_decisive, static_cast<int>(c)});
  for (auto c : teacher_cols)
    pair.columns_a.push_back(
        {c < d_t ? Provenance::shared_decisive : Provenance::exclusive_decisive, static_cast<int>(c)});
  for (std::size_t c = 0; c < d_noise; ++c) {
    pair.columns_a.push_back({Provenance::noise, -1});
    pair.columns_b.push_back({Provenance::noise, -1});
  }

  Rng rng_a(derive_seed(rng_seed, hash_tag("noise_a")));
  Rng rng_b(derive_seed(rng_seed, hash_tag("noise_b")));
  pair.x_a = Matrix(n, d_total);
  pair.x_b = Matrix(n, d_total);
  for (std::size_t i = 0; i < n; ++i) {
    auto src = base.x.row(i);
    auto ra = pair.x_a.row(i);
    auto rb = pair.x_b.row(i);
    for (std::size_t c = 0; c < d_b; ++c) {
      rb[c] = src[c];
      ra[c] = src[teacher_cols[c]];
    }
    for (std::size_t c = 0; c < d_noise; ++c) {
      const double zb = rng_b.normal();
      const double za = shared_noise ? zb : rng_a.normal();
      rb[d_b + c] = zb;
      ra[d_b + c] = za;
    }
  }
  return pair;
}

/// Rows `idx` of a pair, in the given order.
inline ModalityPair subset(const ModalityPair& pair, std::span<const std::size_t> idx) {
  ModalityPair out = pair;
  out.x_a = pair.x_a.select_rows(idx);
  out.x_b = pair.x_b.select_rows(idx);
  out.y.clear();
  for (auto i : idx) out.y.push_back(pair.y[i]);
  return out;
}

struct SplitPair {
  ModalityPair train;
  ModalityPair test;
};

/// Stratified split; each class contributes round(test_fraction * count)
/// samples (clamped to [1, count-1]) to the test side.
inline SplitPair train_test_split(const ModalityPair& pair, double test_fraction,
                                  std::uint64_t rng_seed) {
  detail::require(test_fraction > 0.0 && test_fraction < 1.0,
                  "train_test_split: test_fraction must lie in (0, 1)");
  std::vector<std::vector<std::size_t>> by_class(pair.n_classes);
  for (std::size_t i = 0; i < pair.size(); ++i) {
    detail::require(pair.y[i] < pair.n_classes, "train_test_split: label out of range");
    by_class[pair.y[i]].push_back(i);
  }
  Rng rng(derive_seed(rng_seed, hash_tag("train_test_split")));
  std::vector<std::size_t> train_idx, test_idx;
  for (auto& members : by_class) {
    if (members.empty()) continue;
    detail::require(members.size() >= 2, "train_test_split: every class needs >= 2 samples");
    rng.shuffle(std::span<std::size_t>(members));
    auto n_test = static_cast<std::size_t>(
        std::lround(test_fraction * static_cast<double>(members.size())));
    n_test = std::clamp<std::size_t>(n_test, 1, members.size() - 1);
    test_idx.insert(test_idx.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_test));
    train_idx.insert(train_idx.end(), members.begin() + static_cast<std::ptrdiff_t>(n_test), members.end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return {subset(pair, train_idx), subset(pair, test_idx)};
}

/// `y,a_0..a_{d-1},b_0..b_{d-1}` with round-trippable doubles.
inline void write_pair_csv(const std::string& path, const ModalityPair& pair) {
  std::ofstream os(path);
  if (!os) throw InvalidArgument("write_pair_csv: cannot open " + path);
  os << 'y';
  for (std::size_t c = 0; c < pair.x_a.cols(); ++c) os << ",a_" << c;
  for (std::size_t c = 0; c < pair.x_b.cols(); ++c) os << ",b_" << c;
  os << '\n';
  char buf[32];
  for (std::size_t i = 0; i < pair.size(); ++i) {
    os << pair.y[i];
    for (double v : pair.x_a.row(i)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      os << ',' << buf;
    }
    for (double v : pair.x_b.row(i)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      os << ',' << buf;
    }
    os << '\n';
  }
}

/// Sidecar `view,index,provenance`.
inline void write_column_map_csv(const std::string& path, const ModalityPair& pair) {
  std::ofstream os(path);
  if (!os) throw InvalidArgument("write_column_map_csv: cannot open " + path);
  os << "view,index,provenance\n";
  for (std::size_t c = 0; c < pair.columns_a.size(); ++c)
    os << "a," << c << ',' << to_string(pair.columns_a[c].provenance) << '\n';
  for (std::size_t c = 0; c < pair.columns_b.size(); ++c)
    os << "b," << c << ',' << to_string(pair.columns_b[c].provenance) << '\n';
}

}  // namespace ntdh
