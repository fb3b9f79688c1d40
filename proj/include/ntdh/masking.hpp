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

// NCJSD-based saliency and masking.
//
// Feature mode: two unimodal networks are trained jointly (symmetric KL +
// both cross-entropies); each teacher-input column is then shuffled across
// the batch M times and the batch-mean NCJSD between the two networks is
// recorded. Sample mode: per-sample NCJSD between given teacher and student
// predictions. Both are normalized by their maximum.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "ntdh/batching.hpp"
#include "ntdh/datagen.hpp"
#include "ntdh/divergence.hpp"
#include "ntdh/error.hpp"
#include "ntdh/losses.hpp"
#include "ntdh/mlp.hpp"
#include "ntdh/prob.hpp"
#include "ntdh/rng.hpp"
#include "ntdh/sgd.hpp"

namespace ntdh {

enum class SaliencyMode { feature, sample };

struct SaliencyVector {
  std::vector<double> values;
  SaliencyMode mode = SaliencyMode::feature;
  /// All raw scores were zero; values are left at zero.
  bool degenerate = false;
  /// Indices sorted by descending score, ties in ascending index order.
  std::vector<std::size_t> order;
};

enum class MaskMode { true_mask, false_mask, random_mask };

inline const char* to_string(MaskMode m) {
  switch (m) {
    case MaskMode::true_mask: return "true";
    case MaskMode::false_mask: return "false";
    case MaskMode::random_mask: return "random";
  }
  return "?";
}

struct MaskPlan {
  MaskMode mode = MaskMode::true_mask;
  double ratio = 0.0;
  std::size_t total = 0;
  /// Sorted, unique, < total.
  std::vector<std::size_t> indices;
  std::uint64_t rng_seed = 0;
};

namespace detail {

/// Stable descending order.
inline std::vector<std::size_t> descending_order(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
  return idx;
}

inline std::vector<std::size_t> ascending_order(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  return idx;
}

inline SaliencyVector normalize_scores(std::vector<double> raw, SaliencyMode mode) {
  SaliencyVector s;
  s.mode = mode;
  s.order = descending_order(raw);
  const double mx = raw.empty() ? 0.0 : *std::max_element(raw.begin(), raw.end());
  if (!(mx > 0.0)) {
    s.degenerate = true;
    s.values.assign(raw.size(), 0.0);
    return s;
  }
  for (double& v : raw) v /= mx;
  s.values = std::move(raw);
  return s;
}

/// Batch-mean NCJSD between row-wise softmaxes, k = label.
inline double mean_ncjsd(const Matrix& logits_a, std::span<const ProbDist> probs_b,
                         std::span<const std::size_t> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i)
    s += ncjsd(softmax(logits_a.row(i)), probs_b[i], y[i]);
  return s / static_cast<double>(y.size());
}

}  // namespace detail

inline std::size_t mask_count(double ratio, std::size_t total) {
  return static_cast<std::size_t>(std::lround(ratio * static_cast<double>(total)));
}

/// true_mask takes the largest scores, false_mask the smallest, random_mask a
/// uniform subset without replacement. Ties resolve to the lower index.
inline MaskPlan build_mask_plan(std::span<const double> scores, MaskMode mode, double ratio,
                                std::uint64_t rng_seed = 0) {
  detail::require(ratio >= 0.0 && ratio <= 1.0, "build_mask_plan: ratio must lie in [0, 1]");
  MaskPlan plan{mode, ratio, scores.size(), {}, rng_seed};
  const std::size_t count = mask_count(ratio, scores.size());
  std::vector<std::size_t> ranked;
  switch (mode) {
    case MaskMode::true_mask: ranked = detail::descending_order(scores); break;
    case MaskMode::false_mask: ranked = detail::ascending_order(scores); break;
    case MaskMode::random_mask: {
      ranked.resize(scores.size());
      std::iota(ranked.begin(), ranked.end(), std::size_t{0});
      Rng rng(derive_seed(rng_seed, hash_tag("random_mask")));
      rng.shuffle(std::span<std::size_t>(ranked));
      break;
    }
  }
  plan.indices.assign(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(count));
  std::sort(plan.indices.begin(), plan.indices.end());
  return plan;
}

inline MaskPlan build_feature_mask(const SaliencyVector& saliency, MaskMode mode, double ratio,
                                   std::uint64_t rng_seed = 0) {
  return build_mask_plan(saliency.values, mode, ratio, rng_seed);
}

/// Zero-fills the planned columns of a copy of `x`.
inline Matrix apply_feature_mask(const Matrix& x, const MaskPlan& plan) {
  detail::require(plan.total == x.cols(), "apply_feature_mask: plan was built for a different width");
  Matrix out = x;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (auto c : plan.indices) r[c] = 0.0;
  }
  return out;
}

/// Zeroes the distillation weight of planned samples.
inline std::vector<double> apply_sample_mask(std::span<const double> kd_term_weights,
                                             const MaskPlan& plan) {
  detail::require(plan.total == kd_term_weights.size(),
                  "apply_sample_mask: plan was built for a different batch size");
  std::vector<double> out(kd_term_weights.begin(), kd_term_weights.end());
  for (auto i : plan.indices) out[i] = 0.0;
  return out;
}

/// Per-sample NCJSD (k = label), normalized by its maximum.
inline SaliencyVector sample_saliency(std::span<const ProbDist> teacher_probs,
                                      std::span<const ProbDist> student_probs,
                                      std::span<const std::size_t> labels) {
  detail::require(teacher_probs.size() == student_probs.size() &&
                      teacher_probs.size() == labels.size(),
                  "sample_saliency: input lengths differ");
  std::vector<double> raw(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    raw[i] = ncjsd(teacher_probs[i], student_probs[i], labels[i]);
  return detail::normalize_scores(std::move(raw), SaliencyMode::sample);
}

struct JointTrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 64;
  SgdConfig sgd;
  std::uint64_t seed = 0;
};

struct UnimodalPair {
  MlpParams f_a;
  MlpParams f_b;
};

/// Per-sample logit gradients of 1/2 KL(p||q) + 1/2 KL(q||p), p = softmax(za),
/// q = softmax(zb). Returns the divergence value.
inline double symmetric_kl_grad(std::span<const double> za, std::span<const double> zb,
                                std::span<double> ga, std::span<double> gb) {
  const std::size_t c = za.size();
  std::vector<double> p(c), q(c), r(c);
  softmax_into(za, 1.0, p);
  softmax_into(zb, 1.0, q);
  double kl_pq = 0.0, kl_qp = 0.0;
  for (std::size_t j = 0; j < c; ++j) {
    p[j] = std::max(p[j], kProbClamp);
    q[j] = std::max(q[j], kProbClamp);
    r[j] = std::log(p[j]) - std::log(q[j]);
    kl_pq += p[j] * r[j];
    kl_qp -= q[j] * r[j];
  }
  for (std::size_t j = 0; j < c; ++j) {
    ga[j] = 0.5 * (p[j] * (r[j] - kl_pq) + p[j] - q[j]);
    gb[j] = 0.5 * (q[j] * (-r[j] - kl_qp) + q[j] - p[j]);
  }
  return 0.5 * (kl_pq + kl_qp);
}

/// Trains f_a on x_a and f_b on x_b with
///   SymKL(f_a(x_a), f_b(x_b)) + CE(y, f_a(x_a)) + CE(y, f_b(x_b)).
inline UnimodalPair joint_train_unimodal(const ModalityPair& pair, const MlpSpec& spec,
                                         const JointTrainConfig& cfg) {
  detail::require(spec.input_size() == pair.x_a.cols() && spec.input_size() == pair.x_b.cols(),
                  "joint_train_unimodal: spec input size must match both views");
  detail::require(spec.output_size() == pair.n_classes,
                  "joint_train_unimodal: spec output size must equal the class count");
  detail::require(cfg.epochs >= 1 && cfg.batch_size >= 1, "joint_train_unimodal: bad schedule");
  UnimodalPair nets{MlpParams::init(spec, derive_seed(cfg.seed, hash_tag("joint_a"))),
                    MlpParams::init(spec, derive_seed(cfg.seed, hash_tag("joint_b")))};
  SgdOptimizer opt_a(nets.f_a, cfg.sgd), opt_b(nets.f_b, cfg.sgd);
  Rng rng(derive_seed(cfg.seed, hash_tag("joint_shuffle")));
  const std::size_t c = pair.n_classes;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& idx : epoch_batches(pair.size(), cfg.batch_size, rng)) {
      const Matrix xa = pair.x_a.select_rows(idx);
      const Matrix xb = pair.x_b.select_rows(idx);
      const auto y = gather(pair.y, idx);
      const auto cache_a = forward_cached(nets.f_a, xa);
      const auto cache_b = forward_cached(nets.f_b, xb);
      LossResult ce_a = cross_entropy_loss(cache_a.logits, y);
      LossResult ce_b = cross_entropy_loss(cache_b.logits, y);
      const double inv_n = 1.0 / static_cast<double>(idx.size());
      double dist = 0.0;
      std::vector<double> ga(c), gb(c);
      for (std::size_t i = 0; i < idx.size(); ++i) {
        dist += symmetric_kl_grad(cache_a.logits.row(i), cache_b.logits.row(i), ga, gb);
        auto ra = ce_a.grad.row(i);
        auto rb = ce_b.grad.row(i);
        for (std::size_t j = 0; j < c; ++j) {
          ra[j] += ga[j] * inv_n;
          rb[j] += gb[j] * inv_n;
        }
      }
      const double loss = dist * inv_n + ce_a.loss + ce_b.loss;
      if (!std::isfinite(loss)) throw TrainingFailure("joint_train_unimodal: non-finite loss", epoch);
      opt_a.step(nets.f_a, backward(nets.f_a, cache_a, ce_a.grad));
      opt_b.step(nets.f_b, backward(nets.f_b, cache_b, ce_b.grad));
    }
  }
  return nets;
}

struct FeatureSaliencyOptions {
  std::size_t repeats = 16;
  std::uint64_t seed = 0;
  /// Subtract the unpermuted NCJSD (floored at 0) before normalizing.
  /// When false, the raw permuted NCJSD is accumulated.
  bool subtract_baseline = true;
};

struct FeatureSaliencyResult {
  SaliencyVector saliency;
  /// Mean permuted NCJSD per column, before baseline subtraction.
  std::vector<double> permuted_ncjsd;
  double baseline_ncjsd = 0.0;
};

/// Permutation saliency of every teacher-input column of x_a.
inline FeatureSaliencyResult feature_saliency(const Matrix& x_a, const Matrix& x_b,
                                              std::span<const std::size_t> y,
                                              const MlpParams& f_a, const MlpParams& f_b,
                                              const FeatureSaliencyOptions& opt = {}) {
  detail::require(opt.repeats >= 1, "feature_saliency: repeats must be >= 1");
  detail::require(x_a.rows() == y.size() && x_b.rows() == y.size() && !y.empty(),
                  "feature_saliency: row counts differ");
  const auto probs_b = softmax_rows(forward(f_b, x_b));
  FeatureSaliencyResult res;
  res.baseline_ncjsd = detail::mean_ncjsd(forward(f_a, x_a), probs_b, y);

  const std::size_t n = x_a.rows(), d = x_a.cols();
  std::vector<double> raw(d, 0.0);
  res.permuted_ncjsd.assign(d, 0.0);
  std::vector<std::size_t> perm(n);
  for (std::size_t col = 0; col < d; ++col) {
    Rng rng(derive_seed(opt.seed, hash_tag("feature_saliency"), col));
    Matrix x = x_a;
    // Accumulate differences from the baseline so a column the network
    // ignores comes out exactly zero.
    double diff = 0.0;
    for (std::size_t m = 0; m < opt.repeats; ++m) {
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      rng.shuffle(std::span<std::size_t>(perm));
      for (std::size_t i = 0; i < n; ++i) x(i, col) = x_a(perm[i], col);
      diff += detail::mean_ncjsd(forward(f_a, x), probs_b, y) - res.baseline_ncjsd;
    }
    diff /= static_cast<double>(opt.repeats);
    res.permuted_ncjsd[col] = res.baseline_ncjsd + diff;
    raw[col] = opt.subtract_baseline ? std::max(0.0, diff) : res.permuted_ncjsd[col];
  }
  res.saliency = detail::normalize_scores(std::move(raw), SaliencyMode::feature);
  return res;
}

inline void write_saliency_csv(const std::string& path, const SaliencyVector& s) {
  std::ofstream os(path);
  if (!os) throw InvalidArgument("write_saliency_csv: cannot open " + path);
  os << "index,saliency\n";
  char buf[32];
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", s.values[i]);
    os << i << ',' << buf << '\n';
  }
}

/// `mode,ratio,indices...` as a single data row under a header.
inline void write_mask_plan_csv(const std::string& path, const MaskPlan& plan) {
  std::ofstream os(path);
  if (!os) throw InvalidArgument("write_mask_plan_csv: cannot open " + path);
  os << "mode,ratio,indices...\n" << to_string(plan.mode) << ',' << plan.ratio;
  for (auto i : plan.indices) os << ',' << i;
  os << '\n';
}

}  // namespace ntdh
