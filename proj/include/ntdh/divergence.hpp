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

// Target / non-target decomposition of teacher-student divergences.
//
// For a sample with ground-truth class k, teacher p and student q:
//
//   KL(p || q) = TCKL + p_notk * NCKL
//   TCKL = p_k ln(p_k / q_k) + p_notk ln(p_notk / q_notk)
//   NCKL = KL(p_hat || q_hat)
//
// where p_notk = sum_{i != k} p_i and p_hat_i = p_i / p_notk. The identity is
// exact for any strictly positive inputs because p_notk is taken as the sum
// of the non-target entries rather than 1 - p_k.

#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "ntdh/error.hpp"
#include "ntdh/matrix.hpp"
#include "ntdh/prob.hpp"

namespace ntdh {

/// Renormalized distribution over the C-1 classes other than `target`.
struct NonTargetDist {
  std::vector<double> probs;
  std::size_t target = 0;
  /// Mass outside the target class before renormalization.
  double mass = 0.0;
  /// Every non-target entry sat at the clamp floor, i.e. p_k was 1 before
  /// clamping. probs is then uniform.
  bool degenerate = false;
};

inline double kl_divergence(std::span<const double> p, std::span<const double> q) {
  detail::require(p.size() == q.size(), "kl_divergence: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += p[i] * std::log(p[i] / q[i]);
  return s;
}

inline double kl_divergence(const ProbDist& p, const ProbDist& q) {
  return kl_divergence(p.values(), q.values());
}

/// Jensen-Shannon divergence, mixture m = (p + q) / 2. Bounded by ln 2.
inline double js_divergence(std::span<const double> p, std::span<const double> q) {
  detail::require(p.size() == q.size(), "js_divergence: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) s += 0.5 * p[i] * std::log(p[i] / m);
    if (q[i] > 0.0) s += 0.5 * q[i] * std::log(q[i] / m);
  }
  return s;
}

inline NonTargetDist renormalize_nontarget(const ProbDist& p, std::size_t k) {
  detail::require(p.size() >= 2, "renormalize_nontarget: need C >= 2");
  detail::require(k < p.size(), "renormalize_nontarget: target index out of range");
  NonTargetDist out;
  out.target = k;
  out.probs.reserve(p.size() - 1);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i == k) continue;
    out.probs.push_back(p[i]);
    out.mass += p[i];
  }
  for (double& v : out.probs) v /= out.mass;
  out.degenerate = out.mass <= static_cast<double>(p.size() - 1) * kProbClamp * (1.0 + 1e-9);
  return out;
}

struct DivergenceReport {
  double kl_full = 0.0;
  /// Binary target-vs-rest KL (first bracket of the decomposition).
  double tckl = 0.0;
  double nckl = 0.0;
  double p_notk_teacher = 0.0;
  /// p_k ln(p_k / q_k) alone: the target term used in the NCKL/TCKL ratio.
  double tckl_target_term = 0.0;
  double tcjsd = 0.0;
  double ncjsd = 0.0;
  /// nckl / tckl_target_term; empty when |tckl_target_term| < 1e-15.
  std::optional<double> ratio_nckl_tckl;
};

inline constexpr double kRatioUndefinedBelow = 1e-15;

namespace detail {

inline void check_pair(const ProbDist& t, const ProbDist& s, std::size_t k) {
  require(t.size() == s.size(), "divergence: teacher/student class counts differ");
  require(t.size() >= 2, "divergence: need C >= 2");
  require(k < t.size(), "divergence: target index out of range");
}

}  // namespace detail

/// KL fields of the report (kl_full, tckl, nckl, p_notk_teacher,
/// tckl_target_term, ratio).
inline DivergenceReport decompose_kl(const ProbDist& teacher, const ProbDist& student,
                                     std::size_t k) {
  detail::check_pair(teacher, student, k);
  const auto t_hat = renormalize_nontarget(teacher, k);
  const auto s_hat = renormalize_nontarget(student, k);
  DivergenceReport r;
  r.kl_full = kl_divergence(teacher, student);
  r.p_notk_teacher = t_hat.mass;
  r.tckl_target_term = teacher[k] * std::log(teacher[k] / student[k]);
  r.tckl = r.tckl_target_term + t_hat.mass * std::log(t_hat.mass / s_hat.mass);
  r.nckl = kl_divergence(t_hat.probs, s_hat.probs);
  if (std::abs(r.tckl_target_term) >= kRatioUndefinedBelow)
    r.ratio_nckl_tckl = r.nckl / r.tckl_target_term;
  return r;
}

/// Target-class Jensen-Shannon term with only the class-k entries:
///   1/2 p_k ln(p_k / m_k) + 1/2 q_k ln(q_k / m_k),  m_k = (p_k + q_k) / 2.
/// Non-negative by convexity of x ln x.
inline double tcjsd(const ProbDist& teacher, const ProbDist& student, std::size_t k) {
  detail::check_pair(teacher, student, k);
  const double p = teacher[k];
  const double q = student[k];
  const double m = 0.5 * (p + q);
  return 0.5 * p * std::log(p / m) + 0.5 * q * std::log(q / m);
}

/// Full binary JSD between (p_k, p_notk) and (q_k, q_notk), kept for
/// comparison with the target-only form above.
inline double tcjsd_binary(const ProbDist& teacher, const ProbDist& student, std::size_t k) {
  detail::check_pair(teacher, student, k);
  const double pk = teacher[k], qk = student[k];
  const double pn = renormalize_nontarget(teacher, k).mass;
  const double qn = renormalize_nontarget(student, k).mass;
  const double a[2] = {pk, pn};
  const double b[2] = {qk, qn};
  return js_divergence(a, b);
}

/// JSD between the renormalized non-target distributions.
inline double ncjsd(const ProbDist& teacher, const ProbDist& student, std::size_t k) {
  detail::check_pair(teacher, student, k);
  const auto t_hat = renormalize_nontarget(teacher, k);
  const auto s_hat = renormalize_nontarget(student, k);
  return js_divergence(t_hat.probs, s_hat.probs);
}

/// All report fields for one sample.
inline DivergenceReport full_report(const ProbDist& teacher, const ProbDist& student,
                                    std::size_t k) {
  DivergenceReport r = decompose_kl(teacher, student, k);
  r.tcjsd = tcjsd(teacher, student, k);
  r.ncjsd = ncjsd(teacher, student, k);
  return r;
}

/// NCKL/TCKL ratio under the perturbation model
///   q_hat_i = p_hat_i + eps_i  (i != k),   q_k = p_k + eps_t.
struct RatioEstimate {
  /// nckl / (p_k ln(p_k / q_k)), evaluated exactly.
  std::optional<double> exact;
  /// Second-order expansion: (-sum eps_i + 1/2 sum eps_i^2 / p_hat_i) / (-eps_t).
  std::optional<double> taylor;
  /// Same expansion with the quadratic term subtracted instead of added
  /// (the sign that results from expanding ln(1 - eps/p) instead of
  /// ln(p / (p + eps))). Exposed for comparison only.
  std::optional<double> taylor_as_printed;

  bool defined() const { return exact.has_value(); }
};

/// Evaluates the ratio directly from a teacher distribution and explicit
/// perturbations. `eps_nontarget` has C-1 entries (classes other than k, in
/// index order). The perturbed values need not sum to one.
inline RatioEstimate perturbation_ratio(const ProbDist& teacher, std::size_t k, double eps_t,
                                        std::span<const double> eps_nontarget) {
  detail::require(k < teacher.size(), "perturbation_ratio: target index out of range");
  detail::require(eps_nontarget.size() + 1 == teacher.size(),
                  "perturbation_ratio: need C-1 non-target perturbations");
  const auto t_hat = renormalize_nontarget(teacher, k);
  const double pk = teacher[k];
  detail::require(pk + eps_t > 0.0, "perturbation_ratio: perturbed target probability <= 0");

  double nckl = 0.0, lin = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < t_hat.probs.size(); ++i) {
    const double p = t_hat.probs[i];
    const double e = eps_nontarget[i];
    detail::require(p + e > 0.0, "perturbation_ratio: perturbed probability <= 0");
    nckl += p * std::log(p / (p + e));
    lin += e;
    quad += e * e / p;
  }
  const double tckl = pk * std::log(pk / (pk + eps_t));

  RatioEstimate out;
  if (std::abs(tckl) < kRatioUndefinedBelow || eps_t == 0.0) return out;
  out.exact = nckl / tckl;
  out.taylor = (-lin + 0.5 * quad) / (-eps_t);
  out.taylor_as_printed = (-lin - 0.5 * quad) / (-eps_t);
  return out;
}

/// Ratio estimate for an actual teacher/student pair: eps_i is taken on the
/// renormalized non-target entries and eps_t on the raw target entry.
inline RatioEstimate taylor_ratio_estimate(const ProbDist& teacher, const ProbDist& student,
                                           std::size_t k) {
  detail::check_pair(teacher, student, k);
  const auto t_hat = renormalize_nontarget(teacher, k);
  const auto s_hat = renormalize_nontarget(student, k);
  std::vector<double> eps(t_hat.probs.size());
  for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = s_hat.probs[i] - t_hat.probs[i];
  return perturbation_ratio(teacher, k, student[k] - teacher[k], eps);
}

/// Per-sample metrics with k = true label, arithmetic mean over the batch.
/// The ratio is mean(nckl) / mean(tckl_target_term).
inline DivergenceReport batch_report(const Matrix& teacher_logits, const Matrix& student_logits,
                                     std::span<const std::size_t> labels,
                                     double temperature = 1.0) {
  detail::require(teacher_logits.rows() == student_logits.rows() &&
                      teacher_logits.cols() == student_logits.cols(),
                  "batch_report: logit shapes differ");
  detail::require(labels.size() == teacher_logits.rows(), "batch_report: label count mismatch");
  detail::require(!labels.empty(), "batch_report: empty batch");
  DivergenceReport mean;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto t = softmax(teacher_logits.row(i), temperature);
    const auto s = softmax(student_logits.row(i), temperature);
    const auto r = full_report(t, s, labels[i]);
    mean.kl_full += r.kl_full;
    mean.tckl += r.tckl;
    mean.nckl += r.nckl;
    mean.p_notk_teacher += r.p_notk_teacher;
    mean.tckl_target_term += r.tckl_target_term;
    mean.tcjsd += r.tcjsd;
    mean.ncjsd += r.ncjsd;
  }
  const double n = static_cast<double>(labels.size());
  mean.kl_full /= n;
  mean.tckl /= n;
  mean.nckl /= n;
  mean.p_notk_teacher /= n;
  mean.tckl_target_term /= n;
  mean.tcjsd /= n;
  mean.ncjsd /= n;
  if (std::abs(mean.tckl_target_term) >= kRatioUndefinedBelow)
    mean.ratio_nckl_tckl = mean.nckl / mean.tckl_target_term;
  return mean;
}

}  // namespace ntdh
