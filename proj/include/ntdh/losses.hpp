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

// Distillation objectives. Both are batch means of
//
//   (1 - lambda) * CE(y, softmax(z_s)) + w_i * lambda * T^2 * D(p_t, p_s)
//
// with p_t = softmax(z_t / T), p_s = softmax(z_s / T) and D either the full
// KL (vanilla) or alpha * TCKL + beta * NCKL (decoupled). w_i is an optional
// per-sample weight on the distillation term (1 when absent) used by sample
// masking. Teacher logits are constants.

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ntdh/divergence.hpp"
#include "ntdh/error.hpp"
#include "ntdh/matrix.hpp"
#include "ntdh/prob.hpp"

namespace ntdh {

enum class KdMode { vanilla, decoupled };

inline const char* to_string(KdMode m) { return m == KdMode::vanilla ? "vanilla" : "decoupled"; }

struct KdLossConfig {
  double lambda = 0.5;
  double temperature = 1.0;
  KdMode mode = KdMode::vanilla;
  double alpha = 1.0;
  double beta = 1.0;

  void validate() const {
    detail::require(lambda >= 0.0 && lambda <= 1.0, "KdLossConfig: lambda must lie in [0, 1]");
    detail::require(std::isfinite(temperature) && temperature > 0.0,
                    "KdLossConfig: temperature must be > 0");
    detail::require(alpha >= 0.0 && beta >= 0.0, "KdLossConfig: alpha and beta must be >= 0");
  }
};

struct LossResult {
  double loss = 0.0;
  /// Mean of the hard-label cross-entropy alone.
  double ce = 0.0;
  /// Mean of the weighted, T^2-scaled distillation term (before lambda).
  double kd = 0.0;
  /// dLoss / dStudentLogits, same shape as the logits.
  Matrix grad;
};

namespace detail {

inline void check_loss_inputs(const Matrix& student, const Matrix& teacher,
                              std::span<const std::size_t> labels,
                              std::span<const double> kd_weights) {
  require(student.rows() == teacher.rows() && student.cols() == teacher.cols(),
          "kd loss: student/teacher logit shapes differ");
  require(labels.size() == student.rows(), "kd loss: label count mismatch");
  require(kd_weights.empty() || kd_weights.size() == student.rows(),
          "kd loss: kd weight count mismatch");
  require(student.rows() > 0, "kd loss: empty batch");
  for (auto y : labels) require(y < student.cols(), "kd loss: label out of range");
}

}  // namespace detail

/// Mean cross-entropy and its logit gradient.
inline LossResult cross_entropy_loss(const Matrix& logits, std::span<const std::size_t> labels) {
  detail::require(labels.size() == logits.rows() && logits.rows() > 0,
                  "cross_entropy_loss: label count mismatch");
  const std::size_t n = logits.rows(), c = logits.cols();
  LossResult r;
  r.grad = Matrix(n, c);
  std::vector<double> q(c);
  for (std::size_t i = 0; i < n; ++i) {
    detail::require(labels[i] < c, "cross_entropy_loss: label out of range");
    softmax_into(logits.row(i), 1.0, q);
    r.ce += -std::log(std::max(q[labels[i]], kProbClamp));
    auto g = r.grad.row(i);
    for (std::size_t j = 0; j < c; ++j) g[j] = q[j] - (j == labels[i] ? 1.0 : 0.0);
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (double& v : r.grad.values()) v *= inv_n;
  r.ce *= inv_n;
  r.loss = r.ce;
  return r;
}

inline LossResult vanilla_kd_loss(const Matrix& student_logits, const Matrix& teacher_logits,
                                  std::span<const std::size_t> labels, const KdLossConfig& cfg,
                                  std::span<const double> kd_weights = {}) {
  cfg.validate();
  detail::check_loss_inputs(student_logits, teacher_logits, labels, kd_weights);
  const std::size_t n = student_logits.rows(), c = student_logits.cols();
  const double lam = cfg.lambda, T = cfg.temperature;
  LossResult r;
  r.grad = Matrix(n, c);
  std::vector<double> q(c), qt(c), pt(c);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = kd_weights.empty() ? 1.0 : kd_weights[i];
    softmax_into(student_logits.row(i), 1.0, q);
    softmax_into(student_logits.row(i), T, qt);
    softmax_into(teacher_logits.row(i), T, pt);
    const double ce = -std::log(std::max(q[labels[i]], kProbClamp));
    double kl = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      const double pj = std::max(pt[j], kProbClamp);
      kl += pj * std::log(pj / std::max(qt[j], kProbClamp));
    }
    const double kd = w * T * T * kl;
    r.ce += ce;
    r.kd += kd;
    r.loss += (1.0 - lam) * ce + lam * kd;
    auto g = r.grad.row(i);
    for (std::size_t j = 0; j < c; ++j)
      g[j] = (1.0 - lam) * (q[j] - (j == labels[i] ? 1.0 : 0.0)) + lam * w * T * (qt[j] - pt[j]);
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (double& v : r.grad.values()) v *= inv_n;
  r.loss *= inv_n;
  r.ce *= inv_n;
  r.kd *= inv_n;
  return r;
}

inline LossResult decoupled_kd_loss(const Matrix& student_logits, const Matrix& teacher_logits,
                                    std::span<const std::size_t> labels, const KdLossConfig& cfg,
                                    std::span<const double> kd_weights = {}) {
  cfg.validate();
  detail::check_loss_inputs(student_logits, teacher_logits, labels, kd_weights);
  const std::size_t n = student_logits.rows(), c = student_logits.cols();
  const double lam = cfg.lambda, T = cfg.temperature;
  LossResult r;
  r.grad = Matrix(n, c);
  std::vector<double> q(c);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = labels[i];
    const double w = kd_weights.empty() ? 1.0 : kd_weights[i];
    softmax_into(student_logits.row(i), 1.0, q);
    const ProbDist ps = softmax(student_logits.row(i), T);
    const ProbDist pt = softmax(teacher_logits.row(i), T);
    const DivergenceReport d = decompose_kl(pt, ps, k);
    const auto t_hat = renormalize_nontarget(pt, k);
    const auto s_hat = renormalize_nontarget(ps, k);

    const double ce = -std::log(std::max(q[k], kProbClamp));
    const double kd = w * T * T * (cfg.alpha * d.tckl + cfg.beta * d.nckl);
    r.ce += ce;
    r.kd += kd;
    r.loss += (1.0 - lam) * ce + lam * kd;

    // d/du with u = z / T:
    //   TCKL: k -> q_k - p_k;  j != k -> q_hat_j (p_k - q_k)
    //   NCKL: k -> 0;          j != k -> q_hat_j - p_hat_j
    auto g = r.grad.row(i);
    const double scale = lam * w * T;
    for (std::size_t j = 0, h = 0; j < c; ++j) {
      double du;
      if (j == k) {
        du = cfg.alpha * (ps[k] - pt[k]);
      } else {
        du = cfg.alpha * s_hat.probs[h] * (pt[k] - ps[k]) +
             cfg.beta * (s_hat.probs[h] - t_hat.probs[h]);
        ++h;
      }
      g[j] = (1.0 - lam) * (q[j] - (j == k ? 1.0 : 0.0)) + scale * du;
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (double& v : r.grad.values()) v *= inv_n;
  r.loss *= inv_n;
  r.ce *= inv_n;
  r.kd *= inv_n;
  return r;
}

inline LossResult kd_loss(const Matrix& student_logits, const Matrix& teacher_logits,
                          std::span<const std::size_t> labels, const KdLossConfig& cfg,
                          std::span<const double> kd_weights = {}) {
  return cfg.mode == KdMode::vanilla
             ? vanilla_kd_loss(student_logits, teacher_logits, labels, cfg, kd_weights)
             : decoupled_kd_loss(student_logits, teacher_logits, labels, cfg, kd_weights);
}

}  // namespace ntdh
