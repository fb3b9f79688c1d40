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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "ntdh/error.hpp"
#include "ntdh/matrix.hpp"

namespace ntdh {

/// Floor applied to every probability before it reaches a logarithm.
inline constexpr double kProbClamp = 1e-12;

/// A categorical distribution over C >= 1 classes. Entries are clamped to
/// [kProbClamp, 1]; the clamp perturbs the total by at most C * 1e-12.
class ProbDist {
 public:
  ProbDist() = default;

  /// Takes raw probabilities (expected to sum to ~1) and clamps them.
  explicit ProbDist(std::vector<double> probs) : probs_(std::move(probs)) {
    for (double& p : probs_) {
      detail::require(std::isfinite(p) && p >= 0.0, "ProbDist: entries must be finite and >= 0");
      p = std::clamp(p, kProbClamp, 1.0);
    }
  }

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> values() const noexcept { return probs_; }

  double sum() const {
    double s = 0.0;
    for (double p : probs_) s += p;
    return s;
  }

 private:
  std::vector<double> probs_;
};

/// Unclamped, max-shifted softmax written into `out`.
inline void softmax_into(std::span<const double> logits, double temperature,
                         std::span<double> out) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp((logits[i] - mx) / temperature);
    z += out[i];
  }
  for (double& v : out) v /= z;
}

/// Temperature softmax: exp(l_k / T) / sum_j exp(l_j / T).
inline ProbDist softmax(std::span<const double> logits, double temperature = 1.0) {
  detail::require(logits.size() >= 2, "softmax: need at least 2 logits");
  detail::require(std::isfinite(temperature) && temperature > 0.0,
                  "softmax: temperature must be a positive finite number");
  for (double l : logits) detail::require(std::isfinite(l), "softmax: non-finite logit");
  std::vector<double> p(logits.size());
  softmax_into(logits, temperature, p);
  return ProbDist(std::move(p));
}

inline ProbDist softmax(std::initializer_list<double> logits, double temperature = 1.0) {
  return softmax(std::span<const double>(logits.begin(), logits.size()), temperature);
}

/// Row-wise softmax of an n x C logit matrix.
inline std::vector<ProbDist> softmax_rows(const Matrix& logits, double temperature = 1.0) {
  std::vector<ProbDist> out;
  out.reserve(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) out.push_back(softmax(logits.row(i), temperature));
  return out;
}

/// -ln(pred[label]).
inline double cross_entropy(std::size_t label, const ProbDist& pred) {
  detail::require(label < pred.size(), "cross_entropy: label out of range");
  return -std::log(pred[label]);
}

}  // namespace ntdh
