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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ntdh/error.hpp"
#include "ntdh/matrix.hpp"
#include "ntdh/rng.hpp"

namespace ntdh {

enum class Activation { relu, tanh };

inline const char* to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

/// Fully connected topology: input, hidden..., output (= number of classes).
/// Hidden layers use `activation`, the output layer is linear.
struct MlpSpec {
  std::vector<std::size_t> layer_sizes;
  Activation activation = Activation::relu;

  void validate() const {
    detail::require(layer_sizes.size() >= 2, "MlpSpec: need at least input and output sizes");
    for (auto s : layer_sizes) detail::require(s > 0, "MlpSpec: layer sizes must be positive");
  }

  std::size_t input_size() const { return layer_sizes.front(); }
  std::size_t output_size() const { return layer_sizes.back(); }
  std::size_t num_layers() const { return layer_sizes.size() - 1; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l)
      n += layer_sizes[l] * layer_sizes[l + 1] + layer_sizes[l + 1];
    return n;
  }

  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

/// Weight (fan_in x fan_out) and bias of one dense layer.
struct Layer {
  Matrix weight;
  std::vector<double> bias;

  friend bool operator==(const Layer&, const Layer&) = default;
};

struct MlpParams {
  MlpSpec spec;
  std::vector<Layer> layers;
  std::uint64_t rng_seed = 0;

  /// Glorot-uniform weights, zero biases.
  static MlpParams init(const MlpSpec& spec, std::uint64_t seed) {
    spec.validate();
    MlpParams p{spec, {}, seed};
    Rng rng(seed);
    for (std::size_t l = 0; l < spec.num_layers(); ++l) {
      const std::size_t fan_in = spec.layer_sizes[l];
      const std::size_t fan_out = spec.layer_sizes[l + 1];
      const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      Layer layer{Matrix(fan_in, fan_out), std::vector<double>(fan_out, 0.0)};
      for (double& w : layer.weight.values()) w = rng.uniform(-limit, limit);
      p.layers.push_back(std::move(layer));
    }
    return p;
  }

  bool all_finite() const {
    for (const auto& l : layers) {
      if (!l.weight.all_finite()) return false;
      for (double b : l.bias)
        if (!std::isfinite(b)) return false;
    }
    return true;
  }

  friend bool operator==(const MlpParams&, const MlpParams&) = default;
};

/// Same layout as the parameters; used for gradients and momentum buffers.
struct MlpGradients {
  std::vector<Layer> layers;

  static MlpGradients zeros_like(const MlpParams& p) {
    MlpGradients g;
    for (const auto& l : p.layers)
      g.layers.push_back({Matrix(l.weight.rows(), l.weight.cols()),
                          std::vector<double>(l.bias.size(), 0.0)});
    return g;
  }
};

/// Pre-activations and activations of each layer for one batch.
struct ForwardCache {
  std::vector<Matrix> inputs;  // input to layer l (inputs[0] = batch)
  std::vector<Matrix> pre;     // pre-activation of layer l
  Matrix logits;
};

namespace detail {

inline double activate(Activation a, double x) {
  return a == Activation::relu ? (x > 0.0 ? x : 0.0) : std::tanh(x);
}

/// Derivative expressed through the pre-activation.
inline double activate_grad(Activation a, double pre) {
  if (a == Activation::relu) return pre > 0.0 ? 1.0 : 0.0;
  const double t = std::tanh(pre);
  return 1.0 - t * t;
}

inline Matrix dense(const Layer& layer, const Matrix& x) {
  Matrix z = matmul(x, layer.weight);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    auto r = z.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += layer.bias[j];
  }
  return z;
}

}  // namespace detail

inline ForwardCache forward_cached(const MlpParams& params, const Matrix& batch) {
  if (batch.cols() != params.spec.input_size())
    throw InvalidArgument("forward: batch has " + std::to_string(batch.cols()) +
                          " columns, network expects " + std::to_string(params.spec.input_size()));
  ForwardCache cache;
  Matrix h = batch;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    Matrix z = detail::dense(params.layers[l], h);
    cache.inputs.push_back(std::move(h));
    const bool last = l + 1 == params.layers.size();
    if (last) {
      cache.logits = z;
    } else {
      h = z;
      for (double& v : h.values()) v = detail::activate(params.spec.activation, v);
    }
    cache.pre.push_back(std::move(z));
  }
  return cache;
}

/// Logits (n x C) for a batch (n x input_size).
inline Matrix forward(const MlpParams& params, const Matrix& batch) {
  return forward_cached(params, batch).logits;
}

/// Parameter gradients given dLoss/dLogits for a cached forward pass.
inline MlpGradients backward(const MlpParams& params, const ForwardCache& cache,
                             const Matrix& loss_grad_at_logits) {
  detail::require(loss_grad_at_logits.rows() == cache.logits.rows() &&
                      loss_grad_at_logits.cols() == cache.logits.cols(),
                  "backward: gradient shape does not match logits");
  MlpGradients grads;
  grads.layers.resize(params.layers.size());
  Matrix delta = loss_grad_at_logits;
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    auto& g = grads.layers[l];
    g.weight = matmul_tn(cache.inputs[l], delta);
    g.bias.assign(delta.cols(), 0.0);
    for (std::size_t i = 0; i < delta.rows(); ++i) {
      auto r = delta.row(i);
      for (std::size_t j = 0; j < r.size(); ++j) g.bias[j] += r[j];
    }
    if (l == 0) break;
    Matrix upstream = matmul_nt(delta, params.layers[l].weight);
    const Matrix& pre = cache.pre[l - 1];
    for (std::size_t k = 0; k < upstream.size(); ++k)
      upstream.values()[k] *= detail::activate_grad(params.spec.activation, pre.values()[k]);
    delta = std::move(upstream);
  }
  return grads;
}

inline MlpGradients backward(const MlpParams& params, const Matrix& batch,
                             const Matrix& loss_grad_at_logits) {
  return backward(params, forward_cached(params, batch), loss_grad_at_logits);
}

}  // namespace ntdh
