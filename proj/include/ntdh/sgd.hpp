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

#include "ntdh/error.hpp"
#include "ntdh/mlp.hpp"

namespace ntdh {

struct SgdConfig {
  double lr = 0.05;
  double momentum = 0.9;
  double weight_decay = 1e-4;

  void validate() const {
    detail::require(std::isfinite(lr) && lr >= 0.0, "SgdConfig: lr must be >= 0");
    detail::require(momentum >= 0.0 && momentum < 1.0, "SgdConfig: momentum must be in [0,1)");
    detail::require(weight_decay >= 0.0, "SgdConfig: weight_decay must be >= 0");
  }
};

/// Heavy-ball SGD with L2 weight decay on weights (not biases):
///   v <- momentum * v + (g + weight_decay * w);   w <- w - lr * v
class SgdOptimizer {
 public:
  SgdOptimizer(const MlpParams& params, SgdConfig cfg)
      : cfg_(cfg), velocity_(MlpGradients::zeros_like(params)) {
    cfg_.validate();
  }

  void step(MlpParams& params, const MlpGradients& grads) {
    detail::require(grads.layers.size() == params.layers.size(), "sgd: layer count mismatch");
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
      auto& layer = params.layers[l];
      auto& vel = velocity_.layers[l];
      const auto& g = grads.layers[l];
      detail::require(g.weight.size() == layer.weight.size() && g.bias.size() == layer.bias.size(),
                      "sgd: gradient shape mismatch");
      auto w = layer.weight.values();
      auto vw = vel.weight.values();
      auto gw = g.weight.values();
      for (std::size_t i = 0; i < w.size(); ++i) {
        vw[i] = cfg_.momentum * vw[i] + gw[i] + cfg_.weight_decay * w[i];
        w[i] -= cfg_.lr * vw[i];
      }
      for (std::size_t i = 0; i < layer.bias.size(); ++i) {
        vel.bias[i] = cfg_.momentum * vel.bias[i] + g.bias[i];
        layer.bias[i] -= cfg_.lr * vel.bias[i];
      }
    }
  }

  const SgdConfig& config() const noexcept { return cfg_; }

 private:
  SgdConfig cfg_;
  MlpGradients velocity_;
};

}  // namespace ntdh
