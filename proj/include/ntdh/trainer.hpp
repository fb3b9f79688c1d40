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

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ntdh/batching.hpp"
#include "ntdh/datagen.hpp"
#include "ntdh/divergence.hpp"
#include "ntdh/error.hpp"
#include "ntdh/losses.hpp"
#include "ntdh/masking.hpp"
#include "ntdh/mlp.hpp"
#include "ntdh/sgd.hpp"

namespace ntdh {

enum class MaskKind { none, feature, sample };

/// Where distillation masking comes from. Feature masks carry a prebuilt plan
/// over teacher-input columns; sample masks are rebuilt for every minibatch
/// from the current student predictions.
struct MaskSource {
  MaskKind kind = MaskKind::none;
  MaskMode mode = MaskMode::true_mask;
  double ratio = 0.0;
  std::optional<MaskPlan> feature_plan;
  /// Sample mode only: drop masked samples from the batch entirely (CE
  /// included) instead of zeroing just their distillation weight.
  bool drop_whole_sample = false;
};

struct TrainConfig {
  std::vector<std::size_t> hidden = {40};
  Activation activation = Activation::relu;
  std::size_t epochs = 60;
  SgdConfig sgd;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  KdLossConfig kd;
  MaskSource mask;

  void validate() const {
    detail::require(epochs >= 1, "TrainConfig: epochs must be >= 1");
    detail::require(batch_size >= 1, "TrainConfig: batch_size must be >= 1");
    sgd.validate();
    kd.validate();
  }

  MlpSpec spec_for(std::size_t inputs, std::size_t classes) const {
    MlpSpec s;
    s.layer_sizes.push_back(inputs);
    s.layer_sizes.insert(s.layer_sizes.end(), hidden.begin(), hidden.end());
    s.layer_sizes.push_back(classes);
    s.activation = activation;
    return s;
  }
};

struct EpochRow {
  std::size_t epoch = 0;
  double loss = 0.0;
  double acc = 0.0;
  double tckl = 0.0, nckl = 0.0, tcjsd = 0.0, ncjsd = 0.0;
};

struct TrainReport {
  std::vector<EpochRow> epochs;
  double final_accuracy = 0.0;
  double wall_seconds = 0.0;

  /// Mean of a column over the last `n` epochs.
  double tail_mean(double EpochRow::*field, std::size_t n = 10) const {
    if (epochs.empty()) return 0.0;
    const std::size_t k = std::min(n, epochs.size());
    double s = 0.0;
    for (std::size_t i = epochs.size() - k; i < epochs.size(); ++i) s += epochs[i].*field;
    return s / static_cast<double>(k);
  }
};

/// Argmax accuracy in [0, 1].
inline double evaluate(const MlpParams& params, const Matrix& x, std::span<const std::size_t> y) {
  return accuracy(params, x, y);
}

struct TrainResult {
  MlpParams params;
  TrainReport report;
};

/// Held-out data used for the per-epoch curve.
struct EvalSet {
  const Matrix* x = nullptr;
  std::span<const std::size_t> y;
  /// Teacher logits on the same samples, when divergences should be logged.
  const Matrix* teacher_logits = nullptr;
};

namespace detail {

inline void log_epoch(TrainReport& rep, std::size_t epoch, double loss, const MlpParams& params,
                      const EvalSet& eval) {
  EpochRow row;
  row.epoch = epoch;
  row.loss = loss;
  if (eval.x != nullptr) {
    const Matrix logits = forward(params, *eval.x);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
      auto r = logits.row(i);
      const auto pred = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
      hit += pred == eval.y[i] ? 1 : 0;
    }
    row.acc = static_cast<double>(hit) / static_cast<double>(eval.y.size());
    if (eval.teacher_logits != nullptr) {
      const auto d = batch_report(*eval.teacher_logits, logits, eval.y);
      row.tckl = d.tckl;
      row.nckl = d.nckl;
      row.tcjsd = d.tcjsd;
      row.ncjsd = d.ncjsd;
    }
  }
  rep.epochs.push_back(row);
}

/// Shared minibatch loop. With `teacher_logits == nullptr` the objective is
/// plain cross-entropy; otherwise the configured distillation loss.
inline TrainResult run_training(const Matrix& x, std::span<const std::size_t> y,
                                std::size_t classes, const Matrix* teacher_logits,
                                const TrainConfig& cfg, const EvalSet& eval) {
  cfg.validate();
  require(x.rows() == y.size() && !y.empty(), "train: label count mismatch");
  const auto t0 = std::chrono::steady_clock::now();
  TrainResult res{MlpParams::init(cfg.spec_for(x.cols(), classes), derive_seed(cfg.seed, hash_tag("init"))),
                  {}};
  SgdOptimizer opt(res.params, cfg.sgd);
  Rng rng(derive_seed(cfg.seed, hash_tag("shuffle")));
  const bool sample_mask = teacher_logits != nullptr && cfg.mask.kind == MaskKind::sample &&
                           cfg.mask.ratio > 0.0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t batch_no = 0;
    for (auto idx : epoch_batches(x.rows(), cfg.batch_size, rng)) {
      Matrix xb = x.select_rows(idx);
      auto yb = gather(y, idx);
      auto cache = forward_cached(res.params, xb);
      LossResult lr;
      if (teacher_logits == nullptr) {
        lr = cross_entropy_loss(cache.logits, yb);
      } else {
        Matrix tb = teacher_logits->select_rows(idx);
        std::vector<double> weights;
        if (sample_mask) {
          const double T = cfg.kd.temperature;
          const auto sp = softmax_rows(cache.logits, T);
          const auto tp = softmax_rows(tb, T);
          const auto sal = sample_saliency(tp, sp, yb);
          const auto plan = build_mask_plan(sal.values, cfg.mask.mode, cfg.mask.ratio,
                                            derive_seed(cfg.seed, hash_tag("sample_mask"), epoch, batch_no));
          if (cfg.mask.drop_whole_sample) {
            std::vector<std::size_t> keep;
            std::size_t p = 0;
            for (std::size_t i = 0; i < idx.size(); ++i) {
              if (p < plan.indices.size() && plan.indices[p] == i) {
                ++p;
                continue;
              }
              keep.push_back(i);
            }
            if (keep.empty()) {
              ++batch_no;
              continue;
            }
            xb = xb.select_rows(keep);
            tb = tb.select_rows(keep);
            yb = gather(yb, keep);
            cache = forward_cached(res.params, xb);
          } else {
            weights = apply_sample_mask(std::vector<double>(idx.size(), 1.0), plan);
          }
        }
        lr = kd_loss(cache.logits, tb, yb, cfg.kd, weights);
      }
      if (!std::isfinite(lr.loss)) throw TrainingFailure("train: non-finite loss", epoch);
      loss_sum += lr.loss;
      opt.step(res.params, backward(res.params, cache, lr.grad));
      ++batch_no;
    }
    if (!res.params.all_finite()) throw TrainingFailure("train: parameters became non-finite", epoch);
    log_epoch(res.report, epoch, loss_sum / static_cast<double>(std::max<std::size_t>(1, batch_no)),
              res.params, eval);
  }
  res.report.final_accuracy = res.report.epochs.empty() ? 0.0 : res.report.epochs.back().acc;
  res.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace detail

/// Cross-entropy plus weight decay on (x, y).
inline TrainResult train_teacher(const Matrix& x, std::span<const std::size_t> y,
                                 std::size_t classes, const TrainConfig& cfg,
                                 const EvalSet& eval = {}) {
  return detail::run_training(x, y, classes, nullptr, cfg, eval);
}

/// Teacher input for a pair, honoring a configured feature mask.
inline Matrix teacher_input(const Matrix& x_a, const MaskSource& mask) {
  if (mask.kind == MaskKind::feature && mask.feature_plan) return apply_feature_mask(x_a, *mask.feature_plan);
  return x_a;
}

/// Distills a student on x_b from a frozen teacher on x_a.
inline TrainResult distill_student(const ModalityPair& train, const ModalityPair& test,
                                   const MlpParams& teacher, const TrainConfig& cfg) {
  const Matrix xa_train = teacher_input(train.x_a, cfg.mask);
  const Matrix xa_test = teacher_input(test.x_a, cfg.mask);
  detail::require(xa_train.cols() == teacher.spec.input_size(),
                  "distill_student: teacher input width does not match x_a");
  const Matrix t_train = forward(teacher, xa_train);
  const Matrix t_test = forward(teacher, xa_test);
  EvalSet eval{&test.x_b, test.y, &t_test};
  return detail::run_training(train.x_b, train.y, train.n_classes, &t_train, cfg, eval);
}

struct AssumptionReport {
  std::size_t capacity_teacher = 0;
  std::size_t capacity_student = 0;
  bool capacity_ok = false;
  double acc_a = 0.0;
  double acc_b = 0.0;
  double strength_gap = 0.0;
  double tolerance = 0.03;
  bool strength_ok = false;
};

/// Capacity parity from the two specs; strength parity from one fresh
/// network per view trained with `cfg` (cross-entropy only).
inline AssumptionReport check_assumptions(const MlpSpec& spec_t, const MlpSpec& spec_s,
                                          const ModalityPair& train, const ModalityPair& test,
                                          const TrainConfig& cfg, double tolerance = 0.03) {
  AssumptionReport r;
  r.tolerance = tolerance;
  r.capacity_teacher = spec_t.parameter_count();
  r.capacity_student = spec_s.parameter_count();
  r.capacity_ok = r.capacity_teacher == r.capacity_student;
  TrainConfig c = cfg;
  c.mask = {};
  c.seed = derive_seed(cfg.seed, hash_tag("strength_a"));
  const auto net_a = train_teacher(train.x_a, train.y, train.n_classes, c);
  c.seed = derive_seed(cfg.seed, hash_tag("strength_b"));
  const auto net_b = train_teacher(train.x_b, train.y, train.n_classes, c);
  r.acc_a = evaluate(net_a.params, test.x_a, test.y);
  r.acc_b = evaluate(net_b.params, test.x_b, test.y);
  r.strength_gap = std::abs(r.acc_a - r.acc_b);
  r.strength_ok = r.strength_gap <= tolerance;
  return r;
}

/// `epoch,loss,acc,tckl,nckl,tcjsd,ncjsd`.
inline void write_train_report_csv(const std::string& path, const TrainReport& rep) {
  std::ofstream os(path);
  if (!os) throw InvalidArgument("write_train_report_csv: cannot open " + path);
  os << "epoch,loss,acc,tckl,nckl,tcjsd,ncjsd\n";
  char buf[256];
  for (const auto& r : rep.epochs) {
    std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n", r.epoch, r.loss,
                  r.acc, r.tckl, r.nckl, r.tcjsd, r.ncjsd);
    os << buf;
  }
}

}  // namespace ntdh
