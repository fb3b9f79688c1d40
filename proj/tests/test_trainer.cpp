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


#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "ntdh/datagen.hpp"
#include "ntdh/experiment/config.hpp"
#include "ntdh/trainer.hpp"

namespace {

using namespace ntdh;

SplitPair make_pair(double gamma, std::uint64_t seed, std::size_t n = 1200) {
  GenConfig g;
  g.n_samples = n;
  g.rng_seed = seed;
  const auto base = generate_base(g);
  const auto pair = split_modalities(base, gamma, g.d_total, derive_seed(seed, hash_tag("views")));
  return train_test_split(pair, 0.5, derive_seed(seed, hash_tag("split")));
}

TrainConfig quick_cfg(std::uint64_t seed, std::size_t epochs = 15) {
  TrainConfig c = exp::experiment_train_defaults();
  c.epochs = epochs;
  c.seed = seed;
  return c;
}

bool same_rows(const TrainReport& a, const TrainReport& b) {
  if (a.epochs.size() != b.epochs.size()) return false;
  for (std::size_t i = 0; i < a.epochs.size(); ++i) {
    const auto &x = a.epochs[i], &y = b.epochs[i];
    if (x.epoch != y.epoch || x.loss != y.loss || x.acc != y.acc || x.tckl != y.tckl ||
        x.nckl != y.nckl || x.tcjsd != y.tcjsd || x.ncjsd != y.ncjsd)
      return false;
  }
  return a.final_accuracy == b.final_accuracy;
}

std::vector<double> moving_average(const TrainReport& r, std::size_t w) {
  std::vector<double> out;
  for (std::size_t i = 0; i + w <= r.epochs.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = i; j < i + w; ++j) s += r.epochs[j].loss;
    out.push_back(s / static_cast<double>(w));
  }
  return out;
}

TEST(Trainer, TeacherDeterministic) {
  const auto sp = make_pair(0.5, 3);
  const auto cfg = quick_cfg(11);
  const EvalSet ev{&sp.test.x_a, sp.test.y, nullptr};
  const auto a = train_teacher(sp.train.x_a, sp.train.y, sp.train.n_classes, cfg, ev);
  const auto b = train_teacher(sp.train.x_a, sp.train.y, sp.train.n_classes, cfg, ev);
  EXPECT_TRUE(a.params == b.params);
  EXPECT_TRUE(same_rows(a.report, b.report));
  EXPECT_EQ(a.report.epochs.size(), cfg.epochs);
}

TEST(Trainer, StudentDeterministicAndReportShape) {
  const auto sp = make_pair(0.5, 4);
  const auto t = train_teacher(sp.train.x_a, sp.train.y, sp.train.n_classes, quick_cfg(1));
  const auto cfg = quick_cfg(2);
  const auto a = distill_student(sp.train, sp.test, t.params, cfg);
  const auto b = distill_student(sp.train, sp.test, t.params, cfg);
  EXPECT_TRUE(a.params == b.params);
  EXPECT_TRUE(same_rows(a.report, b.report));
  ASSERT_EQ(a.report.epochs.size(), cfg.epochs);
  for (std::size_t i = 0; i < a.report.epochs.size(); ++i) {
    const auto& r = a.report.epochs[i];
    EXPECT_EQ(r.epoch, i);
    EXPECT_GE(r.acc, 0.0);
    EXPECT_LE(r.acc, 1.0);
    EXPECT_GE(r.tckl, 0.0);
    EXPECT_GE(r.nckl, 0.0);
    EXPECT_GE(r.ncjsd, 0.0);
    EXPECT_LE(r.ncjsd, std::log(2.0) + 1e-12);
  }
  EXPECT_EQ(a.report.final_accuracy, evaluate(a.params, sp.test.x_b, sp.test.y));
}

TEST(Trainer, LambdaZeroEqualsCrossEntropyBitwise) {
  const auto sp = make_pair(1.0, 5);
  const auto t = train_teacher(sp.train.x_a, sp.train.y, sp.train.n_classes, quick_cfg(7));
  auto cfg = quick_cfg(8);
  cfg.kd.lambda = 0.0;
  const auto kd = distill_student(sp.train, sp.test, t.params, cfg);
  const auto ce = train_teacher(sp.train.x_b, sp.train.y, sp.train.n_classes, cfg);
  EXPECT_TRUE(kd.params == ce.params);
  cfg.kd.mode = KdMode::decoupled;
  cfg.kd.alpha = 3.0;
  cfg.kd.beta = 0.5;
  EXPECT_TRUE(distill_student(sp.train, sp.test, t.params, cfg).params == ce.params);
}

TEST(Trainer, TeacherStaysFrozen) {
  const auto sp = make_pair(0.5, 6);
  const auto t = train_teacher(sp.train.x_a, sp.train.y, sp.train.n_classes, quick_cfg(1, 5));
  const MlpParams before = t.params;
  auto cfg = quick_cfg(2, 5);
  cfg.mask.kind = MaskKind::sample;
  cfg.mask.ratio = 0.3;
  distill_student(sp.train, sp.test, t.params, cfg);
  EXPECT_TRUE(before == t.params);
}

TEST(Trainer, ZeroMaskRatioMatchesUnmasked) {
  const auto sp = make_pair(0.5, 7);
  const auto t = train_teacher(sp.train.x_a, sp.train.y, sp.train.n_classes, quick_cfg(1));
  const auto cfg = quick_cfg(2);
  const auto plain = distill_student(sp.train, sp.test, t.params, cfg);

  auto s = cfg;
  s.mask.kind = MaskKind::sample;
  s.mask.ratio = 0.0;
  for (auto m : {MaskMode::true_mask, MaskMode::false_mask, MaskMode::random_mask}) {
    s.mask.mode = m;
    const auto r = distill_student(sp.train, sp.test, t.params, s);
    EXPECT_TRUE(r.params == plain.params);
    EXPECT_TRUE(same_rows(r.report, plain.report));
  }

  auto f = cfg;
  f.mask.kind = MaskKind::feature;
  f.mask.ratio = 0.0;
  std::vector<double> scores(sp.train.x_a.cols(), 0.5);
  f.mask.feature_plan = build_mask_plan(scores, MaskMode::true_mask, 0.0);
  EXPECT_TRUE(distill_student(sp.train, sp.test, t.params, f).params == plain.params);
}

TEST(Trainer, SampleMaskChangesTraining) {
  const auto sp = make_pair(0.5, 8);
  const auto t = train_teacher(sp.train.x_a, sp.train.y, sp.train.n_classes, quick_cfg(1, 8));
  auto cfg = quick_cfg(2, 8);
  const auto plain = distill_student(sp.train, sp.test, t.params, cfg);
  cfg.mask.kind = MaskKind::sample;
  cfg.mask.ratio = 0.5;
  cfg.mask.mode = MaskMode::true_mask;
  const auto tm = distill_student(sp.train, sp.test, t.params, cfg);
  cfg.mask.mode = MaskMode::false_mask;
  const auto fm = distill_student(sp.train, sp.test, t.params, cfg);
  EXPECT_FALSE(tm.params == plain.params);
  EXPECT_FALSE(tm.params == fm.params);
}

// With every sample masked the teacher never reaches the gradient, so two
// unrelated teachers must give the same student.
TEST(Trainer, FullSampleMaskIgnoresTeacher) {
  const auto sp = make_pair(0.5, 9);
  const auto t1 = train_teacher(sp.train.x_a, sp.train.y, sp.train.n_classes, quick_cfg(1, 6));
  const auto t2 = train_teacher(sp.train.x_a, sp.train.y, sp.train.n_classes, quick_cfg(99, 2));
  ASSERT_FALSE(t1.params == t2.params);
  auto cfg = quick_cfg(3, 6);
  cfg.mask.kind = MaskKind::sample;
  cfg.mask.ratio = 1.0;
  const auto a = distill_student(sp.train, sp.test, t1.params, cfg);
  const auto b = distill_student(sp.train, sp.test, t2.params, cfg);
  EXPECT_TRUE(a.params == b.params);
  for (std::size_t i = 0; i < a.report.epochs.size(); ++i)
    EXPECT_EQ(a.report.epochs[i].loss, b.report.epochs[i].loss);
}

TEST(Trainer, FeatureMaskZeroesTeacherInput) {
  const auto sp = make_pair(0.5, 10);
  MaskSource m;
  m.kind = MaskKind::feature;
  std::vector<double> scores(sp.train.x_a.cols(), 0.0);
  scores[2] = 1.0;
  scores[5] = 0.9;
  m.feature_plan = build_mask_plan(scores, MaskMode::true_mask, 2.0 / static_cast<double>(scores.size()));
  const Matrix x = teacher_input(sp.train.x_a, m);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    EXPECT_EQ(x(i, 2), 0.0);
    EXPECT_EQ(x(i, 5), 0.0);
    EXPECT_EQ(x(i, 0), sp.train.x_a(i, 0));
  }
  m.kind = MaskKind::sample;
  EXPECT_TRUE(teacher_input(sp.train.x_a, m) == sp.train.x_a);
}

TEST(Trainer, DefaultConfigSmoothedLossNonIncreasing) {
  exp::ExperimentConfig ec;
  GenConfig g = ec.gen;
  g.rng_seed = 1;
  const auto base = generate_base(g);
  const auto pair = split_modalities(base, 0.5, g.d_total, 2);
  const auto sp = train_test_split(pair, ec.test_fraction, 3);
  TrainConfig cfg = ec.train;
  cfg.seed = 4;
  const auto t = train_teacher(sp.train.x_a, sp.train.y, sp.train.n_classes, cfg);
  cfg.seed = 5;
  const auto s = distill_student(sp.train, sp.test, t.params, cfg);
  for (const auto* rep : {&t.report, &s.report}) {
    const auto ma = moving_average(*rep, 10);
    ASSERT_EQ(ma.size(), cfg.epochs - 9);
    for (std::size_t i = 1; i < ma.size(); ++i) EXPECT_LE(ma[i], ma[i - 1]) << "window " << i;
  }
}

// No modality gap: the student sees the same decisive columns as the
// teacher, so pure imitation should land near the teacher. Default
// generator size and epoch count; the student tends to sit slightly above.
TEST(Trainer, NoGapFullImitationTracksTeacher) {
  const exp::ExperimentConfig ec;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto sp = make_pair(0.0, 100 + seed, ec.gen.n_samples);
    auto cfg = ec.train;
    cfg.seed = seed;
    const auto t = train_teacher(sp.train.x_a, sp.train.y, sp.train.n_classes, cfg);
    const double acc_t = evaluate(t.params, sp.test.x_a, sp.test.y);
    cfg.kd.lambda = 1.0;
    cfg.seed = seed + 50;
    const auto s = distill_student(sp.train, sp.test, t.params, cfg);
    EXPECT_NEAR(s.report.final_accuracy, acc_t, 0.03) << "seed " << seed;
  }
}

TEST(Trainer, NonFiniteLossReportsEpoch) {
  const auto sp = make_pair(0.5, 11, 400);
  auto cfg = quick_cfg(1, 20);
  cfg.sgd.lr = 1e12;
  cfg.sgd.momentum = 0.0;
  try {
    train_teacher(sp.train.x_a, sp.train.y, sp.train.n_classes, cfg);
    FAIL() << "expected TrainingFailure";
  } catch (const TrainingFailure& e) {
    EXPECT_LT(e.epoch(), cfg.epochs);
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
  }
}

TEST(Trainer, RejectsBadInputs) {
  const auto sp = make_pair(0.5, 12, 400);
  auto cfg = quick_cfg(1, 2);
  const auto t = train_teacher(sp.train.x_a, sp.train.y, sp.train.n_classes, cfg);
  MlpSpec wrong = cfg.spec_for(sp.train.x_a.cols() + 1, sp.train.n_classes);
  EXPECT_THROW(distill_student(sp.train, sp.test, MlpParams::init(wrong, 1), cfg), InvalidArgument);
  cfg.epochs = 0;
  EXPECT_THROW(train_teacher(sp.train.x_a, sp.train.y, sp.train.n_classes, cfg), InvalidArgument);
  cfg.epochs = 1;
  cfg.batch_size = 0;
  EXPECT_THROW(train_teacher(sp.train.x_a, sp.train.y, sp.train.n_classes, cfg), InvalidArgument);
  (void)t;
}

TEST(Evaluate, TiesGoToLowestClass) {
  MlpSpec spec{{3, 4, 5}, Activation::relu};
  MlpParams p = MlpParams::init(spec, 1);
  for (auto& l : p.layers) {
    for (double& w : l.weight.values()) w = 0.0;
    for (double& b : l.bias) b = 0.0;
  }
  Matrix x(6, 3, 1.0);
  const std::vector<std::size_t> y = {0, 1, 0, 2, 0, 4};
  EXPECT_DOUBLE_EQ(evaluate(p, x, y), 0.5);
  // Class 3 and 4 tie above the rest.
  p.layers[1].bias = {0.0, 0.0, 0.0, 1.0, 1.0};
  EXPECT_DOUBLE_EQ(evaluate(p, x, std::vector<std::size_t>{3, 3, 4, 4, 3, 0}), 0.5);
  EXPECT_THROW(evaluate(p, x, std::vector<std::size_t>{0}), InvalidArgument);
}

TEST(TrainReport, TailMean) {
  TrainReport r;
  EXPECT_EQ(r.tail_mean(&EpochRow::acc), 0.0);
  for (std::size_t i = 0; i < 15; ++i) {
    EpochRow e;
    e.epoch = i;
    e.ncjsd = static_cast<double>(i);
    r.epochs.push_back(e);
  }
  EXPECT_DOUBLE_EQ(r.tail_mean(&EpochRow::ncjsd), 9.5);
  EXPECT_DOUBLE_EQ(r.tail_mean(&EpochRow::ncjsd, 3), 13.0);
  EXPECT_DOUBLE_EQ(r.tail_mean(&EpochRow::ncjsd, 100), 7.0);
}

TEST(TrainReport, CsvLayout) {
  TrainReport r;
  for (std::size_t i = 0; i < 3; ++i) r.epochs.push_back({i, 1.0 / (i + 1.0), 0.5, 0, 0, 0, 0});
  const std::string path = testing::TempDir() + "ntdh_train_report.csv";
  write_train_report_csv(path, r);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "epoch,loss,acc,tckl,nckl,tcjsd,ncjsd");
  std::getline(in, line);
  EXPECT_EQ(line, "0,1,0.5,0,0,0,0");
  std::size_t rows = 1;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3u);
  std::remove(path.c_str());
}

TEST(Assumptions, CapacityParity) {
  const auto sp = make_pair(0.5, 13, 400);
  auto cfg = quick_cfg(1, 2);
  const std::size_t d = sp.train.x_a.cols(), c = sp.train.n_classes;
  const MlpSpec s16{{d, 16, c}, Activation::relu}, s32{{d, 32, c}, Activation::relu};
  const auto same = check_assumptions(s16, s16, sp.train, sp.test, cfg);
  EXPECT_TRUE(same.capacity_ok);
  EXPECT_EQ(same.capacity_teacher, same.capacity_student);
  const auto diff = check_assumptions(s16, s32, sp.train, sp.test, cfg);
  EXPECT_FALSE(diff.capacity_ok);
  EXPECT_EQ(diff.capacity_teacher, d * 16 + 16 + 16 * c + c);
  EXPECT_EQ(diff.capacity_student, d * 32 + 32 + 32 * c + c);
}

TEST(Assumptions, StrengthParityOnDefaultPair) {
  exp::ExperimentConfig ec;
  GenConfig g = ec.gen;
  g.rng_seed = 21;
  const auto base = generate_base(g);
  const auto pair = split_modalities(base, 0.5, g.d_total, 22);
  const auto sp = train_test_split(pair, ec.test_fraction, 23);
  TrainConfig cfg = ec.train;
  cfg.seed = 24;
  const auto spec = cfg.spec_for(g.d_total, g.n_classes);
  const auto r = check_assumptions(spec, spec, sp.train, sp.test, cfg);
  EXPECT_TRUE(r.capacity_ok);
  EXPECT_DOUBLE_EQ(r.strength_gap, std::abs(r.acc_a - r.acc_b));
  EXPECT_TRUE(r.strength_ok) << r.acc_a << " vs " << r.acc_b;
}

}  // namespace
