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

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "ntdh/datagen.hpp"

namespace {

using namespace ntdh;

GenConfig small_cfg() {
  GenConfig g;
  g.n_samples = 600;
  g.rng_seed = 5;
  return g;
}

// Best single-threshold two-class rule on one feature, fit and scored on
// the given rows.
double best_threshold_accuracy(const std::vector<double>& x, const std::vector<std::size_t>& y) {
  std::vector<std::size_t> order(x.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  std::size_t ones_total = 0;
  for (auto v : y) ones_total += v;
  double best = 0;
  std::size_t ones_left = 0;
  for (std::size_t cut = 0; cut <= order.size(); ++cut) {
    const std::size_t left = cut, zeros_left = left - ones_left;
    const std::size_t zeros_right = (y.size() - ones_total) - zeros_left, ones_right = ones_total - ones_left;
    const double a = static_cast<double>(std::max(zeros_left + ones_right, ones_left + zeros_right)) /
                     static_cast<double>(y.size());
    best = std::max(best, a);
    if (cut < order.size()) ones_left += y[order[cut]];
  }
  return best;
}

TEST(GenerateBase, WellSeparatedOneDimensionalClasses) {
  GenConfig g;
  g.n_classes = 2;
  g.d_decisive = 1;
  g.d_total = 1;
  g.class_sep = 10.0;
  g.n_samples = 100;
  const auto ds = generate_base(g);
  std::vector<double> x(ds.x.values().begin(), ds.x.values().end());
  EXPECT_GE(best_threshold_accuracy(x, ds.y), 0.99);
}

TEST(GenerateBase, ZeroSeparationCarriesNoSignal) {
  GenConfig g;
  g.n_classes = 2;
  g.d_decisive = 1;
  g.d_total = 1;
  g.class_sep = 0.0;
  g.n_samples = 2000;
  const auto ds = generate_base(g);
  // Fit the threshold on the first half, score on the second.
  std::vector<double> xa, xb;
  std::vector<std::size_t> ya, yb;
  for (std::size_t i = 0; i < ds.y.size(); ++i) {
    (i < 1000 ? xa : xb).push_back(ds.x(i, 0));
    (i < 1000 ? ya : yb).push_back(ds.y[i]);
  }
  std::vector<std::size_t> order(xa.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return xa[a] < xa[b]; });
  double best = 0, cut_value = 0;
  int best_dir = 1;
  for (std::size_t c = 1; c < order.size(); ++c) {
    const double t = xa[order[c]];
    for (int dir : {1, -1}) {
      std::size_t hit = 0;
      for (std::size_t i = 0; i < xa.size(); ++i) hit += ((dir * (xa[i] - t) >= 0) ? 1u : 0u) == ya[i];
      if (hit > best) best = static_cast<double>(hit), cut_value = t, best_dir = dir;
    }
  }
  std::size_t hit = 0;
  for (std::size_t i = 0; i < xb.size(); ++i) hit += ((best_dir * (xb[i] - cut_value) >= 0) ? 1u : 0u) == yb[i];
  EXPECT_NEAR(static_cast<double>(hit) / static_cast<double>(xb.size()), 0.5, 0.10);
  EXPECT_EQ(ds.centroid_signs.size(), 2u);
}

TEST(GenerateBase, DeterministicPerSeed) {
  const auto g = small_cfg();
  const auto a = generate_base(g), b = generate_base(g);
  EXPECT_TRUE(a.x == b.x);
  EXPECT_EQ(a.y, b.y);
  auto h = g;
  h.rng_seed = 6;
  EXPECT_FALSE(generate_base(h).x == a.x);
}

TEST(GenerateBase, BalancedLabelsAndDistinctCentroids) {
  for (auto layout : {CentroidLayout::independent, CentroidLayout::mirrored, CentroidLayout::permuted_mirror}) {
    auto g = small_cfg();
    g.n_samples = 605;
    g.layout = layout;
    const auto ds = generate_base(g);
    std::map<std::size_t, std::size_t> counts;
    for (auto v : ds.y) ++counts[v];
    ASSERT_EQ(counts.size(), g.n_classes);
    std::size_t lo = g.n_samples, hi = 0;
    for (auto [k, c] : counts) lo = std::min(lo, c), hi = std::max(hi, c);
    EXPECT_LE(hi - lo, 1u);
    std::set<std::vector<int>> uniq(ds.centroid_signs.begin(), ds.centroid_signs.end());
    EXPECT_EQ(uniq.size(), g.n_classes);
    for (const auto& c : ds.centroid_signs) {
      EXPECT_EQ(c.size(), g.d_decisive);
      for (int s : c) EXPECT_TRUE(s == 1 || s == -1);
    }
  }
}

TEST(GenerateBase, EveryViewWindowKeepsClassesApart) {
  for (auto layout : {CentroidLayout::independent, CentroidLayout::mirrored, CentroidLayout::permuted_mirror}) {
    auto g = small_cfg();
    g.layout = layout;
    const auto ds = generate_base(g);
    const std::size_t d_b = g.d_decisive / 2;
    for (std::size_t d_t = 0; d_t <= d_b; ++d_t) {
      std::vector<std::size_t> cols;
      for (std::size_t c = 0; c < d_t; ++c) cols.push_back(c);
      for (std::size_t c = d_b; c < 2 * d_b - d_t; ++c) cols.push_back(c);
      for (std::size_t a = 0; a < g.n_classes; ++a)
        for (std::size_t b = a + 1; b < g.n_classes; ++b) {
          std::size_t h = 0;
          for (auto c : cols) h += ds.centroid_signs[a][c] != ds.centroid_signs[b][c];
          EXPECT_GE(h, g.min_view_hamming) << "d_t=" << d_t;
        }
    }
  }
}

TEST(GenerateBase, MirroredTeacherWindowIsAColumnPermutation) {
  auto g = small_cfg();
  g.layout = CentroidLayout::mirrored;
  const auto ds = generate_base(g);
  const std::size_t d_b = g.d_decisive / 2;
  for (std::size_t k = 0; k < g.n_classes; ++k)
    for (std::size_t j = 0; j < d_b; ++j)
      EXPECT_EQ(ds.centroid_signs[k][d_b + j], ds.centroid_signs[k][d_b - 1 - j]);
}

TEST(GenerateBase, InfeasibleConfigs) {
  GenConfig g;
  g.n_classes = 5;
  g.d_decisive = 2;
  g.d_total = 2;
  EXPECT_THROW(generate_base(g), InfeasibleConfig);
  GenConfig h;
  h.n_samples = 10;
  EXPECT_THROW(generate_base(h), InvalidArgument);
  GenConfig k;
  k.d_total = 8;
  EXPECT_THROW(generate_base(k), InvalidArgument);
}

class SplitFixture : public ::testing::Test {
 protected:
  LabeledDataset base = generate_base(small_cfg());
};

TEST_F(SplitFixture, HalfGapGeometry) {
  const auto p = split_modalities(base, 0.5, 24, 9);
  EXPECT_EQ(p.d_b, 8u);
  EXPECT_EQ(p.d_a, 12u);
  EXPECT_EQ(p.d_t, 4u);
  EXPECT_DOUBLE_EQ(p.gamma, 0.5);
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(p.x_a(i, c), p.x_b(i, c));
    for (std::size_t c = 4; c < 8; ++c) {
      EXPECT_EQ(p.x_b(i, c), base.x(i, c));
      EXPECT_EQ(p.x_a(i, c), base.x(i, 4 + c));
    }
  }
  std::size_t shared = 0;
  for (const auto& ci : p.columns_a) shared += ci.provenance == Provenance::shared_decisive;
  EXPECT_EQ(shared, 4u);
}

TEST_F(SplitFixture, NoGapViewsCoincide) {
  const auto p = split_modalities(base, 0.0, 24, 9);
  EXPECT_EQ(p.d_t, p.d_b);
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t c = 0; c < p.d_b; ++c) EXPECT_EQ(p.x_a(i, c), p.x_b(i, c));
  }
  EXPECT_FALSE(p.x_a == p.x_b);  // independent noise
  const auto q = split_modalities(base, 0.0, 24, 9, true);
  EXPECT_TRUE(q.x_a == q.x_b);
}

TEST_F(SplitFixture, FullGapSharesNothing) {
  const auto p = split_modalities(base, 1.0, 24, 9);
  EXPECT_EQ(p.d_t, 0u);
  EXPECT_EQ(p.d_a, 16u);
  for (const auto& ci : p.columns_a) EXPECT_NE(ci.provenance, Provenance::shared_decisive);
  std::set<int> a_src, b_src;
  for (const auto& ci : p.columns_a)
    if (ci.source >= 0) a_src.insert(ci.source);
  for (const auto& ci : p.columns_b)
    if (ci.source >= 0) b_src.insert(ci.source);
  for (int s : a_src) EXPECT_FALSE(b_src.count(s));
}

TEST_F(SplitFixture, RealizedGapWithinRounding) {
  for (int i = 0; i <= 100; ++i) {
    const double g = i / 100.0;
    const auto p = split_modalities(base, g, 24, 1);
    EXPECT_LE(std::abs(p.gamma - g), 1.0 / static_cast<double>(p.d_b) + 1e-12);
    EXPECT_EQ(p.d_a + p.d_t, 2 * p.d_b);
  }
}

TEST_F(SplitFixture, ColumnMapPartitionsEachView) {
  for (double g : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const auto p = split_modalities(base, g, 24, 3);
    for (const auto* cols : {&p.columns_a, &p.columns_b}) {
      ASSERT_EQ(cols->size(), 24u);
      std::size_t dec = 0, noise = 0;
      std::set<int> sources;
      for (const auto& ci : *cols) {
        if (ci.provenance == Provenance::noise) {
          ++noise;
          EXPECT_EQ(ci.source, -1);
        } else {
          ++dec;
          EXPECT_TRUE(sources.insert(ci.source).second);
        }
      }
      EXPECT_EQ(dec, p.d_b);
      EXPECT_EQ(noise, 24 - p.d_b);
    }
  }
}

TEST_F(SplitFixture, RejectsBadGap) {
  EXPECT_THROW(split_modalities(base, 1.5, 24, 1), InvalidArgument);
  EXPECT_THROW(split_modalities(base, -0.1, 24, 1), InvalidArgument);
  EXPECT_THROW(split_modalities(base, 0.5, 4, 1), InvalidArgument);
}

TEST_F(SplitFixture, TrainTestSplitIsStratifiedDisjointDeterministic) {
  const auto p = split_modalities(base, 0.5, 24, 3);
  const auto s1 = train_test_split(p, 0.25, 42), s2 = train_test_split(p, 0.25, 42);
  EXPECT_TRUE(s1.train.x_a == s2.train.x_a);
  EXPECT_TRUE(s1.test.x_b == s2.test.x_b);
  EXPECT_EQ(s1.train.size() + s1.test.size(), p.size());

  // Disjoint and complete: identify rows by their first teacher value.
  std::multiset<double> all, parts;
  for (std::size_t i = 0; i < p.size(); ++i) all.insert(p.x_a(i, 0));
  for (const auto* part : {&s1.train, &s1.test})
    for (std::size_t i = 0; i < part->size(); ++i) parts.insert(part->x_a(i, 0));
  EXPECT_EQ(all, parts);

  std::map<std::size_t, std::size_t> total, test;
  for (auto v : p.y) ++total[v];
  for (auto v : s1.test.y) ++test[v];
  for (auto [k, n] : total) EXPECT_EQ(test[k], static_cast<std::size_t>(std::lround(0.25 * n)));
  EXPECT_THROW(train_test_split(p, 1.0, 1), InvalidArgument);
}

}  // namespace
