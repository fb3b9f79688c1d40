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

#include <filesystem>
#include <string>
#include <vector>

#include "ntdh/experiment/csv.hpp"
#include "ntdh/experiment/report.hpp"

namespace {

using namespace ntdh::exp;

const Check& find(const std::vector<Check>& v, const std::string& id, std::size_t nth = 0) {
  for (const auto& c : v)
    if (c.id == id && nth-- == 0) return c;
  throw std::runtime_error("no check " + id);
}

CsvTable gamma_table(const std::vector<double>& accs, bool nc_rises) {
  CsvTable t;
  t.header = {"config_hash", "cell", "gamma", "seed", "student_acc", "tcjsd_tail10", "ncjsd_tail10",
              "capacity_teacher", "capacity_student", "acc_a", "acc_b"};
  const std::vector<double> gs = {0, 0.25, 0.5, 0.75, 1};
  for (std::size_t g = 0; g < gs.size(); ++g)
    for (int s = 0; s < 5; ++s) {
      const double nc = nc_rises ? 0.01 + 0.1 * gs[g] : 0.01;
      const double tc = 0.01 + 0.02 * gs[g];
      t.rows.push_back({"h", "c", num(gs[g]), std::to_string(s), num(accs[g] + 0.001 * s), num(tc), num(nc),
                        "1410", "1410", num(0.9), num(0.9 - 0.005 * s)});
    }
  return t;
}

TEST(Report, GammaTrendPassesOnFallingAccuracy) {
  const auto c = check_gamma_trend(gamma_table({0.9, 0.85, 0.86, 0.7, 0.6}, true));
  EXPECT_TRUE(find(c, "C5a").pass) << find(c, "C5a").detail;
  EXPECT_TRUE(find(c, "C5b").pass);
  EXPECT_EQ(find(c, "C5b").detail, "5/5 seeds");
}

TEST(Report, GammaTrendFailsOnFlatOrRisingCurves) {
  // Spearman = -0.7 for this ordering.
  const auto c = check_gamma_trend(gamma_table({0.9, 0.7, 0.8, 0.75, 0.6}, false));
  EXPECT_FALSE(find(c, "C5a").pass) << find(c, "C5a").detail;
  EXPECT_FALSE(find(c, "C5b").pass);
}

TEST(Report, GammaTrendSeedMajority) {
  auto t = gamma_table({0.9, 0.85, 0.8, 0.7, 0.6}, true);
  // Break seed 0 at gamma 1: NCJSD rise becomes smaller than TCJSD rise.
  for (auto& r : t.rows)
    if (r[3] == "0" && r[2] == "1") r[6] = "0.0";
  EXPECT_TRUE(find(check_gamma_trend(t), "C5b").pass);
  for (auto& r : t.rows)
    if (r[3] == "1" && r[2] == "1") r[6] = "0.0";
  EXPECT_FALSE(find(check_gamma_trend(t), "C5b").pass);
}

CsvTable weight_table(double hi_gap_diff, double lo_gap_diff, double beta_top_minus_ce) {
  CsvTable t;
  t.header = {"gamma", "seed", "sub", "alpha", "beta", "student_acc"};
  for (double g : {0.0, 1.0})
    for (int s = 0; s < 5; ++s) {
      const double base = 0.8 - 0.1 * g;
      const double d = g == 1.0 ? hi_gap_diff : lo_gap_diff;
      t.rows.push_back({num(g), std::to_string(s), "ce", "na", "na", num(base)});
      t.rows.push_back({num(g), std::to_string(s), "beta", "1", "4", num(base + beta_top_minus_ce)});
      t.rows.push_back({num(g), std::to_string(s), "beta", "1", "0.25", num(base + 0.05)});
      t.rows.push_back({num(g), std::to_string(s), "contrast", "4", "0.25", num(base + d)});
      t.rows.push_back({num(g), std::to_string(s), "contrast", "0.25", "4", num(base)});
    }
  return t;
}

TEST(Report, WeightContrast) {
  auto c = check_weight_contrast(weight_table(0.03, 0.01, -0.01));
  EXPECT_TRUE(find(c, "C6a").pass) << find(c, "C6a").detail;
  EXPECT_TRUE(find(c, "C6b").pass);
  EXPECT_TRUE(find(c, "C6-info").pass);
  EXPECT_FALSE(find(c, "C6-info").gating);

  c = check_weight_contrast(weight_table(0.015, -0.031, 0.01));
  EXPECT_FALSE(find(c, "C6a").pass);
  EXPECT_FALSE(find(c, "C6b").pass);
  EXPECT_FALSE(find(c, "C6-info").pass);
  EXPECT_TRUE(all_passed({find(c, "C6-info")}));
}

CsvTable mask_table(const std::vector<double>& tr, const std::vector<double>& fa, double unmasked, double ce,
                    std::vector<double> ratios = {}, double gamma = 0.5) {
  if (ratios.empty())
    for (std::size_t i = 0; i < tr.size(); ++i) ratios.push_back((i + 1) / 10.0);
  CsvTable t;
  t.header = {"gamma", "seed", "mode", "ratio", "student_acc"};
  for (int s = 0; s < 3; ++s) {
    t.rows.push_back({num(gamma), std::to_string(s), "none", "0", num(unmasked)});
    t.rows.push_back({num(gamma), std::to_string(s), "ce", "0", num(ce)});
    for (std::size_t i = 0; i < tr.size(); ++i) {
      const double r = ratios[i];
      t.rows.push_back({num(gamma), std::to_string(s), "true", num(r), num(tr[i])});
      t.rows.push_back({num(gamma), std::to_string(s), "false", num(r), num(fa[i])});
      t.rows.push_back({num(gamma), std::to_string(s), "random", num(r), num(0.5 * (tr[i] + fa[i]))});
    }
  }
  // Another gap with garbage, to make sure the filter works.
  t.rows.push_back({"0.25", "0", "true", "0.1", "0"});
  return t;
}

TEST(Report, FeatureMaskOrdering) {
  const std::vector<double> tr = {0.71, 0.73, 0.75, 0.74, 0.72, 0.7, 0.66, 0.6, 0.5};
  const std::vector<double> fa = {0.69, 0.66, 0.62, 0.6, 0.58, 0.75, 0.5, 0.45, 0.4};
  auto c = check_feature_mask(mask_table(tr, fa, 0.72, 0.7), 0.5);
  EXPECT_TRUE(find(c, "C7a").pass) << find(c, "C7a").detail;
  EXPECT_TRUE(find(c, "C7b").pass) << find(c, "C7b").detail;  // the 0.6 inversion is ignored
  EXPECT_TRUE(find(c, "C7c").pass);

  auto fa2 = fa;
  fa2[4] = 0.721;
  c = check_feature_mask(mask_table(tr, fa2, 0.76, 0.7), 0.5);
  EXPECT_FALSE(find(c, "C7a").pass);
  EXPECT_FALSE(find(c, "C7b").pass);

  auto flat = tr;
  flat[8] = 0.75;
  EXPECT_FALSE(find(check_feature_mask(mask_table(flat, fa, 0.72, 0.7), 0.5), "C7c").pass);
}

TEST(Report, SampleMaskChecks) {
  const std::vector<double> ratios = {0.1, 0.25, 0.5, 0.75, 1.0};
  std::vector<double> tr = {0.71, 0.72, 0.7, 0.66, 0.655};
  std::vector<double> fa(tr.size(), 0.6);
  auto c = check_sample_mask(mask_table(tr, fa, 0.705, 0.64, ratios), 0.5);
  EXPECT_TRUE(find(c, "C8a").pass) << find(c, "C8a").detail;
  EXPECT_TRUE(find(c, "C8b").pass) << find(c, "C8b").detail;
  EXPECT_TRUE(find(c, "C8-info", 0).pass);
  EXPECT_TRUE(find(c, "C8-info", 1).pass);
  EXPECT_FALSE(find(c, "C8-info", 0).gating);

  tr[4] = 0.67;  // 3 points off the no-KD student
  c = check_sample_mask(mask_table(tr, fa, 0.73, 0.64, ratios), 0.5);
  EXPECT_FALSE(find(c, "C8a").pass);
  EXPECT_FALSE(find(c, "C8b").pass);
}

TEST(Report, AssumptionTable) {
  auto t = gamma_table({0.9, 0.85, 0.8, 0.7, 0.6}, true);
  auto c = check_assumption_table(t, 0.03);
  EXPECT_TRUE(find(c, "C10a").pass);
  EXPECT_TRUE(find(c, "C10b").pass) << find(c, "C10b").detail;
  EXPECT_FALSE(find(check_assumption_table(t, 0.019), "C10b").pass);
  EXPECT_TRUE(find(check_assumption_table(t, 0.021), "C10b").pass);
  t.rows[3][8] = "1411";
  EXPECT_FALSE(find(check_assumption_table(t, 0.03), "C10a").pass);
}

TEST(Report, MissingOutputsAreNotEvaluated) {
  const auto dir = std::filesystem::path(testing::TempDir()) / "ntdh_report_empty";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  auto c = evaluate_outputs(dir.string(), 0.5, 0.5, 0.03);
  ASSERT_EQ(c.size(), 5u);
  for (const auto& x : c) EXPECT_FALSE(x.evaluated);
  EXPECT_FALSE(all_passed(c));

  write_csv((dir / "gamma_sweep.csv").string(), gamma_table({0.9, 0.85, 0.8, 0.7, 0.6}, true));
  c = evaluate_outputs(dir.string(), 0.5, 0.5, 0.03);
  EXPECT_TRUE(find(c, "C5a").evaluated && find(c, "C5a").pass);
  EXPECT_TRUE(find(c, "C10b").pass);
  EXPECT_FALSE(find(c, "C6").evaluated);
  std::filesystem::remove_all(dir);
}

}  // namespace
