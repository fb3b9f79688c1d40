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

// Pass/fail evaluation of the sweep outputs. Every check works on parsed
// tables so it can be exercised on hand-built fixtures.

#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ntdh/experiment/csv.hpp"
#include "ntdh/experiment/stats.hpp"

namespace ntdh::exp {

struct Check {
  std::string id;
  std::string description;
  bool evaluated = false;  // false when the input table is missing
  bool pass = false;
  std::string detail;
  /// Informational checks are reported but never fail `report --assert`.
  bool gating = true;
};

namespace detail {

inline std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

/// key -> values, in first-seen key order.
template <class K>
struct Groups {
  std::vector<K> keys;
  std::map<K, std::vector<double>> values;
  void add(const K& k, double v) {
    if (!values.count(k)) keys.push_back(k);
    values[k].push_back(v);
  }
  double mean_of(const K& k) const { return values.count(k) ? ntdh::exp::mean(values.at(k)) : NAN; }
};

inline bool near(double a, double b) { return std::abs(a - b) < 1e-9; }

}  // namespace detail

/// Student accuracy falls with the gap (Spearman of seed means <= -0.8) and
/// NCJSD rises more than TCJSD from the smallest to the largest gap in at
/// least 80% of seeds.
inline std::vector<Check> check_gamma_trend(const CsvTable& t) {
  detail::Groups<double> acc;
  std::map<std::string, std::map<double, std::pair<double, double>>> per_seed;  // seed -> gamma -> (tc, nc)
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double g = t.num(r, "gamma");
    acc.add(g, t.num(r, "student_acc"));
    per_seed[t.str(r, "seed")][g] = {t.num(r, "tcjsd_tail10"), t.num(r, "ncjsd_tail10")};
  }
  std::vector<double> gs, ms;
  for (double g : acc.keys) {
    gs.push_back(g);
    ms.push_back(acc.mean_of(g));
  }
  Check a{"C5a", "student accuracy decreases with the gap (Spearman <= -0.8)", true, false, ""};
  const double rho = gs.size() >= 2 ? spearman(gs, ms) : NAN;
  a.pass = rho <= -0.8;
  a.detail = detail::fmt("spearman=%.3f", rho);
  for (std::size_t i = 0; i < gs.size(); ++i) a.detail += detail::fmt(" g%.2f:%.4f", gs[i], ms[i]);

  Check b{"C5b", "NCJSD rises more than TCJSD across the gap in >= 80% of seeds", true, false, ""};
  std::size_t hits = 0, n = 0;
  for (const auto& [seed, by_g] : per_seed) {
    if (by_g.size() < 2) continue;
    const auto& lo = by_g.begin()->second;
    const auto& hi = by_g.rbegin()->second;
    ++n;
    if (hi.second - lo.second > hi.first - lo.first) ++hits;
  }
  b.pass = n > 0 && static_cast<double>(hits) >= 0.8 * static_cast<double>(n) - 1e-12;
  b.detail = std::to_string(hits) + "/" + std::to_string(n) + " seeds";
  return {a, b};
}

/// At the largest gap, target-heavy weights beat non-target-heavy ones by
/// more than 2 points; at the smallest gap they agree within 3 points.
inline std::vector<Check> check_weight_contrast(const CsvTable& t) {
  double amax = -INFINITY, amin = INFINITY, bmax = -INFINITY, bmin = INFINITY, gmin = INFINITY, gmax = -INFINITY;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.str(r, "sub") != "contrast") continue;
    const double a = t.num(r, "alpha"), b = t.num(r, "beta"), g = t.num(r, "gamma");
    amax = std::max(amax, a), amin = std::min(amin, a), bmax = std::max(bmax, b), bmin = std::min(bmin, b);
    gmin = std::min(gmin, g), gmax = std::max(gmax, g);
  }
  detail::Groups<std::pair<double, int>> acc;  // (gamma, 1 = target-heavy / 0 = non-target-heavy)
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.str(r, "sub") != "contrast") continue;
    const double a = t.num(r, "alpha"), b = t.num(r, "beta");
    if (detail::near(a, amax) && detail::near(b, bmin)) acc.add({t.num(r, "gamma"), 1}, t.num(r, "student_acc"));
    if (detail::near(a, amin) && detail::near(b, bmax)) acc.add({t.num(r, "gamma"), 0}, t.num(r, "student_acc"));
  }
  Check hi{"C6a", "largest gap: target-heavy weights beat non-target-heavy by > 2 points", true, false, ""};
  Check lo{"C6b", "smallest gap: the two weightings agree within 3 points", true, false, ""};
  const double dh = acc.mean_of({gmax, 1}) - acc.mean_of({gmax, 0});
  const double dl = acc.mean_of({gmin, 1}) - acc.mean_of({gmin, 0});
  hi.pass = dh > 0.02;
  lo.pass = std::abs(dl) <= 0.03;
  hi.detail = detail::fmt("gamma=%.2f diff=%+.4f", gmax, dh);
  lo.detail = detail::fmt("gamma=%.2f diff=%+.4f", gmin, dl);

  // Largest beta (alpha = 1) against the no-KD student, at every gap > 0.4.
  detail::Groups<double> ce, top;
  double btop = -INFINITY;
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    if (t.str(r, "sub") == "beta") btop = std::max(btop, t.num(r, "beta"));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double g = t.num(r, "gamma");
    if (g <= 0.4) continue;
    if (t.str(r, "sub") == "ce") ce.add(g, t.num(r, "student_acc"));
    if (t.str(r, "sub") == "beta" && detail::near(t.num(r, "beta"), btop)) top.add(g, t.num(r, "student_acc"));
  }
  Check neg{"C6-info", "gap > 0.4: largest-beta student ends below the no-KD student", true, !ce.keys.empty(), ""};
  neg.gating = false;
  for (double g : ce.keys) {
    const double d = top.mean_of(g) - ce.mean_of(g);
    neg.pass = neg.pass && d < 0.0;
    if (!neg.detail.empty()) neg.detail += ' ';
    neg.detail += detail::fmt("g%.2f:%+.4f", g, d);
  }
  return {hi, lo, neg};
}

namespace detail {

struct MaskCurves {
  std::map<std::string, Groups<double>> by_mode;  // mode -> ratio -> accs
  double unmasked = NAN, ce = NAN;
};

inline MaskCurves mask_curves(const CsvTable& t, double gamma) {
  MaskCurves m;
  std::vector<double> none, ce;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (!near(t.num(r, "gamma"), gamma)) continue;
    const std::string& mode = t.str(r, "mode");
    const double acc = t.num(r, "student_acc");
    if (mode == "none") none.push_back(acc);
    else if (mode == "ce") ce.push_back(acc);
    else m.by_mode[mode].add(t.num(r, "ratio"), acc);
  }
  m.unmasked = none.empty() ? NAN : ntdh::exp::mean(none);
  m.ce = ce.empty() ? NAN : ntdh::exp::mean(ce);
  return m;
}

}  // namespace detail

/// Feature-mask checks at one gap value: the true-mask curve peaks above the
/// unmasked baseline, false <= true for every ratio <= 0.5, and the value at
/// ratio 0.9 sits below the peak.
inline std::vector<Check> check_feature_mask(const CsvTable& t, double gamma) {
  const auto m = detail::mask_curves(t, gamma);
  const auto& tr = m.by_mode.count("true") ? m.by_mode.at("true") : detail::Groups<double>{};
  const auto& fa = m.by_mode.count("false") ? m.by_mode.at("false") : detail::Groups<double>{};
  double peak = -INFINITY, peak_r = NAN;
  for (double r : tr.keys)
    if (tr.mean_of(r) > peak) peak = tr.mean_of(r), peak_r = r;
  Check a{"C7a", "true-mask curve peaks above the unmasked baseline", true, peak > m.unmasked,
          detail::fmt("peak=%.4f at ratio %.2f, unmasked=%.4f", peak, peak_r, m.unmasked)};
  Check b{"C7b", "false mask <= true mask at every ratio <= 0.5", true, !tr.keys.empty(), ""};
  for (double r : tr.keys) {
    if (r > 0.5 + 1e-12 || !fa.values.count(r)) continue;
    const bool ok = fa.mean_of(r) <= tr.mean_of(r);
    b.pass = b.pass && ok;
    if (!b.detail.empty()) b.detail += ' ';
    b.detail += detail::fmt("r%.2f:%+.4f", r, tr.mean_of(r) - fa.mean_of(r));
  }
  double at9 = NAN;
  for (double r : tr.keys)
    if (detail::near(r, 0.9)) at9 = tr.mean_of(r);
  Check c{"C7c", "true-mask accuracy at ratio 0.9 is below the peak", true, at9 < peak,
          detail::fmt("at0.9=%.4f peak=%.4f", at9, peak)};
  return {a, b, c};
}

/// Sample-mask checks: some ratio <= 0.5 beats unmasked KD, and masking all
/// samples lands within 2 points of the no-KD student.
inline std::vector<Check> check_sample_mask(const CsvTable& t, double gamma) {
  const auto m = detail::mask_curves(t, gamma);
  const auto& tr = m.by_mode.count("true") ? m.by_mode.at("true") : detail::Groups<double>{};
  Check a{"C8a", "true sample mask beats unmasked KD at some ratio <= 0.5", true, false, ""};
  double best = -INFINITY, best_r = NAN, full = NAN;
  for (double r : tr.keys) {
    if (r <= 0.5 + 1e-12 && tr.mean_of(r) > best) best = tr.mean_of(r), best_r = r;
    if (detail::near(r, 1.0)) full = tr.mean_of(r);
  }
  a.pass = best > m.unmasked;
  a.detail = detail::fmt("best=%.4f at ratio %.2f, unmasked=%.4f", best, best_r, m.unmasked);
  Check b{"C8b", "ratio 1.0 matches the no-KD student within 2 points", true, std::abs(full - m.ce) <= 0.02,
          detail::fmt("ratio1=%.4f no-kd=%.4f", full, m.ce)};
  const auto mode_at = [&](const char* mode, double r) {
    return m.by_mode.count(mode) ? m.by_mode.at(mode).mean_of(r) : NAN;
  };
  const double t25 = mode_at("true", 0.25), f25 = mode_at("false", 0.25), r25 = mode_at("random", 0.25);
  Check c{"C8-info", "ratio 0.25: true mask >= unmasked - 0.5 points", true, t25 >= m.unmasked - 0.005,
          detail::fmt("true=%.4f unmasked=%.4f", t25, m.unmasked)};
  c.gating = false;
  Check d{"C8-info", "ratio 0.25: random mask lies between false and true", true,
          r25 >= std::min(t25, f25) && r25 <= std::max(t25, f25),
          detail::fmt("true=%.4f random=%.4f false=%.4f", t25, r25, f25)};
  d.gating = false;
  return {a, b, c, d};
}

/// Capacity parity and view-strength parity (|acc_a - acc_b| <= tol) in
/// every (gap, seed) row.
inline std::vector<Check> check_assumption_table(const CsvTable& t, double tol) {
  Check cap{"C10a", "teacher and student parameter counts are equal", true, !t.rows.empty(), ""};
  Check str{"C10b", "every (gap, seed): unimodal accuracies of the two views agree within tolerance", true,
            !t.rows.empty(), ""};
  double worst = 0.0;
  std::string worst_cell;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.str(r, "capacity_teacher") != t.str(r, "capacity_student")) {
      cap.pass = false;
      cap.detail = "mismatch in " + t.str(r, "cell");
    }
    const double d = std::abs(t.num(r, "acc_a") - t.num(r, "acc_b"));
    if (d > worst) worst = d, worst_cell = t.str(r, "cell");
    if (d > tol) str.pass = false;
  }
  if (cap.pass) cap.detail = "params=" + t.str(0, "capacity_teacher");
  str.detail = detail::fmt("max |acc_a-acc_b|=%.4f tol=%.3f", worst, tol) + " (" + worst_cell + ")";
  return {cap, str};
}

/// Reads whatever sweep outputs exist in `dir` and evaluates the checks.
/// Missing tables produce unevaluated entries.
inline std::vector<Check> evaluate_outputs(const std::string& dir, double feature_gamma, double sample_gamma,
                                           double strength_tol) {
  std::vector<Check> out;
  auto file = [&](const char* f) { return (std::filesystem::path(dir) / f).string(); };
  auto missing = [&](const char* id, const char* what) {
    out.push_back({id, std::string(what) + " (no output found)", false, false, ""});
  };
  auto append = [&](std::vector<Check> v) { out.insert(out.end(), v.begin(), v.end()); };
  if (std::filesystem::exists(file("gamma_sweep.csv"))) {
    const auto t = read_csv(file("gamma_sweep.csv"));
    append(check_gamma_trend(t));
    append(check_assumption_table(t, strength_tol));
  } else if (std::filesystem::exists(file("assumptions.csv"))) {
    missing("C5", "gap trend");
    append(check_assumption_table(read_csv(file("assumptions.csv")), strength_tol));
  } else {
    missing("C5", "gap trend");
    missing("C10", "assumptions");
  }
  if (std::filesystem::exists(file("weight_sweep.csv"))) append(check_weight_contrast(read_csv(file("weight_sweep.csv"))));
  else missing("C6", "weight contrast");
  if (std::filesystem::exists(file("feature_mask_sweep.csv")))
    append(check_feature_mask(read_csv(file("feature_mask_sweep.csv")), feature_gamma));
  else missing("C7", "feature mask");
  if (std::filesystem::exists(file("sample_mask_sweep.csv")))
    append(check_sample_mask(read_csv(file("sample_mask_sweep.csv")), sample_gamma));
  else missing("C8", "sample mask");
  return out;
}

inline bool all_passed(const std::vector<Check>& checks) {
  for (const auto& c : checks)
    if (c.gating && (!c.evaluated || !c.pass)) return false;
  return true;
}

}  // namespace ntdh::exp
