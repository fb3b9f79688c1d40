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

// ntdh: command-line driver for the synthetic sweeps.
//
// Exit codes: 0 ok, 1 unexpected error, 2 config error, 3 training failure,
// 4 `report --assert` found a failing check.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ntdh/experiment/config.hpp"
#include "ntdh/experiment/report.hpp"
#include "ntdh/experiment/sweeps.hpp"

namespace {

using namespace ntdh;
using namespace ntdh::exp;

struct Globals {
  std::string config_path;
  std::string out;
  std::string seeds;
  std::vector<std::string> overrides;
  std::size_t jobs = 0;
  bool quiet = false;
};

ExperimentConfig load(const Globals& g) {
  ExperimentConfig cfg = g.config_path.empty() ? ExperimentConfig{} : parse_config(g.config_path);
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    set_key(cfg, exp::detail::trim(kv.substr(0, eq)), exp::detail::trim(kv.substr(eq + 1)));
  }
  if (!g.out.empty()) cfg.output_dir = g.out;
  if (!g.seeds.empty()) cfg.seeds = exp::detail::parse_seed_list(g.seeds);
  cfg.validate();
  return cfg;
}

RunOptions run_options(const Globals& g) {
  return {g.jobs == 0 ? default_jobs() : g.jobs, !g.quiet};
}

void print_table_result(const TableResult& r) {
  std::printf("%s: %zu rows (%zu computed, %zu reused", r.path.c_str(), r.table.rows.size(), r.computed,
              r.reused);
  if (r.discarded) std::printf(", %zu stale rows dropped", r.discarded);
  std::printf(")\n");
}

int cmd_gen(const Globals& g, double gamma, std::uint64_t seed) {
  ExperimentConfig cfg = load(g);
  std::filesystem::create_directories(cfg.output_dir);
  GenConfig gc = cfg.gen;
  gc.rng_seed = stage_seed(cfg, seed, "data");
  const auto pair =
      split_modalities(generate_base(gc), gamma, cfg.gen.d_total, stage_seed(cfg, seed, "views"), cfg.shared_noise);
  const std::string stem = "pair_" + group_id(gamma, seed);
  write_pair_csv(out_path(cfg, stem + ".csv"), pair);
  write_column_map_csv(out_path(cfg, stem + "_columns.csv"), pair);
  std::printf("%s: n=%zu classes=%zu d_b=%zu d_a=%zu d_t=%zu gamma=%.4f\n", out_path(cfg, stem + ".csv").c_str(),
              pair.size(), pair.n_classes, pair.d_b, pair.d_a, pair.d_t, pair.gamma);
  return 0;
}

int cmd_check(const Globals& g) {
  const ExperimentConfig cfg = load(g);
  const auto r = run_check_assumptions(cfg, run_options(g));
  print_table_result(r);
  bool ok = true;
  for (const auto& c : check_assumption_table(r.table, cfg.strength_tolerance)) {
    std::printf("%s %s: %s (%s)\n", c.pass ? "PASS" : "FAIL", c.id.c_str(), c.description.c_str(),
                c.detail.c_str());
    ok = ok && c.pass;
  }
  return ok ? 0 : 4;
}

int cmd_sweep(const Globals& g, ExperimentKind kind) {
  ExperimentConfig cfg = load(g);
  cfg.experiment = kind;
  print_table_result(run_experiment(cfg, run_options(g)));
  return 0;
}

int cmd_report(const Globals& g, bool assert_mode) {
  const ExperimentConfig cfg = load(g);
  const double mg = cfg.mask_gammas.front();
  const auto checks = evaluate_outputs(cfg.output_dir, mg, mg, cfg.strength_tolerance);
  for (const auto& c : checks) {
    const char* tag = !c.evaluated ? "MISSING" : c.pass ? "PASS" : c.gating ? "FAIL" : "WARN";
    std::printf("%-7s %-8s %s", tag, c.id.c_str(), c.description.c_str());
    if (!c.detail.empty()) std::printf(" [%s]", c.detail.c_str());
    std::printf("\n");
  }
  return assert_mode && !all_passed(checks) ? 4 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic teacher/student modality-gap experiments"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "INI-style experiment config")->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "Output directory (overrides experiment.output_dir)");
  app.add_option("--seeds", g.seeds, "Seed list, e.g. 0-4 or 0,2,7");
  app.add_option("--jobs", g.jobs, "Worker threads (default: hardware concurrency)");
  app.add_option("--set", g.overrides, "Override a config key: --set train.epochs=20 (repeatable)");
  app.add_flag("-q,--quiet", g.quiet, "No per-group progress on stderr");
  app.set_help_all_flag("--help-all");

  double gen_gamma = 0.5;
  std::uint64_t gen_seed = 0;
  auto* gen = app.add_subcommand("gen", "Write one generated modality pair and its column map");
  gen->add_option("--gamma", gen_gamma, "Modality gap in [0, 1]")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--seed", gen_seed, "Seed value");
  auto* check = app.add_subcommand("check-assumptions", "Capacity and strength parity at every gap value");
  auto* sg = app.add_subcommand("sweep-gamma", "Vanilla KD across the gap grid");
  auto* sw = app.add_subcommand("sweep-weights", "Decoupled KD alpha/beta grids across the gap grid");
  auto* sf = app.add_subcommand("sweep-feature-mask", "Saliency-driven teacher feature masking");
  auto* ss = app.add_subcommand("sweep-sample-mask", "Per-minibatch sample masking of the KD term");
  bool assert_mode = false;
  auto* rep = app.add_subcommand("report", "Evaluate the trend checks on existing outputs");
  rep->add_flag("--assert", assert_mode, "Exit with 4 if any check fails or is missing");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*gen) return cmd_gen(g, gen_gamma, gen_seed);
    if (*check) return cmd_check(g);
    if (*sg) return cmd_sweep(g, ExperimentKind::gamma_sweep);
    if (*sw) return cmd_sweep(g, ExperimentKind::weight_sweep);
    if (*sf) return cmd_sweep(g, ExperimentKind::feature_mask_sweep);
    if (*ss) return cmd_sweep(g, ExperimentKind::sample_mask_sweep);
    if (*rep) return cmd_report(g, assert_mode);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const InfeasibleConfig& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const TrainingFailure& e) {
    std::fprintf(stderr, "training failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
