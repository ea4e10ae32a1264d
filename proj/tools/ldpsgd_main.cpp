// Copyright 2026 The ldpsgd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"

#include "ldpsgd/experiments.hpp"

namespace {

using namespace ldpsgd;

struct CommonOpts {
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 0;
  bool serial = false;
  bool paper_scale = false;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOpts& opts, const std::string& default_out) {
  opts.out = default_out;
  cmd->add_option("--seed", opts.seed, "Root RNG seed")->each([&](const std::string&) {
    opts.seed_set = true;
  });
  cmd->add_option("--jobs", opts.jobs, "Worker threads (0 = all cores)");
  cmd->add_flag("--serial", opts.serial, "Run replications serially");
  cmd->add_flag("--paper-scale", opts.paper_scale,
                "Use the full-size stream and replication counts");
  cmd->add_option("--out", opts.out, "Output directory");
}

ExecMode exec_mode(const CommonOpts& opts) {
  return opts.serial ? ExecMode::kSerial : ExecMode::kOpenMp;
}

void print_cell_summary(const CellResult& cell) {
  std::printf("  %-28s", cell.cell_id.c_str());
  if (cell.dist_fit) {
    std::printf("  slope %+0.3f", cell.dist_fit->slope);
  }
  if (cell.dist_bar_fit) {
    std::printf("  avg slope %+0.3f", cell.dist_bar_fit->slope);
  }
  std::printf("  avg-wins %.0f%%", 100.0 * cell.dominance_fraction());
  if (cell.flagged_nonconverging) {
    std::printf("  [non-converging]");
  }
  std::printf("\n");
}

int cmd_run(const CommonOpts& opts, const std::string& config_path,
            const std::string& recipe_name) {
  ExperimentConfig cfg =
      !config_path.empty() ? ExperimentConfig::load(config_path) : recipe(recipe_name);
  if (opts.seed_set) cfg.seed = opts.seed;
  if (opts.paper_scale) apply_paper_scale(cfg);
  const std::string out = opts.out.empty() ? "out/" + cfg.name : opts.out;
  const ExperimentResult result = run_experiment(cfg, out, exec_mode(opts), opts.jobs);
  std::printf("%s: %zu cell(s) -> %s\n", cfg.name.c_str(), result.cells.size(),
              out.c_str());
  for (const CellResult& cell : result.cells) print_cell_summary(cell);
  return 0;
}

int cmd_compare(const CommonOpts& opts) {
  MechCompareConfig cfg;
  if (opts.seed_set) cfg.seed = opts.seed;
  if (opts.paper_scale) {
    cfg.n = 300000;
    cfg.replications = 200;
  }
  const MechCompareResult result =
      run_mechanism_comparison(cfg, opts.out, exec_mode(opts), opts.jobs);
  std::printf("mechanism comparison -> %s\n", opts.out.c_str());
  std::printf("  budget matching (mu, eps, delta):\n");
  for (const auto& row : result.matching) {
    std::printf("    mu=%g  eps=%g  delta=%.6g\n", row[0], row[1], row[2]);
  }
  for (const CellResult& cell : result.cells) print_cell_summary(cell);
  return 0;
}

int cmd_clipping(const CommonOpts& opts) {
  ClipBiasConfig cfg;
  if (opts.seed_set) cfg.seed = opts.seed;
  if (opts.paper_scale) {
    cfg.n = 300000;
    cfg.replications = 200;
  }
  const ClipBiasResult result =
      run_clipping_bias(cfg, opts.out, exec_mode(opts), opts.jobs);
  std::printf("clipping bias (clip norm %.4f) -> %s\n", result.clip_norm,
              opts.out.c_str());
  auto report = [](const char* label, const CoordinateStats& stats) {
    std::printf("  %-18s", label);
    for (std::size_t k = 0; k < stats.mean.size(); ++k) {
      std::printf("  %.4f (se %.4f)", stats.mean[k], stats.se[k]);
    }
    std::printf("\n");
  };
  report("mallows average", result.mallows_bar);
  report("clipped average", result.clipped_bar);
  return 0;
}

int cmd_ingest(const CommonOpts& opts, const IngestConfig& base) {
  IngestConfig cfg = base;
  if (opts.seed_set) cfg.seed = opts.seed;
  if (opts.paper_scale) cfg.synthetic_rows = 1000000;
  const IngestResult result = run_ingest(cfg, opts.out, exec_mode(opts), opts.jobs);
  std::printf("ingest run -> %s\n", opts.out.c_str());
  if (cfg.classification) {
    std::printf("  majority baseline accuracy %.4f\n", result.majority_accuracy);
    std::printf("  final averaged-iterate accuracy %.4f\n", result.final_accuracy_bar);
  } else {
    std::printf("  final averaged-iterate test mse %.6g\n", result.test_loss_bar.back());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Locally private streaming stochastic optimization"};
  app.require_subcommand(1);

  CommonOpts run_opts, compare_opts, clip_opts, ingest_opts;
  std::string config_path;
  std::string recipe_name = "fig2-right";
  IngestConfig ingest_cfg;
  bool regression = false;

  CLI::App* run = app.add_subcommand("run", "Run a synthetic experiment grid");
  run->add_option("--config", config_path, "JSON experiment config")
      ->check(CLI::ExistingFile);
  run->add_option("--recipe", recipe_name, "Built-in configuration name")
      ->check(CLI::IsMember(ldpsgd::recipe_names()));
  add_common(run, run_opts, "");

  CLI::App* compare =
      app.add_subcommand("compare-mechanisms", "Compare noise mechanisms at matched budgets");
  add_common(compare, compare_opts, "out/compare-mechanisms");

  CLI::App* clip =
      app.add_subcommand("clipping-bias", "Contrast gradient clipping with a bounded loss");
  add_common(clip, clip_opts, "out/clipping-bias");

  CLI::App* ingest = app.add_subcommand("ingest-run", "Train privately on a tabular CSV");
  ingest->add_option("--csv", ingest_cfg.csv_path, "Input CSV (default: synthesize one)");
  ingest->add_option("--rows", ingest_cfg.synthetic_rows, "Rows when synthesizing");
  ingest->add_option("--replications", ingest_cfg.replications, "Permuted replications");
  ingest->add_flag("--regression", regression, "Fit the response instead of the class");
  add_common(ingest, ingest_opts, "out/ingest");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_opts, config_path, recipe_name);
    if (compare->parsed()) return cmd_compare(compare_opts);
    if (clip->parsed()) return cmd_clipping(clip_opts);
    ingest_cfg.classification = !regression;
    return cmd_ingest(ingest_opts, ingest_cfg);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
