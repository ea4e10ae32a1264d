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

#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ldpsgd/datagen.hpp"
#include "ldpsgd/diagnostics.hpp"
#include "ldpsgd/ingest.hpp"
#include "ldpsgd/losses.hpp"
#include "ldpsgd/optimizer.hpp"
#include "ldpsgd/privacy.hpp"

namespace ldpsgd {

// Replications run either on one thread or across an OpenMP worker pool;
// both orders produce bitwise-identical results because every replication
// is a pure function of its own RNG substream.
enum class ExecMode { kSerial, kOpenMp };

/**
 * JSON-configurable sweep over (budget, alpha) for one synthetic design.
 * Every grid cell is fully determined by the config plus the seed, and
 * cells are RNG-isolated by their id, so adding or removing cells never
 * changes another cell's numbers.
 */
struct ExperimentConfig {
  std::string name = "experiment";
  SyntheticDesign design = SyntheticDesign::linear_huber(5, 100000);
  double huber_c = 1.345;
  MechKind mech = MechKind::kGdp;
  Vec mu_list;
  Vec eps_list;
  double delta = 0.0;
  Vec mu_uniform;
  Vec eps_uniform;
  double eta = 0.2;
  Vec alphas = {0.5};
  std::int64_t n = 100000;
  int replications = 50;
  int checkpoint_count = 30;
  std::int64_t holdout = 10000;
  std::uint64_t seed = 1;
  bool noise_enabled = true;

  void validate() const;
  std::string to_json_text() const;
  static ExperimentConfig from_json_text(const std::string& text);
  static ExperimentConfig load(const std::string& path);
};

// Built-in configs: "fig2-right", "fig2-left", "noise-off", "rate-sweep".
ExperimentConfig recipe(const std::string& name);
std::vector<std::string> recipe_names();

// Restores the full-scale run sizes (n = 300000, 200 replications).
void apply_paper_scale(ExperimentConfig& cfg);

// One grid cell, ready to run.
struct CellParams {
  std::string cell_id;
  SyntheticDesign design;
  std::shared_ptr<const BoundedLoss> loss;
  MechKind mech = MechKind::kGdp;
  std::shared_ptr<const BudgetSource> budgets;
  std::string budget_label;
  StepSchedule schedule;
  std::int64_t n = 0;
  int replications = 0;
  std::vector<std::int64_t> checkpoints;
  std::int64_t holdout = 10000;
  Vec theta0;
  Vec theta_star;
  bool noise_enabled = true;
  double alpha = 0.0;
};

struct CellResult {
  std::string cell_id;
  std::string budget_label;
  double alpha = 0.0;
  Trajectory trajectory;
  PrivacyLedger ledger;
  std::optional<RateFit> dist_fit;
  std::optional<RateFit> dist_bar_fit;
  std::optional<RateFit> gap_fit;
  std::optional<RateFit> gap_bar_fit;
  bool flagged_nonconverging = false;
  Vec final_dist;
  Vec final_dist_bar;
  std::vector<Vec> final_thetas;
  std::vector<Vec> final_theta_bars;

  // Fraction of replications whose averaged estimator ends closer to the
  // optimum than the last iterate.
  double dominance_fraction() const;
};

// Expands the config into its grid cells, in deterministic order.
std::vector<CellParams> expand_grid(const ExperimentConfig& cfg);

// Runs R replications of one cell and aggregates them.
CellResult run_cell(const CellParams& cell, std::uint64_t seed, ExecMode mode, int jobs);

struct ExperimentResult {
  std::vector<CellResult> cells;
  std::string out_dir;
};

// Full sweep: per-cell trajectory CSVs plus manifest.json and ledger.json
// under out_dir.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                                ExecMode mode, int jobs);

/**
 * Head-to-head mechanism comparison on the linear design: a Laplace
 * eps-grid against one GDP mu, across covariate dimensions, plus the
 * conversion table matching the budgets.
 */
struct MechCompareConfig {
  std::vector<int> d_list = {5, 10};
  Vec laplace_eps = {1.0, 2.0, 3.0};
  double gdp_mu = 1.0;
  double huber_c = 1.345;
  double eta = 0.2;
  double alpha = 0.5;
  std::int64_t n = 100000;
  int replications = 50;
  int checkpoint_count = 30;
  std::int64_t holdout = 10000;
  std::uint64_t seed = 2;

  void validate() const;
};

struct MechCompareResult {
  std::vector<CellResult> cells;
  // Rows (mu, eps, delta = the (eps, delta)-curve point of mu-GDP).
  std::vector<std::array<double, 3>> matching;
  std::string out_dir;

  const CellResult& cell(const std::string& cell_id) const;
};

MechCompareResult run_mechanism_comparison(const MechCompareConfig& cfg,
                                           const std::string& out_dir, ExecMode mode,
                                           int jobs);

/**
 * Mallows weighting versus gradient clipping on the logistic design with
 * all-ones truth: same mechanism, same budgets, same noise scale; only
 * the gradient-bounding strategy differs.
 *
 * When per-step noise rivals the saturated logistic gradient, both variants
 * drift high of the truth because recovery from overshoot is slower than from
 * undershoot. The default step and budget keep that shared drift inside the
 * Monte-Carlo resolution of 100 replications, so the clipping offset is the
 * only visible bias.
 */
struct ClipBiasConfig {
  int d = 3;
  double eta = 0.5;
  double alpha = 0.5;
  std::int64_t n = 100000;
  int replications = 100;
  double mu = 3.0;
  std::uint64_t seed = 3;

  void validate() const;
};

struct CoordinateStats {
  Vec mean;
  Vec se;
};

struct ClipBiasResult {
  CoordinateStats mallows_iter;
  CoordinateStats mallows_bar;
  CoordinateStats clipped_iter;
  CoordinateStats clipped_bar;
  PrivacyLedger mallows_ledger;
  PrivacyLedger clipped_ledger;
  double clip_norm = 0.0;
  std::string out_dir;
};

ClipBiasResult run_clipping_bias(const ClipBiasConfig& cfg, const std::string& out_dir,
                                 ExecMode mode, int jobs);

/**
 * Tabular pipeline run: encode, split, stream in permuted order, train
 * privately, and evaluate on the held-out split every eval_every steps.
 * An empty csv_path synthesizes an insurance-schema table first.
 */
struct IngestConfig {
  std::string csv_path;
  std::int64_t synthetic_rows = 100000;
  bool classification = true;
  double eta = 0.5;
  double alpha = 1.0 / 3.0;
  double mu = 2.0;
  double huber_c = 1.345;
  double train_fraction = 0.8;
  std::int64_t eval_every = 10000;
  std::int64_t n = 0;
  int replications = 50;
  std::uint64_t seed = 4;

  void validate() const;
};

struct IngestResult {
  std::vector<std::int64_t> eval_iters;
  Vec train_loss;
  Vec test_loss;
  Vec test_accuracy;
  Vec train_loss_bar;
  Vec test_loss_bar;
  Vec test_accuracy_bar;
  double majority_accuracy = 0.0;
  double final_accuracy_bar = 0.0;
  PrivacyLedger ledger;
  int num_classes = 0;
  std::string out_dir;
};

IngestResult run_ingest(const IngestConfig& cfg, const std::string& out_dir, ExecMode mode,
                        int jobs);

}  // namespace ldpsgd
