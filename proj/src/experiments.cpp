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

#include "ldpsgd/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "json.hpp"

#include "ldpsgd/errors.hpp"
#include "ldpsgd/textio.hpp"

namespace ldpsgd {

namespace {

using nlohmann::json;

std::string label_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return std::string(buf);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw data_error("cannot create output directory " + dir + ": " + ec.message());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) {
    throw data_error("cannot open " + path + " for writing");
  }
  out << text;
}

// Runs fn(0..count-1); replications are pure functions of their own RNG
// substreams, so serial and parallel execution agree bitwise.
template <typename Fn>
void for_each_replication(int count, ExecMode mode, int jobs, Fn&& fn) {
#ifdef _OPENMP
  if (mode == ExecMode::kOpenMp) {
    std::exception_ptr err;
    const int threads = jobs > 0 ? jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (int r = 0; r < count; ++r) {
      try {
        fn(r);
      } catch (...) {
#pragma omp critical
        {
          if (!err) err = std::current_exception();
        }
      }
    }
    if (err) std::rethrow_exception(err);
    return;
  }
#else
  (void)mode;
#endif
  (void)jobs;
  for (int r = 0; r < count; ++r) fn(r);
}

std::vector<std::int64_t> make_checkpoints(std::int64_t n, int count) {
  const std::int64_t lo = std::min<std::int64_t>(10, n);
  const double decades =
      std::max(1.0, std::log10(static_cast<double>(n) / static_cast<double>(lo)));
  const int ppd = std::max(1, static_cast<int>(std::ceil(count / decades)));
  return geometric_grid(lo, n, ppd);
}

std::shared_ptr<const BoundedLoss> loss_for_design(const SyntheticDesign& design,
                                                   double huber_c) {
  if (design.kind == DesignKind::kLinearHuber) {
    return std::make_shared<HuberScaleLoss>(design.d + 1, huber_c);
  }
  return std::make_shared<BinaryLogisticLoss>(design.d + 1, true);
}

std::optional<RateFit> try_tail_fit(const std::vector<std::int64_t>& checkpoints,
                                    const Vec& values) {
  try {
    return fit_tail_rate(checkpoints, values);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

json fit_to_json(const std::optional<RateFit>& fit) {
  if (!fit) return nullptr;
  return json{{"slope", fit->slope},
              {"intercept", fit->intercept},
              {"r2", fit->r2},
              {"n_lo", fit->n_lo},
              {"n_hi", fit->n_hi},
              {"points", fit->points}};
}

json cell_to_json(const CellResult& cell) {
  double final_dist_mean = 0.0, final_dist_bar_mean = 0.0;
  for (double v : cell.final_dist) final_dist_mean += v;
  for (double v : cell.final_dist_bar) final_dist_bar_mean += v;
  const double r = static_cast<double>(cell.final_dist.size());
  if (r > 0) {
    final_dist_mean /= r;
    final_dist_bar_mean /= r;
  }
  return json{{"cell_id", cell.cell_id},
              {"budget", cell.budget_label},
              {"alpha", cell.alpha},
              {"ledger", cell.ledger.to_json()},
              {"slope_dist", fit_to_json(cell.dist_fit)},
              {"slope_dist_bar", fit_to_json(cell.dist_bar_fit)},
              {"slope_gap", fit_to_json(cell.gap_fit)},
              {"slope_gap_bar", fit_to_json(cell.gap_bar_fit)},
              {"flagged_nonconverging", cell.flagged_nonconverging},
              {"final_dist_mean", final_dist_mean},
              {"final_dist_bar_mean", final_dist_bar_mean},
              {"dominance_fraction", cell.dominance_fraction()},
              {"warnings", cell.trajectory.warnings}};
}

std::string config_hash_hex(const std::string& text) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(text)));
  return std::string(buf);
}

}  // namespace

void ExperimentConfig::validate() const {
  design.validate();
  if (!(huber_c > 0.0)) {
    throw config_error("ExperimentConfig: huber_c must be > 0");
  }
  if (!(eta > 0.0)) {
    throw config_error("ExperimentConfig: eta must be > 0");
  }
  if (alphas.empty()) {
    throw config_error("ExperimentConfig: alphas must be nonempty");
  }
  for (double a : alphas) {
    StepSchedule{eta, a}.validate();
  }
  if (n < 1 || replications < 1 || checkpoint_count < 5 || holdout < 1) {
    throw config_error("ExperimentConfig: n, replications, holdout must be >= 1 and "
                       "checkpoint_count >= 5");
  }
  int axes = 0;
  axes += mu_list.empty() ? 0 : 1;
  axes += eps_list.empty() ? 0 : 1;
  axes += mu_uniform.empty() ? 0 : 1;
  axes += eps_uniform.empty() ? 0 : 1;
  if (noise_enabled) {
    if (axes != 1) {
      throw config_error("ExperimentConfig: exactly one budget axis must be set");
    }
    const bool mu_axis = !mu_list.empty() || !mu_uniform.empty();
    if (mu_axis && mech != MechKind::kGdp) {
      throw config_error("ExperimentConfig: mu budgets pair with the gdp mechanism only");
    }
    if (!mu_axis && mech == MechKind::kGdp) {
      throw config_error("ExperimentConfig: the gdp mechanism needs mu budgets");
    }
    if (!mu_axis && delta == 0.0 && mech != MechKind::kLaplace) {
      throw config_error("ExperimentConfig: eps budgets without delta pair with laplace");
    }
    if (!mu_axis && delta > 0.0 && mech != MechKind::kGaussian) {
      throw config_error("ExperimentConfig: eps/delta budgets pair with gaussian");
    }
    if (!mu_uniform.empty() &&
        (mu_uniform.size() != 2 || !(mu_uniform[0] > 0.0) || mu_uniform[0] > mu_uniform[1])) {
      throw config_error("ExperimentConfig: mu_uniform needs [lo, hi] with 0 < lo <= hi");
    }
    if (!eps_uniform.empty() &&
        (eps_uniform.size() != 2 || !(eps_uniform[0] > 0.0) ||
         eps_uniform[0] > eps_uniform[1])) {
      throw config_error("ExperimentConfig: eps_uniform needs [lo, hi] with 0 < lo <= hi");
    }
  } else if (axes != 0) {
    throw config_error("ExperimentConfig: budget axes are set but noise is disabled");
  }
}

std::string ExperimentConfig::to_json_text() const {
  json j;
  j["name"] = name;
  j["design"] = {{"kind", design.kind == DesignKind::kLinearHuber ? "linear_huber"
                                                                  : "binary_logistic"},
                 {"d", design.d},
                 {"beta", design.beta_true},
                 {"sigma", design.sigma},
                 {"sigma_z", design.sigma_z}};
  j["huber_c"] = huber_c;
  j["mechanism"] = mech_kind_to_string(mech);
  json budgets = json::object();
  if (!mu_list.empty()) budgets["mu"] = mu_list;
  if (!eps_list.empty()) budgets["eps"] = eps_list;
  if (!mu_uniform.empty()) budgets["mu_uniform"] = mu_uniform;
  if (!eps_uniform.empty()) budgets["eps_uniform"] = eps_uniform;
  if (delta > 0.0) budgets["delta"] = delta;
  j["budgets"] = budgets;
  j["schedule"] = {{"eta", eta}, {"alphas", alphas}};
  j["n"] = n;
  j["replications"] = replications;
  j["checkpoints"] = checkpoint_count;
  j["holdout"] = holdout;
  j["seed"] = seed;
  j["noise_enabled"] = noise_enabled;
  return j.dump(2) + "\n";
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw config_error(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  cfg.name = j.value("name", cfg.name);
  if (j.contains("design")) {
    const json& d = j["design"];
    const std::string kind = d.value("kind", "linear_huber");
    if (kind == "linear_huber") {
      cfg.design.kind = DesignKind::kLinearHuber;
    } else if (kind == "binary_logistic") {
      cfg.design.kind = DesignKind::kBinaryLogistic;
    } else {
      throw config_error("unknown design kind '" + kind + "'");
    }
    cfg.design.d = d.value("d", cfg.design.d);
    cfg.design.sigma = d.value("sigma", cfg.design.sigma);
    cfg.design.sigma_z = d.value("sigma_z", cfg.design.sigma_z);
    if (d.contains("beta")) {
      cfg.design.beta_true = d["beta"].get<Vec>();
    } else {
      cfg.design.beta_true = ones(static_cast<std::size_t>(cfg.design.d) + 1);
    }
  }
  cfg.huber_c = j.value("huber_c", cfg.huber_c);
  if (j.contains("mechanism")) {
    cfg.mech = mech_kind_from_string(j["mechanism"].get<std::string>());
  }
  if (j.contains("budgets")) {
    const json& b = j["budgets"];
    if (b.contains("mu")) cfg.mu_list = b["mu"].get<Vec>();
    if (b.contains("eps")) cfg.eps_list = b["eps"].get<Vec>();
    if (b.contains("mu_uniform")) cfg.mu_uniform = b["mu_uniform"].get<Vec>();
    if (b.contains("eps_uniform")) cfg.eps_uniform = b["eps_uniform"].get<Vec>();
    cfg.delta = b.value("delta", 0.0);
  }
  if (j.contains("schedule")) {
    const json& s = j["schedule"];
    cfg.eta = s.value("eta", cfg.eta);
    if (s.contains("alphas")) cfg.alphas = s["alphas"].get<Vec>();
  }
  cfg.n = j.value("n", cfg.n);
  cfg.design.n = cfg.n;
  cfg.replications = j.value("replications", cfg.replications);
  cfg.checkpoint_count = j.value("checkpoints", cfg.checkpoint_count);
  cfg.holdout = j.value("holdout", cfg.holdout);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.noise_enabled = j.value("noise_enabled", cfg.noise_enabled);
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw data_error("cannot open config " + path);
  }
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json_text(text);
}

ExperimentConfig recipe(const std::string& name) {
  ExperimentConfig cfg;
  cfg.name = name;
  cfg.design = SyntheticDesign::linear_huber(5, cfg.n);
  if (name == "fig2-right") {
    cfg.mech = MechKind::kGdp;
    cfg.mu_list = {2.0};
    cfg.alphas = {0.5};
  } else if (name == "fig2-left") {
    cfg.mech = MechKind::kGdp;
    cfg.mu_uniform = {1.0, 2.0};
    cfg.alphas = {0.5};
  } else if (name == "noise-off") {
    cfg.noise_enabled = false;
    cfg.alphas = {0.5};
  } else if (name == "rate-sweep") {
    cfg.mech = MechKind::kGdp;
    cfg.mu_list = {2.0};
    cfg.alphas = {1.0 / 3.0, 0.5, 1.0};
  } else {
    throw config_error("unknown recipe '" + name + "'");
  }
  cfg.validate();
  return cfg;
}

std::vector<std::string> recipe_names() {
  return {"fig2-right", "fig2-left", "noise-off", "rate-sweep"};
}

void apply_paper_scale(ExperimentConfig& cfg) {
  cfg.n = 300000;
  cfg.design.n = cfg.n;
  cfg.replications = 200;
}

double CellResult::dominance_fraction() const {
  if (final_dist.empty()) return 0.0;
  std::size_t wins = 0;
  for (std::size_t r = 0; r < final_dist.size(); ++r) {
    if (final_dist_bar[r] < final_dist[r]) ++wins;
  }
  return static_cast<double>(wins) / static_cast<double>(final_dist.size());
}

std::vector<CellParams> expand_grid(const ExperimentConfig& cfg) {
  cfg.validate();
  struct BudgetAxis {
    std::string label;
    std::shared_ptr<const BudgetSource> source;
  };
  std::vector<BudgetAxis> axes;
  if (!cfg.noise_enabled) {
    axes.push_back({"nonoise", nullptr});
  } else if (!cfg.mu_list.empty()) {
    for (double mu : cfg.mu_list) {
      axes.push_back({"mu" + label_g(mu),
                      std::make_shared<FixedBudget>(PrivacyBudget::gdp(mu))});
    }
  } else if (!cfg.mu_uniform.empty()) {
    axes.push_back({"mu_unif" + label_g(cfg.mu_uniform[0]) + "_" + label_g(cfg.mu_uniform[1]),
                    std::make_shared<UniformMuBudget>(cfg.mu_uniform[0], cfg.mu_uniform[1])});
  } else if (!cfg.eps_list.empty()) {
    for (double eps : cfg.eps_list) {
      std::string label = "eps" + label_g(eps);
      PrivacyBudget b = cfg.delta > 0.0 ? PrivacyBudget::approx(eps, cfg.delta)
                                        : PrivacyBudget::pure_eps(eps);
      if (cfg.delta > 0.0) label += "_delta" + label_g(cfg.delta);
      axes.push_back({std::move(label), std::make_shared<FixedBudget>(b)});
    }
  } else {
    std::string label =
        "eps_unif" + label_g(cfg.eps_uniform[0]) + "_" + label_g(cfg.eps_uniform[1]);
    if (cfg.delta > 0.0) label += "_delta" + label_g(cfg.delta);
    axes.push_back({std::move(label),
                    std::make_shared<UniformEpsBudget>(cfg.eps_uniform[0], cfg.eps_uniform[1],
                                                       cfg.delta)});
  }

  SyntheticDesign design = cfg.design;
  design.n = cfg.n;
  std::shared_ptr<const BoundedLoss> loss = loss_for_design(design, cfg.huber_c);
  const std::vector<std::int64_t> checkpoints = make_checkpoints(cfg.n, cfg.checkpoint_count);

  std::vector<CellParams> cells;
  for (const BudgetAxis& axis : axes) {
    for (double alpha : cfg.alphas) {
      CellParams cell;
      cell.cell_id = "d" + std::to_string(design.d) + "_" + axis.label + "_alpha" +
                     label_g(alpha);
      cell.design = design;
      cell.loss = loss;
      cell.mech = cfg.mech;
      cell.budgets = axis.source;
      cell.budget_label = axis.label;
      cell.schedule = {cfg.eta, alpha};
      cell.n = cfg.n;
      cell.replications = cfg.replications;
      cell.checkpoints = checkpoints;
      cell.holdout = cfg.holdout;
      cell.theta0 = zeros(static_cast<std::size_t>(loss->param_dim()));
      cell.theta_star = design_optimum(design);
      cell.noise_enabled = cfg.noise_enabled;
      cell.alpha = alpha;
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

CellResult run_cell(const CellParams& cell, std::uint64_t seed, ExecMode mode, int jobs) {
  const RngHandle root(seed, 0);
  const RngHandle cell_rng = root.substream(fnv1a(cell.cell_id));
  const std::vector<LabeledExample> holdout =
      sample_examples(cell.design, cell_rng.substream(streams::kHoldout), cell.holdout);

  const int r_count = cell.replications;
  std::vector<RunTrace> traces(static_cast<std::size_t>(r_count));
  for_each_replication(r_count, mode, jobs, [&](int r) {
    const RngHandle rep_rng = cell_rng.substream(static_cast<std::uint64_t>(r) + 1);
    RunConfig run_cfg;
    run_cfg.loss = cell.loss;
    run_cfg.budgets = cell.budgets;
    run_cfg.mech = cell.mech;
    run_cfg.schedule = cell.schedule;
    run_cfg.n = cell.n;
    run_cfg.theta0 = cell.theta0;
    run_cfg.noise_enabled = cell.noise_enabled;
    run_cfg.checkpoints = cell.checkpoints;
    SyntheticStream stream(cell.design, rep_rng.substream(streams::kData));
    traces[static_cast<std::size_t>(r)] = run_stream(run_cfg, stream, rep_rng);
  });

  CellResult result;
  result.cell_id = cell.cell_id;
  result.budget_label = cell.budget_label;
  result.alpha = cell.alpha;
  result.trajectory = aggregate_traces(traces, cell.theta_star, *cell.loss, holdout);
  for (const RunTrace& trace : traces) {
    result.ledger = merge_max(result.ledger, trace.ledger);
    const CheckpointRow& last = trace.checkpoints.back();
    result.final_dist.push_back(param_distance(last.theta, cell.theta_star));
    result.final_dist_bar.push_back(param_distance(last.theta_bar, cell.theta_star));
    result.final_thetas.push_back(last.theta);
    result.final_theta_bars.push_back(last.theta_bar);
  }
  result.dist_fit = try_tail_fit(result.trajectory.checkpoints, result.trajectory.theta_dist);
  result.dist_bar_fit =
      try_tail_fit(result.trajectory.checkpoints, result.trajectory.theta_bar_dist);
  result.gap_fit = try_tail_fit(result.trajectory.checkpoints, result.trajectory.loss_gap);
  result.gap_bar_fit =
      try_tail_fit(result.trajectory.checkpoints, result.trajectory.loss_gap_bar);
  result.flagged_nonconverging = result.dist_fit && result.dist_fit->slope > -0.1;
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                                ExecMode mode, int jobs) {
  const std::vector<CellParams> cells = expand_grid(cfg);
  ensure_dir(out_dir);

  ExperimentResult result;
  result.out_dir = out_dir;
  json manifest_cells = json::array();
  json ledgers = json::object();
  for (const CellParams& cell : cells) {
    CellResult cr = run_cell(cell, cfg.seed, mode, jobs);
    write_trajectory_csv(out_dir + "/" + cr.cell_id + ".csv", cr.trajectory);
    manifest_cells.push_back(cell_to_json(cr));
    ledgers[cr.cell_id] = cr.ledger.to_json();
    result.cells.push_back(std::move(cr));
  }

  const std::string config_text = cfg.to_json_text();
  json manifest;
  manifest["name"] = cfg.name;
  manifest["config"] = json::parse(config_text);
  manifest["config_hash"] = config_hash_hex(config_text);
  manifest["seed"] = cfg.seed;
  manifest["cells"] = manifest_cells;
  write_text(out_dir + "/manifest.json", manifest.dump(2) + "\n");
  write_text(out_dir + "/ledger.json", ledgers.dump(2) + "\n");
  return result;
}

void MechCompareConfig::validate() const {
  if (d_list.empty() || laplace_eps.empty()) {
    throw config_error("MechCompareConfig: d_list and laplace_eps must be nonempty");
  }
  for (int d : d_list) {
    if (d < 1) throw config_error("MechCompareConfig: dimensions must be >= 1");
  }
  for (double eps : laplace_eps) {
    if (!(eps > 0.0)) throw config_error("MechCompareConfig: eps values must be > 0");
  }
  if (!(gdp_mu > 0.0) || !(eta > 0.0) || !(huber_c > 0.0)) {
    throw config_error("MechCompareConfig: gdp_mu, eta, huber_c must be > 0");
  }
  StepSchedule{eta, alpha}.validate();
  if (n < 1 || replications < 1 || checkpoint_count < 5 || holdout < 1) {
    throw config_error("MechCompareConfig: n, replications, holdout must be >= 1 and "
                       "checkpoint_count >= 5");
  }
}

const CellResult& MechCompareResult::cell(const std::string& cell_id) const {
  for (const CellResult& cr : cells) {
    if (cr.cell_id == cell_id) return cr;
  }
  throw config_error("no cell named '" + cell_id + "'");
}

MechCompareResult run_mechanism_comparison(const MechCompareConfig& cfg,
                                           const std::string& out_dir, ExecMode mode,
                                           int jobs) {
  cfg.validate();
  ensure_dir(out_dir);

  MechCompareResult result;
  result.out_dir = out_dir;
  for (double eps : cfg.laplace_eps) {
    result.matching.push_back({cfg.gdp_mu, eps, gdp_to_dp(cfg.gdp_mu, eps)});
  }

  json manifest_cells = json::array();
  json ledgers = json::object();
  for (int d : cfg.d_list) {
    SyntheticDesign design = SyntheticDesign::linear_huber(d, cfg.n);
    std::vector<std::pair<std::string, CellParams>> variants;
    {
      CellParams cell;
      cell.cell_id = "d" + std::to_string(d) + "_mu" + label_g(cfg.gdp_mu);
      cell.mech = MechKind::kGdp;
      cell.budgets = std::make_shared<FixedBudget>(PrivacyBudget::gdp(cfg.gdp_mu));
      cell.budget_label = "mu" + label_g(cfg.gdp_mu);
      variants.emplace_back(cell.cell_id, std::move(cell));
    }
    for (double eps : cfg.laplace_eps) {
      CellParams cell;
      cell.cell_id = "d" + std::to_string(d) + "_eps" + label_g(eps);
      cell.mech = MechKind::kLaplace;
      cell.budgets = std::make_shared<FixedBudget>(PrivacyBudget::pure_eps(eps));
      cell.budget_label = "eps" + label_g(eps);
      variants.emplace_back(cell.cell_id, std::move(cell));
    }
    for (auto& [id, cell] : variants) {
      cell.design = design;
      cell.loss = loss_for_design(design, cfg.huber_c);
      cell.schedule = {cfg.eta, cfg.alpha};
      cell.n = cfg.n;
      cell.replications = cfg.replications;
      cell.checkpoints = make_checkpoints(cfg.n, cfg.checkpoint_count);
      cell.holdout = cfg.holdout;
      cell.theta0 = zeros(static_cast<std::size_t>(cell.loss->param_dim()));
      cell.theta_star = design_optimum(design);
      cell.alpha = cfg.alpha;
      CellResult cr = run_cell(cell, cfg.seed, mode, jobs);
      write_trajectory_csv(out_dir + "/" + cr.cell_id + ".csv", cr.trajectory);
      manifest_cells.push_back(cell_to_json(cr));
      ledgers[cr.cell_id] = cr.ledger.to_json();
      result.cells.push_back(std::move(cr));
    }
  }

  std::string table = "mu,eps,delta\n";
  for (const auto& row : result.matching) {
    table += g17(row[0]) + "," + g17(row[1]) + "," + g17(row[2]) + "\n";
  }
  write_text(out_dir + "/matching.csv", table);

  json manifest;
  manifest["name"] = "mechanism-comparison";
  manifest["seed"] = cfg.seed;
  manifest["gdp_mu"] = cfg.gdp_mu;
  manifest["laplace_eps"] = cfg.laplace_eps;
  manifest["d_list"] = cfg.d_list;
  manifest["n"] = cfg.n;
  manifest["replications"] = cfg.replications;
  manifest["cells"] = manifest_cells;
  write_text(out_dir + "/manifest.json", manifest.dump(2) + "\n");
  write_text(out_dir + "/ledger.json", ledgers.dump(2) + "\n");
  return result;
}

void ClipBiasConfig::validate() const {
  if (d < 1) {
    throw config_error("ClipBiasConfig: d must be >= 1");
  }
  StepSchedule{eta, alpha}.validate();
  if (!(mu > 0.0)) {
    throw config_error("ClipBiasConfig: mu must be > 0");
  }
  if (n < 1 || replications < 2) {
    throw config_error("ClipBiasConfig: need n >= 1 and at least 2 replications");
  }
}

namespace {

CoordinateStats coordinate_stats(const std::vector<Vec>& estimates) {
  CoordinateStats stats;
  const std::size_t r = estimates.size();
  const std::size_t dim = estimates.front().size();
  stats.mean = zeros(dim);
  stats.se = zeros(dim);
  for (const Vec& est : estimates) {
    for (std::size_t k = 0; k < dim; ++k) stats.mean[k] += est[k];
  }
  for (std::size_t k = 0; k < dim; ++k) stats.mean[k] /= static_cast<double>(r);
  for (const Vec& est : estimates) {
    for (std::size_t k = 0; k < dim; ++k) {
      const double c = est[k] - stats.mean[k];
      stats.se[k] += c * c;
    }
  }
  for (std::size_t k = 0; k < dim; ++k) {
    stats.se[k] =
        std::sqrt(stats.se[k] / (static_cast<double>(r - 1) * static_cast<double>(r)));
  }
  return stats;
}

void append_estimate_rows(std::string& csv, const std::string& variant,
                          const std::string& estimator, const std::vector<Vec>& estimates) {
  for (std::size_t r = 0; r < estimates.size(); ++r) {
    for (std::size_t k = 0; k < estimates[r].size(); ++k) {
      csv += variant + "," + estimator + "," + std::to_string(r) + "," + std::to_string(k) +
             "," + g17(estimates[r][k]) + "\n";
    }
  }
}

void append_bias_rows(std::string& csv, const std::string& variant,
                      const std::string& estimator, const CoordinateStats& stats) {
  for (std::size_t k = 0; k < stats.mean.size(); ++k) {
    const double bias = stats.mean[k] - 1.0;
    const double z = stats.se[k] > 0.0 ? bias / stats.se[k] : 0.0;
    csv += variant + "," + estimator + "," + std::to_string(k) + "," + g17(stats.mean[k]) +
           "," + g17(stats.se[k]) + "," + g17(bias) + "," + g17(z) + "\n";
  }
}

}  // namespace

ClipBiasResult run_clipping_bias(const ClipBiasConfig& cfg, const std::string& out_dir,
                                 ExecMode mode, int jobs) {
  cfg.validate();
  ensure_dir(out_dir);

  const SyntheticDesign design = SyntheticDesign::binary_logistic(cfg.d, cfg.n);
  const auto weighted = std::make_shared<BinaryLogisticLoss>(cfg.d + 1, true);
  const double clip_norm = weighted->noise_multiplier();
  const auto clipped = std::make_shared<ClippedLoss>(
      std::make_shared<BinaryLogisticLoss>(cfg.d + 1, false), clip_norm);

  ClipBiasResult result;
  result.clip_norm = clip_norm;
  result.out_dir = out_dir;

  CellParams base;
  base.design = design;
  base.mech = MechKind::kGdp;
  base.budgets = std::make_shared<FixedBudget>(PrivacyBudget::gdp(cfg.mu));
  base.budget_label = "mu" + label_g(cfg.mu);
  base.schedule = {cfg.eta, cfg.alpha};
  base.n = cfg.n;
  base.replications = cfg.replications;
  base.checkpoints = {cfg.n};
  base.holdout = 1000;
  base.theta0 = zeros(static_cast<std::size_t>(cfg.d) + 1);
  base.theta_star = design.beta_true;
  base.alpha = cfg.alpha;

  CellParams mallows_cell = base;
  mallows_cell.cell_id = "mallows";
  mallows_cell.loss = weighted;
  CellParams clipped_cell = base;
  clipped_cell.cell_id = "clipped";
  clipped_cell.loss = clipped;

  const CellResult mallows = run_cell(mallows_cell, cfg.seed, mode, jobs);
  const CellResult clip = run_cell(clipped_cell, cfg.seed, mode, jobs);

  result.mallows_iter = coordinate_stats(mallows.final_thetas);
  result.mallows_bar = coordinate_stats(mallows.final_theta_bars);
  result.clipped_iter = coordinate_stats(clip.final_thetas);
  result.clipped_bar = coordinate_stats(clip.final_theta_bars);
  result.mallows_ledger = mallows.ledger;
  result.clipped_ledger = clip.ledger;

  std::string estimates = "variant,estimator,replication,coordinate,value\n";
  append_estimate_rows(estimates, "mallows", "iterate", mallows.final_thetas);
  append_estimate_rows(estimates, "mallows", "average", mallows.final_theta_bars);
  append_estimate_rows(estimates, "clipped", "iterate", clip.final_thetas);
  append_estimate_rows(estimates, "clipped", "average", clip.final_theta_bars);
  write_text(out_dir + "/estimates.csv", estimates);

  std::string bias = "variant,estimator,coordinate,mean,se,bias,z\n";
  append_bias_rows(bias, "mallows", "iterate", result.mallows_iter);
  append_bias_rows(bias, "mallows", "average", result.mallows_bar);
  append_bias_rows(bias, "clipped", "iterate", result.clipped_iter);
  append_bias_rows(bias, "clipped", "average", result.clipped_bar);
  write_text(out_dir + "/bias.csv", bias);

  json manifest;
  manifest["name"] = "clipping-bias";
  manifest["seed"] = cfg.seed;
  manifest["d"] = cfg.d;
  manifest["n"] = cfg.n;
  manifest["replications"] = cfg.replications;
  manifest["mu"] = cfg.mu;
  manifest["eta"] = cfg.eta;
  manifest["alpha"] = cfg.alpha;
  manifest["clip_norm"] = clip_norm;
  manifest["ledgers_identical"] = result.mallows_ledger == result.clipped_ledger;
  manifest["mallows_ledger"] = result.mallows_ledger.to_json();
  manifest["clipped_ledger"] = result.clipped_ledger.to_json();
  write_text(out_dir + "/manifest.json", manifest.dump(2) + "\n");
  return result;
}

void IngestConfig::validate() const {
  if (csv_path.empty() && synthetic_rows < 10) {
    throw config_error("IngestConfig: synthetic_rows must be >= 10");
  }
  StepSchedule{eta, alpha}.validate();
  if (!(mu > 0.0) || !(huber_c > 0.0)) {
    throw config_error("IngestConfig: mu and huber_c must be > 0");
  }
  if (!(train_fraction > 0.0) || !(train_fraction < 1.0)) {
    throw config_error("IngestConfig: train_fraction must lie in (0, 1)");
  }
  if (eval_every < 1 || replications < 1 || n < 0) {
    throw config_error("IngestConfig: eval_every, replications must be >= 1 and n >= 0");
  }
}

namespace {

// Mean squared error in raw response units; predictions come from the
// beta block of a scale-augmented parameter fitted on standardized y.
double regression_mse_raw(const std::vector<LabeledExample>& sample, const Vec& theta,
                          const Standardizer& scaler) {
  double s = 0.0;
  for (const LabeledExample& ex : sample) {
    double pred = 0.0;
    for (std::size_t j = 0; j < ex.x.size(); ++j) pred += ex.x[j] * theta[j];
    const double err = scaler.invert(ex.y) - scaler.invert(pred);
    s += err * err;
  }
  return s / static_cast<double>(sample.size());
}

// Every stride-th element, bounding evaluation cost on large splits.
std::vector<LabeledExample> strided_subset(const std::vector<LabeledExample>& sample,
                                           std::size_t cap) {
  if (sample.size() <= cap) return sample;
  const std::size_t stride = (sample.size() + cap - 1) / cap;
  std::vector<LabeledExample> out;
  out.reserve(sample.size() / stride + 1);
  for (std::size_t i = 0; i < sample.size(); i += stride) {
    out.push_back(sample[i]);
  }
  return out;
}

}  // namespace

IngestResult run_ingest(const IngestConfig& cfg, const std::string& out_dir, ExecMode mode,
                        int jobs) {
  cfg.validate();
  ensure_dir(out_dir);

  std::string csv_path = cfg.csv_path;
  if (csv_path.empty()) {
    csv_path = out_dir + "/synthetic_insurance.csv";
    write_synthetic_insurance_csv(csv_path, cfg.synthetic_rows, cfg.seed);
  }
  const TabularDataset ds =
      load_and_encode(csv_path, insurance_column_specs(), {cfg.train_fraction, cfg.seed});
  const EncodedTask task =
      cfg.classification ? make_classification_task(ds) : make_regression_task(ds);

  std::shared_ptr<const BoundedLoss> loss;
  std::shared_ptr<const MultinomialLogisticLoss> classifier;
  if (cfg.classification) {
    classifier = std::make_shared<MultinomialLogisticLoss>(task.num_classes, task.x_dim);
    loss = classifier;
  } else {
    loss = std::make_shared<HuberScaleLoss>(task.x_dim, cfg.huber_c);
  }

  const std::int64_t n = cfg.n > 0 ? cfg.n : static_cast<std::int64_t>(task.train.size());
  std::vector<std::int64_t> evals;
  for (std::int64_t it = cfg.eval_every; it < n; it += cfg.eval_every) {
    evals.push_back(it);
  }
  evals.push_back(n);

  const std::vector<LabeledExample> train_eval = strided_subset(task.train, 20000);
  const bool classify = cfg.classification;
  const std::size_t dim = static_cast<std::size_t>(loss->param_dim());
  const std::size_t cps = evals.size();
  const int r_count = cfg.replications;

  struct RepMetrics {
    Vec train_loss, test_loss, test_acc;
    Vec train_loss_bar, test_loss_bar, test_acc_bar;
    PrivacyLedger ledger;
  };
  std::vector<RepMetrics> reps(static_cast<std::size_t>(r_count));

  const RngHandle root(cfg.seed, 0);
  const RngHandle cell_rng = root.substream(fnv1a("ingest"));
  for_each_replication(r_count, mode, jobs, [&](int r) {
    const RngHandle rep_rng = cell_rng.substream(static_cast<std::uint64_t>(r) + 1);
    RngHandle init_rng = rep_rng.substream(streams::kInit);
    Vec theta0(dim);
    for (double& v : theta0) v = init_rng.next_unit();

    RunConfig run_cfg;
    run_cfg.loss = loss;
    run_cfg.budgets = std::make_shared<FixedBudget>(PrivacyBudget::gdp(cfg.mu));
    run_cfg.mech = MechKind::kGdp;
    run_cfg.schedule = {cfg.eta, cfg.alpha};
    run_cfg.n = n;
    run_cfg.theta0 = theta0;
    run_cfg.checkpoints = evals;
    PermutedEpochStream stream(task.train, rep_rng.substream(streams::kData), true);
    const RunTrace trace = run_stream(run_cfg, stream, rep_rng);

    RepMetrics& m = reps[static_cast<std::size_t>(r)];
    m.ledger = trace.ledger;
    for (const CheckpointRow& row : trace.checkpoints) {
      if (classify) {
        m.train_loss.push_back(mean_loss(*loss, row.theta, train_eval));
        m.test_loss.push_back(mean_loss(*loss, row.theta, task.test));
        m.test_acc.push_back(classification_accuracy(*classifier, row.theta, task.test));
        m.train_loss_bar.push_back(mean_loss(*loss, row.theta_bar, train_eval));
        m.test_loss_bar.push_back(mean_loss(*loss, row.theta_bar, task.test));
        m.test_acc_bar.push_back(
            classification_accuracy(*classifier, row.theta_bar, task.test));
      } else {
        m.train_loss.push_back(
            regression_mse_raw(train_eval, row.theta, task.response_scaler));
        m.test_loss.push_back(
            regression_mse_raw(task.test, row.theta, task.response_scaler));
        m.train_loss_bar.push_back(
            regression_mse_raw(train_eval, row.theta_bar, task.response_scaler));
        m.test_loss_bar.push_back(
            regression_mse_raw(task.test, row.theta_bar, task.response_scaler));
      }
    }
  });

  const std::string acc_cols = classify ? ",test_accuracy" : "";
  const std::string header = "iteration,train_loss,test_loss" + acc_cols +
                             ",train_loss_bar,test_loss_bar" +
                             (classify ? ",test_accuracy_bar" : "") + "\n";
  for (int r = 0; r < r_count; ++r) {
    const RepMetrics& m = reps[static_cast<std::size_t>(r)];
    char name[32];
    std::snprintf(name, sizeof(name), "rep_%03d.csv", r);
    std::string csv = header;
    for (std::size_t k = 0; k < cps; ++k) {
      csv += std::to_string(evals[k]) + "," + g17(m.train_loss[k]) + "," +
             g17(m.test_loss[k]);
      if (classify) csv += "," + g17(m.test_acc[k]);
      csv += "," + g17(m.train_loss_bar[k]) + "," + g17(m.test_loss_bar[k]);
      if (classify) csv += "," + g17(m.test_acc_bar[k]);
      csv += "\n";
    }
    write_text(out_dir + "/" + name, csv);
  }

  IngestResult result;
  result.out_dir = out_dir;
  result.eval_iters = evals;
  result.num_classes = task.num_classes;
  auto mean_over_reps = [&](Vec RepMetrics::* field) {
    Vec mean = zeros(cps);
    for (const RepMetrics& m : reps) {
      for (std::size_t k = 0; k < cps; ++k) mean[k] += (m.*field)[k];
    }
    for (double& v : mean) v /= static_cast<double>(r_count);
    return mean;
  };
  result.train_loss = mean_over_reps(&RepMetrics::train_loss);
  result.test_loss = mean_over_reps(&RepMetrics::test_loss);
  result.train_loss_bar = mean_over_reps(&RepMetrics::train_loss_bar);
  result.test_loss_bar = mean_over_reps(&RepMetrics::test_loss_bar);
  if (classify) {
    result.test_accuracy = mean_over_reps(&RepMetrics::test_acc);
    result.test_accuracy_bar = mean_over_reps(&RepMetrics::test_acc_bar);
    result.final_accuracy_bar = result.test_accuracy_bar.back();
    result.majority_accuracy = majority_class_accuracy(task.train, task.test);
  }
  for (const RepMetrics& m : reps) {
    result.ledger = merge_max(result.ledger, m.ledger);
  }

  std::string agg = header;
  for (std::size_t k = 0; k < cps; ++k) {
    agg += std::to_string(evals[k]) + "," + g17(result.train_loss[k]) + "," +
           g17(result.test_loss[k]);
    if (classify) agg += "," + g17(result.test_accuracy[k]);
    agg += "," + g17(result.train_loss_bar[k]) + "," + g17(result.test_loss_bar[k]);
    if (classify) agg += "," + g17(result.test_accuracy_bar[k]);
    agg += "\n";
  }
  write_text(out_dir + "/aggregate.csv", agg);

  json manifest;
  manifest["name"] = "ingest-run";
  manifest["csv_path"] = csv_path;
  manifest["classification"] = classify;
  manifest["seed"] = cfg.seed;
  manifest["n"] = n;
  manifest["replications"] = r_count;
  manifest["eval_every"] = cfg.eval_every;
  manifest["mu"] = cfg.mu;
  manifest["eta"] = cfg.eta;
  manifest["alpha"] = cfg.alpha;
  manifest["train_fraction"] = cfg.train_fraction;
  manifest["train_rows"] = task.train.size();
  manifest["test_rows"] = task.test.size();
  manifest["ledger"] = result.ledger.to_json();
  if (classify) {
    manifest["majority_accuracy"] = result.majority_accuracy;
    manifest["final_accuracy_bar"] = result.final_accuracy_bar;
  }
  write_text(out_dir + "/manifest.json", manifest.dump(2) + "\n");
  return result;
}

}  // namespace ldpsgd
