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

#include "ldpsgd/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace ldpsgd {

double StepSchedule::at(std::int64_t i) const {
  if (i < 1) {
    throw std::domain_error("StepSchedule::at: step index must be >= 1");
  }
  return eta0 * std::pow(static_cast<double>(i), -alpha);
}

void StepSchedule::validate() const {
  if (!(eta0 > 0.0)) {
    throw config_error("StepSchedule: eta0 must be > 0");
  }
  if (!(alpha >= 0.0) || !(alpha <= 1.0)) {
    throw config_error("StepSchedule: alpha must lie in [0, 1]");
  }
}

UniformMuBudget::UniformMuBudget(double lo, double hi) : lo_(lo), hi_(hi) {
  if (!(lo > 0.0) || !(hi >= lo)) {
    throw config_error("UniformMuBudget: need 0 < lo <= hi");
  }
}

PrivacyBudget UniformMuBudget::at(std::int64_t, RngHandle& rng) const {
  return PrivacyBudget::gdp(lo_ + (hi_ - lo_) * rng.next_unit());
}

UniformEpsBudget::UniformEpsBudget(double lo, double hi, double delta)
    : lo_(lo), hi_(hi), delta_(delta) {
  if (!(lo > 0.0) || !(hi >= lo)) {
    throw config_error("UniformEpsBudget: need 0 < lo <= hi");
  }
  if (delta < 0.0 || delta >= 1.0) {
    throw config_error("UniformEpsBudget: delta must lie in [0, 1)");
  }
}

PrivacyBudget UniformEpsBudget::at(std::int64_t, RngHandle& rng) const {
  const double eps = lo_ + (hi_ - lo_) * rng.next_unit();
  return delta_ == 0.0 ? PrivacyBudget::pure_eps(eps) : PrivacyBudget::approx(eps, delta_);
}

void update_running_mean(Vec& mean, const Vec& value, std::int64_t i) {
  if (i < 1) {
    throw std::domain_error("update_running_mean: index must be >= 1");
  }
  require_dim(mean.size(), value.size(), "update_running_mean");
  const double inv = 1.0 / static_cast<double>(i);
  for (std::size_t k = 0; k < mean.size(); ++k) {
    mean[k] += (value[k] - mean[k]) * inv;
  }
}

void sgd_update(Vec& theta, const BoundedLoss& loss, const LabeledExample& ex, double eta,
                const NoiseMechanism* mech, RngHandle* noise_rng) {
  thread_local Vec grad;
  loss.gradient(theta, ex, grad);
  axpy(-eta, grad, theta);
  if (mech != nullptr && noise_rng != nullptr) {
    const double c0 = loss.noise_multiplier();
    thread_local Vec omega;
    omega.resize(theta.size());
    mech->sample(*noise_rng, omega);
    axpy(eta * c0, omega, theta);
  }
  loss.project(theta);
}

RunTrace run_stream(const RunConfig& cfg, ExampleStream& stream, RngHandle rng) {
  if (!cfg.loss) {
    throw config_error("run_stream: loss must not be null");
  }
  if (cfg.n < 1) {
    throw config_error("run_stream: n must be >= 1");
  }
  cfg.schedule.validate();
  const std::size_t d = static_cast<std::size_t>(cfg.loss->param_dim());
  require_dim(d, cfg.theta0.size(), "run_stream theta0");
  if (cfg.noise_enabled) {
    if (!cfg.budgets) {
      throw config_error("run_stream: noise is enabled but no budget source was given");
    }
    if (!std::isfinite(cfg.loss->noise_multiplier())) {
      throw config_error(
          "run_stream: loss has no finite gradient bound; clip or weight it first");
    }
  }
  if (!std::is_sorted(cfg.checkpoints.begin(), cfg.checkpoints.end())) {
    throw config_error("run_stream: checkpoints must be sorted ascending");
  }
  if (!cfg.checkpoints.empty() &&
      (cfg.checkpoints.front() < 1 || cfg.checkpoints.back() > cfg.n)) {
    throw config_error("run_stream: checkpoints must lie in [1, n]");
  }

  RunTrace trace;
  trace.theta = cfg.theta0;
  trace.theta_bar = zeros(d);
  trace.checkpoints.reserve(cfg.checkpoints.size());

  RngHandle noise_root = rng.substream(streams::kNoise);
  RngHandle budget_root = rng.substream(streams::kBudget);

  std::size_t next_cp = 0;
  for (std::int64_t i = 1; i <= cfg.n; ++i) {
    std::optional<LabeledExample> maybe_ex = stream.next(i);
    if (!maybe_ex) {
      throw truncated_run_error(
          "run_stream: stream ended after " + std::to_string(i - 1) + " of " +
              std::to_string(cfg.n) + " examples",
          std::move(trace));
    }
    const LabeledExample& ex = *maybe_ex;
    const double eta = cfg.schedule.at(i);
    if (cfg.noise_enabled) {
      RngHandle budget_rng = budget_root.substream(static_cast<std::uint64_t>(i));
      const PrivacyBudget budget = cfg.budgets->at(i, budget_rng);
      const NoiseMechanism mech(cfg.mech, budget, static_cast<int>(d));
      RngHandle noise_rng = noise_root.substream(static_cast<std::uint64_t>(i));
      sgd_update(trace.theta, *cfg.loss, ex, eta, &mech, &noise_rng);
      trace.ledger.record(budget);
    } else {
      sgd_update(trace.theta, *cfg.loss, ex, eta, nullptr, nullptr);
    }
    update_running_mean(trace.theta_bar, trace.theta, i);
    trace.steps = i;
    while (next_cp < cfg.checkpoints.size() && cfg.checkpoints[next_cp] == i) {
      trace.checkpoints.push_back({i, trace.theta, trace.theta_bar});
      ++next_cp;
    }
    if (!all_finite(trace.theta)) {
      throw truncated_run_error(
          "run_stream: iterate became non-finite at step " + std::to_string(i),
          std::move(trace));
    }
  }
  return trace;
}

std::vector<std::int64_t> geometric_grid(std::int64_t lo, std::int64_t hi,
                                         int points_per_decade) {
  if (lo < 1 || hi < lo) {
    throw config_error("geometric_grid: need 1 <= lo <= hi");
  }
  if (points_per_decade < 1) {
    throw config_error("geometric_grid: points_per_decade must be >= 1");
  }
  std::vector<std::int64_t> grid;
  const double step = std::pow(10.0, 1.0 / points_per_decade);
  double v = static_cast<double>(lo);
  while (v < static_cast<double>(hi)) {
    const std::int64_t r = std::llround(v);
    if (grid.empty() || grid.back() != r) {
      grid.push_back(r);
    }
    v *= step;
  }
  if (grid.empty() || grid.back() != hi) {
    grid.push_back(hi);
  }
  return grid;
}

}  // namespace ldpsgd
