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

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "ldpsgd/errors.hpp"
#include "ldpsgd/losses.hpp"
#include "ldpsgd/privacy.hpp"
#include "ldpsgd/rng.hpp"
#include "ldpsgd/vec.hpp"

namespace ldpsgd {

// Step sizes eta0 * i^{-alpha}, i >= 1.
struct StepSchedule {
  double eta0 = 0.5;
  double alpha = 0.501;

  double at(std::int64_t i) const;
  void validate() const;
};

// Per-example privacy budget, possibly varying over the stream. The rng
// handed to at() is keyed to the step, so draws are reproducible and
// independent of evaluation order.
class BudgetSource {
 public:
  virtual ~BudgetSource() = default;
  virtual PrivacyBudget at(std::int64_t i, RngHandle& rng) const = 0;
};

class FixedBudget : public BudgetSource {
 public:
  explicit FixedBudget(PrivacyBudget budget) : budget_(budget) {}
  PrivacyBudget at(std::int64_t, RngHandle&) const override { return budget_; }

 private:
  PrivacyBudget budget_;
};

// mu_i drawn uniformly from [lo, hi].
class UniformMuBudget : public BudgetSource {
 public:
  UniformMuBudget(double lo, double hi);
  PrivacyBudget at(std::int64_t i, RngHandle& rng) const override;

 private:
  double lo_;
  double hi_;
};

// eps_i drawn uniformly from [lo, hi]; delta == 0 yields pure-eps budgets,
// otherwise (eps_i, delta) budgets.
class UniformEpsBudget : public BudgetSource {
 public:
  UniformEpsBudget(double lo, double hi, double delta = 0.0);
  PrivacyBudget at(std::int64_t i, RngHandle& rng) const override;

 private:
  double lo_;
  double hi_;
  double delta_;
};

// One-pass source of examples. next(i) is called exactly once per step
// with i = 1, 2, ...; implementations key any randomness to i so the
// stream is a pure function of its seed. Returning nullopt ends the
// stream early.
class ExampleStream {
 public:
  virtual ~ExampleStream() = default;
  virtual std::optional<LabeledExample> next(std::int64_t i) = 0;
};

struct CheckpointRow {
  std::int64_t n = 0;
  Vec theta;
  Vec theta_bar;
};

struct RunTrace {
  std::vector<CheckpointRow> checkpoints;
  Vec theta;
  Vec theta_bar;
  std::int64_t steps = 0;
  PrivacyLedger ledger;
};

// Raised when an iterate stops being finite mid-stream; carries whatever
// was recorded up to the failing step.
struct truncated_run_error : numeric_error {
  truncated_run_error(const std::string& msg, RunTrace partial_trace)
      : numeric_error(msg), partial(std::move(partial_trace)) {}

  RunTrace partial;
};

struct RunConfig {
  std::shared_ptr<const BoundedLoss> loss;
  std::shared_ptr<const BudgetSource> budgets;
  MechKind mech = MechKind::kGdp;
  StepSchedule schedule;
  std::int64_t n = 0;
  Vec theta0;
  bool noise_enabled = true;
  std::vector<std::int64_t> checkpoints;
};

// mean <- mean + (value - mean) / i, the i-th running-mean update.
void update_running_mean(Vec& mean, const Vec& value, std::int64_t i);

// One projected noisy step in place:
//   theta <- theta - eta * grad + eta * noise_multiplier * omega
// followed by the loss's domain projection. mech == nullptr (or
// noise_rng == nullptr) runs the noiseless update.
void sgd_update(Vec& theta, const BoundedLoss& loss, const LabeledExample& ex, double eta,
                const NoiseMechanism* mech, RngHandle* noise_rng);

/**
 * Runs the full private stream: one example per step, one noisy update
 * per example, running average alongside, budgets recorded in a ledger
 * under parallel composition.
 *
 * The rng is the per-run root; noise and budget draws use substreams
 * keyed by role and step, so a run is a pure function of (config, stream
 * seed, rng seed/stream) regardless of checkpoint placement.
 *
 * With noise_enabled == false the run draws no noise, consumes no budget
 * and leaves the ledger empty.
 */
RunTrace run_stream(const RunConfig& cfg, ExampleStream& stream, RngHandle rng);

// Roughly geometric checkpoint grid from lo to hi with points_per_decade
// points per factor of 10, deduplicated, endpoints included.
std::vector<std::int64_t> geometric_grid(std::int64_t lo, std::int64_t hi,
                                         int points_per_decade);

}  // namespace ldpsgd
