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
#include <string>

#include "ldpsgd/rng.hpp"
#include "ldpsgd/vec.hpp"

#include "json.hpp"

namespace ldpsgd {

enum class BudgetKind { kPureEps, kApproxEpsDelta, kGdpMu };

/**
 * Per-individual privacy parameters.
 *
 * Three families: pure epsilon, approximate (epsilon, delta), and the
 * Gaussian-DP mu parameterization. Construction validates ranges; a
 * default-constructed budget is not meaningful and the factories are the
 * only way to obtain one.
 */
struct PrivacyBudget {
  BudgetKind kind;
  double eps = 0.0;
  double delta = 0.0;
  double mu = 0.0;

  static PrivacyBudget pure_eps(double eps);
  static PrivacyBudget approx(double eps, double delta);
  static PrivacyBudget gdp(double mu);
};

enum class MechKind { kLaplace, kGaussian, kGdp };

MechKind mech_kind_from_string(const std::string& s);
std::string mech_kind_to_string(MechKind mech);

/**
 * Calibrated local noise sampler for a unit gradient bound.
 *
 * Per-component distributions:
 *   Laplace  -- Laplace(0, 2*sqrt(d)/eps)            (pure eps-LDP)
 *   Gaussian -- N(0, 8*ln(1.25/delta)/eps^2)         ((eps,delta)-LDP)
 *   Gdp      -- N(0, 4/mu^2)                         (mu-GDP)
 *
 * The sampler is loss-agnostic: the optimizer scales samples by the loss's
 * gradient bound C0, which covers the 2*C0 sensitivity of the update.
 */
class NoiseMechanism {
 public:
  // Throws config_error if the budget family does not match the mechanism.
  NoiseMechanism(MechKind mech, PrivacyBudget budget, int dim);

  MechKind mech() const { return mech_; }
  const PrivacyBudget& budget() const { return budget_; }
  int dim() const { return dim_; }

  // Per-component Laplace scale b, or Gaussian/GDP standard deviation.
  double component_scale() const;

  // Exact E||omega||^2 of one sample:
  //   Laplace 8 d^2 / eps^2, Gaussian 8 d ln(1.25/delta) / eps^2, Gdp 4 d / mu^2.
  double omega_second_moment() const;

  Vec sample(RngHandle& rng) const;
  void sample(RngHandle& rng, Vec& out) const;

 private:
  MechKind mech_;
  PrivacyBudget budget_;
  int dim_;
};

// Tightest delta for which a mu-GDP mechanism is (eps, delta)-private:
//   delta = Phi(-eps/mu + mu/2) - e^eps * Phi(-eps/mu - mu/2).
double gdp_to_dp(double mu, double eps);

/**
 * Composition ledger over disjoint individuals.
 *
 * Mechanisms applied to disjoint data compose by the componentwise maximum
 * of their budgets, never the sum, and post-processing (averaging the
 * iterates) exposes no mutation path here. Epsilon-family budgets (pure
 * and approximate) share one ledger; GDP budgets may not be mixed with
 * them because the two families are not comparable.
 */
class PrivacyLedger {
 public:
  enum class Family { kNone, kEpsDelta, kGdp };

  void record(const PrivacyBudget& b);

  Family family() const { return family_; }
  double max_eps() const { return max_eps_; }
  double max_delta() const { return max_delta_; }
  double max_mu() const { return max_mu_; }
  std::int64_t count() const { return count_; }

  // {kind, max_eps, max_delta, max_mu, count}
  nlohmann::json to_json() const;

  friend bool operator==(const PrivacyLedger&, const PrivacyLedger&) = default;
  friend PrivacyLedger merge_max(const PrivacyLedger& a, const PrivacyLedger& b);

 private:
  Family family_ = Family::kNone;
  double max_eps_ = 0.0;
  double max_delta_ = 0.0;
  double max_mu_ = 0.0;
  std::int64_t count_ = 0;
};

// Componentwise merge of two ledgers (used to summarize replications).
PrivacyLedger merge_max(const PrivacyLedger& a, const PrivacyLedger& b);

}  // namespace ldpsgd
