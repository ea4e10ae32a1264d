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

#include "ldpsgd/privacy.hpp"

#include <algorithm>
#include <cmath>

namespace ldpsgd {

PrivacyBudget PrivacyBudget::pure_eps(double eps) {
  if (!(eps > 0.0)) throw config_error("PrivacyBudget: pure eps requires eps > 0");
  return {BudgetKind::kPureEps, eps, 0.0, 0.0};
}

PrivacyBudget PrivacyBudget::approx(double eps, double delta) {
  if (!(eps > 0.0)) throw config_error("PrivacyBudget: approx requires eps > 0");
  if (!(delta > 0.0 && delta < 1.0))
    throw config_error("PrivacyBudget: approx requires 0 < delta < 1");
  return {BudgetKind::kApproxEpsDelta, eps, delta, 0.0};
}

PrivacyBudget PrivacyBudget::gdp(double mu) {
  if (!(mu > 0.0)) throw config_error("PrivacyBudget: gdp requires mu > 0");
  return {BudgetKind::kGdpMu, 0.0, 0.0, mu};
}

MechKind mech_kind_from_string(const std::string& s) {
  if (s == "laplace") return MechKind::kLaplace;
  if (s == "gaussian") return MechKind::kGaussian;
  if (s == "gdp") return MechKind::kGdp;
  throw config_error("unknown mechanism: " + s);
}

std::string mech_kind_to_string(MechKind m) {
  switch (m) {
    case MechKind::kLaplace: return "laplace";
    case MechKind::kGaussian: return "gaussian";
    case MechKind::kGdp: return "gdp";
  }
  return "?";
}

NoiseMechanism::NoiseMechanism(MechKind mech, PrivacyBudget budget, int dim)
    : mech_(mech), budget_(budget), dim_(dim) {
  if (dim < 1) throw config_error("NoiseMechanism: dim must be >= 1");
  const bool ok = (mech == MechKind::kLaplace && budget.kind == BudgetKind::kPureEps) ||
                  (mech == MechKind::kGaussian && budget.kind == BudgetKind::kApproxEpsDelta) ||
                  (mech == MechKind::kGdp && budget.kind == BudgetKind::kGdpMu);
  if (!ok)
    throw config_error("NoiseMechanism: budget family does not match mechanism " +
                       mech_kind_to_string(mech));
}

double NoiseMechanism::component_scale() const {
  switch (mech_) {
    case MechKind::kLaplace:
      return 2.0 * std::sqrt(static_cast<double>(dim_)) / budget_.eps;
    case MechKind::kGaussian:
      return std::sqrt(8.0 * std::log(1.25 / budget_.delta)) / budget_.eps;
    case MechKind::kGdp:
      return 2.0 / budget_.mu;
  }
  return 0.0;
}

double NoiseMechanism::omega_second_moment() const {
  const double d = static_cast<double>(dim_);
  switch (mech_) {
    // Laplace per-component variance is 2 b^2 with b = 2 sqrt(d)/eps.
    case MechKind::kLaplace: {
      const double b = component_scale();
      return d * 2.0 * b * b;
    }
    case MechKind::kGaussian:
    case MechKind::kGdp: {
      const double s = component_scale();
      return d * s * s;
    }
  }
  return 0.0;
}

Vec NoiseMechanism::sample(RngHandle& rng) const {
  Vec w(static_cast<std::size_t>(dim_));
  sample(rng, w);
  return w;
}

void NoiseMechanism::sample(RngHandle& rng, Vec& out) const {
  const double s = component_scale();
  out.resize(static_cast<std::size_t>(dim_));
  if (mech_ == MechKind::kLaplace) {
    for (auto& x : out) x = rng.next_laplace(s);
  } else {
    for (auto& x : out) x = s * rng.next_gaussian();
  }
}

namespace {
// Standard normal CDF via erfc; accurate to ~1 ulp of erfc, far below the
// 1e-10 requirement on the conversion.
double norm_cdf(double x) { return 0.5 * std::erfc(-x / M_SQRT2); }
}  // namespace

double gdp_to_dp(double mu, double eps) {
  if (!(mu > 0.0)) throw std::domain_error("gdp_to_dp: mu must be > 0");
  if (!(eps > 0.0)) throw std::domain_error("gdp_to_dp: eps must be > 0");
  const double d = norm_cdf(-eps / mu + mu / 2.0) - std::exp(eps) * norm_cdf(-eps / mu - mu / 2.0);
  return std::clamp(d, 0.0, 1.0);
}

void PrivacyLedger::record(const PrivacyBudget& b) {
  const Family f = b.kind == BudgetKind::kGdpMu ? Family::kGdp : Family::kEpsDelta;
  if (family_ == Family::kNone) {
    family_ = f;
  } else if (family_ != f) {
    throw config_error("PrivacyLedger: cannot mix GDP budgets with (eps, delta) budgets");
  }
  max_eps_ = std::max(max_eps_, b.eps);
  max_delta_ = std::max(max_delta_, b.delta);
  max_mu_ = std::max(max_mu_, b.mu);
  ++count_;
}

nlohmann::json PrivacyLedger::to_json() const {
  const char* kind = family_ == Family::kNone     ? "none"
                     : family_ == Family::kEpsDelta ? "eps_delta"
                                                    : "gdp";
  return {{"kind", kind},
          {"max_eps", max_eps_},
          {"max_delta", max_delta_},
          {"max_mu", max_mu_},
          {"count", count_}};
}

PrivacyLedger merge_max(const PrivacyLedger& a, const PrivacyLedger& b) {
  if (a.family() == PrivacyLedger::Family::kNone) return b;
  if (b.family() == PrivacyLedger::Family::kNone) return a;
  if (a.family() != b.family())
    throw config_error("merge_max: ledgers record incomparable budget families");
  PrivacyLedger out = a;
  out.max_eps_ = std::max(a.max_eps_, b.max_eps_);
  out.max_delta_ = std::max(a.max_delta_, b.max_delta_);
  out.max_mu_ = std::max(a.max_mu_, b.max_mu_);
  // Each ledger describes one run over its own disjoint individuals; the
  // summary keeps the per-run count, not the sum.
  out.count_ = std::max(a.count_, b.count_);
  return out;
}

}  // namespace ldpsgd
