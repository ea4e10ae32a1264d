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

#include <cmath>
#include <stdexcept>

namespace ldpsgd {

// Integrated power-law kernel (t^beta - 1) / beta, extended continuously
// through beta = 0 where it equals ln(t). The exponent beta = 0 occurs in
// practice (step decay alpha = 1/2 gives 1 - 2*alpha = 0), so the formula
// switches to a second-order expansion for |beta| <= 1e-8. Small nonzero
// exponents go through expm1 to keep |psi - ln t| accurate at the scale
// |beta| ln(t)^2; away from zero the direct formula is used, which keeps
// integer exponents exact.
inline double psi_beta(double beta, double t) {
  if (!(t > 0.0)) throw std::domain_error("psi_beta: t must be > 0");
  const double lt = std::log(t);
  if (std::abs(beta) <= 1e-8) return lt + 0.5 * beta * lt * lt;
  if (std::abs(beta) < 0.5) return std::expm1(beta * lt) / beta;
  return (std::pow(t, beta) - 1.0) / beta;
}

}  // namespace ldpsgd
