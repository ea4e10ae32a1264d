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
#include <cstddef>
#include <vector>

#include "ldpsgd/errors.hpp"

namespace ldpsgd {

// Dense parameter / covariate vector. Dimensions are fixed by the model;
// every arithmetic helper below requires matching sizes.
using Vec = std::vector<double>;

inline void require_same_dim(const Vec& a, const Vec& b, const char* where) {
  if (a.size() != b.size()) throw config_error(std::string(where) + ": dimension mismatch");
}

inline void require_dim(std::size_t expected, std::size_t got, const char* where) {
  if (expected != got) {
    throw config_error(std::string(where) + ": expected dimension " +
                       std::to_string(expected) + ", got " + std::to_string(got));
  }
}

inline double dot(const Vec& a, const Vec& b) {
  require_same_dim(a, b, "dot");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double norm2_sq(const Vec& a) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return s;
}

inline double norm2(const Vec& a) { return std::sqrt(norm2_sq(a)); }

// y += alpha * x
inline void axpy(double alpha, const Vec& x, Vec& y) {
  require_same_dim(x, y, "axpy");
  for (std::size_t k = 0; k < x.size(); ++k) y[k] += alpha * x[k];
}

inline void scale(Vec& x, double alpha) {
  for (double& v : x) v *= alpha;
}

inline Vec zeros(std::size_t d) { return Vec(d, 0.0); }

inline Vec ones(std::size_t d) { return Vec(d, 1.0); }

inline bool all_finite(const Vec& a) {
  for (double x : a)
    if (!std::isfinite(x)) return false;
  return true;
}

inline void require_finite(const Vec& a, const char* where) {
  if (!all_finite(a)) throw numeric_error(std::string(where) + ": non-finite entry");
}

}  // namespace ldpsgd
