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
#include <iosfwd>
#include <string>

#include "ldpsgd/optimizer.hpp"
#include "ldpsgd/rng.hpp"
#include "ldpsgd/vec.hpp"

namespace ldpsgd {

enum class DesignKind { kLinearHuber, kBinaryLogistic };

/**
 * Synthetic simulation design. Covariates are x = (1, z) with
 * z ~ N(0, sigma_z^2 I_d); responses are y = x.beta + N(0, sigma^2) for
 * the linear design and y ~ Bernoulli(sigmoid(x.beta)) for the logistic
 * one. d counts the z coordinates, so x has d+1 entries.
 */
struct SyntheticDesign {
  DesignKind kind = DesignKind::kLinearHuber;
  int d = 5;
  Vec beta_true;
  double sigma = 2.0;
  double sigma_z = 1.0;
  std::int64_t n = 100000;

  static SyntheticDesign linear_huber(int d, std::int64_t n);
  static SyntheticDesign binary_logistic(int d, std::int64_t n);

  void validate() const;
};

// The generating parameter in the coordinates of the matching loss:
// (beta, sigma) for the linear design, beta for the logistic one.
Vec design_optimum(const SyntheticDesign& design);

// Lazily generated one-pass stream over the design; example i is a pure
// function of (design, rng identity, i), so replays and out-of-order
// holdout draws agree.
class SyntheticStream : public ExampleStream {
 public:
  SyntheticStream(SyntheticDesign design, RngHandle rng);
  std::optional<LabeledExample> next(std::int64_t i) override;

 private:
  SyntheticDesign design_;
  RngHandle rng_;
};

// count examples materialized from the stream keyed by rng, indices 1..count.
std::vector<LabeledExample> sample_examples(const SyntheticDesign& design, RngHandle rng,
                                            std::int64_t count);

// Audit dump: header x_0..x_d,y, one row per example, values in %.17g.
void dump_csv(std::ostream& out, const SyntheticDesign& design, RngHandle rng);
void dump_csv(const std::string& path, const SyntheticDesign& design, RngHandle rng);

}  // namespace ldpsgd
