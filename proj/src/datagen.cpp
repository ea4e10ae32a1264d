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

#include "ldpsgd/datagen.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include "ldpsgd/errors.hpp"
#include "ldpsgd/textio.hpp"

namespace ldpsgd {

SyntheticDesign SyntheticDesign::linear_huber(int d, std::int64_t n) {
  SyntheticDesign design;
  design.kind = DesignKind::kLinearHuber;
  design.d = d;
  design.beta_true = ones(static_cast<std::size_t>(d) + 1);
  design.n = n;
  design.validate();
  return design;
}

SyntheticDesign SyntheticDesign::binary_logistic(int d, std::int64_t n) {
  SyntheticDesign design;
  design.kind = DesignKind::kBinaryLogistic;
  design.d = d;
  design.beta_true = ones(static_cast<std::size_t>(d) + 1);
  design.n = n;
  design.validate();
  return design;
}

void SyntheticDesign::validate() const {
  if (d < 0) {
    throw config_error("SyntheticDesign: d must be >= 0");
  }
  if (n < 1) {
    throw config_error("SyntheticDesign: n must be >= 1");
  }
  if (beta_true.size() != static_cast<std::size_t>(d) + 1) {
    throw config_error("SyntheticDesign: beta_true must have length d+1");
  }
  if (!(sigma >= 0.0) || !(sigma_z >= 0.0)) {
    throw config_error("SyntheticDesign: sigma and sigma_z must be >= 0");
  }
}

Vec design_optimum(const SyntheticDesign& design) {
  design.validate();
  if (design.kind == DesignKind::kBinaryLogistic) {
    return design.beta_true;
  }
  Vec star = design.beta_true;
  star.push_back(design.sigma);
  return star;
}

namespace {

LabeledExample draw_example(const SyntheticDesign& design, const RngHandle& root,
                            std::int64_t i) {
  RngHandle rng = root.substream(static_cast<std::uint64_t>(i));
  const std::size_t p = static_cast<std::size_t>(design.d) + 1;
  LabeledExample ex;
  ex.x.resize(p);
  ex.x[0] = 1.0;
  for (std::size_t j = 1; j < p; ++j) {
    ex.x[j] = design.sigma_z * rng.next_gaussian();
  }
  const double m = dot(ex.x, design.beta_true);
  if (design.kind == DesignKind::kLinearHuber) {
    ex.y = m + design.sigma * rng.next_gaussian();
  } else {
    const double prob = 1.0 / (1.0 + std::exp(-m));
    ex.y = rng.next_unit() < prob ? 1.0 : 0.0;
  }
  return ex;
}

}  // namespace

SyntheticStream::SyntheticStream(SyntheticDesign design, RngHandle rng)
    : design_(std::move(design)), rng_(rng) {
  design_.validate();
}

std::optional<LabeledExample> SyntheticStream::next(std::int64_t i) {
  if (i < 1) {
    throw std::domain_error("SyntheticStream::next: index must be >= 1");
  }
  if (i > design_.n) {
    return std::nullopt;
  }
  return draw_example(design_, rng_, i);
}

std::vector<LabeledExample> sample_examples(const SyntheticDesign& design, RngHandle rng,
                                            std::int64_t count) {
  design.validate();
  if (count < 0) {
    throw std::domain_error("sample_examples: count must be >= 0");
  }
  std::vector<LabeledExample> out;
  out.reserve(static_cast<std::size_t>(count));
  for (std::int64_t i = 1; i <= count; ++i) {
    out.push_back(draw_example(design, rng, i));
  }
  return out;
}

void dump_csv(std::ostream& out, const SyntheticDesign& design, RngHandle rng) {
  design.validate();
  for (int j = 0; j <= design.d; ++j) {
    out << "x_" << j << ',';
  }
  out << "y\n";
  for (std::int64_t i = 1; i <= design.n; ++i) {
    const LabeledExample ex = draw_example(design, rng, i);
    for (double v : ex.x) {
      out << g17(v) << ',';
    }
    out << g17(ex.y) << '\n';
  }
}

void dump_csv(const std::string& path, const SyntheticDesign& design, RngHandle rng) {
  std::ofstream out(path);
  if (!out) {
    throw data_error("dump_csv: cannot open " + path + " for writing");
  }
  dump_csv(out, design, rng);
}

}  // namespace ldpsgd
