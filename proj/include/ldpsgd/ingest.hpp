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
#include <utility>
#include <vector>

#include "ldpsgd/losses.hpp"
#include "ldpsgd/optimizer.hpp"
#include "ldpsgd/rng.hpp"
#include "ldpsgd/vec.hpp"

namespace ldpsgd {

enum class ColumnRole { kNumericStandardize, kOrdinal, kBinary, kResponse };

// One input column and how to encode it. Ordinal and binary columns carry
// an explicit category-to-code mapping; every category occurring in the
// data must appear in it.
struct ColumnSpec {
  std::string name;
  ColumnRole role = ColumnRole::kNumericStandardize;
  std::vector<std::pair<std::string, double>> mapping;
};

// Seeded disjoint train/test split by row.
struct SplitPlan {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

// z-score transform fitted on training rows; population standard
// deviation, with a constant column left centered but unscaled.
struct Standardizer {
  double mean = 0.0;
  double sd = 1.0;

  double apply(double v) const { return (v - mean) / sd; }
  double invert(double z) const { return z * sd + mean; }
};

Standardizer fit_standardizer(const Vec& values);

// Linear-interpolation sample quantile of order p (the convention where
// the k-th sorted value sits at probability (k-1)/(n-1)).
double type7_quantile(Vec values, double p);

// Thresholds at the fitted quantiles; bin(v) counts thresholds strictly
// below v, so ties go to the lower class.
struct QuantileBinner {
  Vec thresholds;

  int bin(double v) const;
};

QuantileBinner fit_quantile_binner(const Vec& values, const Vec& probs);

// Fits on values and labels the same values; probs default to the
// tercile cut points.
std::vector<int> bin_by_quantiles(const Vec& values, const Vec& probs = {0.33, 0.66});

/**
 * Encoded table: rows carry a leading intercept 1 followed by the encoded
 * features in spec order; the response column is kept raw. Numeric
 * features are standardized with statistics fitted on the train rows
 * only, and the fitted scalers are exposed for audit.
 */
struct TabularDataset {
  std::vector<std::string> feature_names;
  std::vector<Vec> rows;
  Vec response;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  std::vector<Standardizer> feature_scalers;
};

TabularDataset load_and_encode(const std::string& csv_path,
                               const std::vector<ColumnSpec>& specs, const SplitPlan& plan);

// Train/test examples ready for a loss oracle. num_classes == 0 marks a
// regression task whose response was standardized on the train split;
// response_scaler inverts predictions back to raw units.
struct EncodedTask {
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> test;
  int num_classes = 0;
  Standardizer response_scaler;
  int x_dim = 0;
};

EncodedTask make_regression_task(const TabularDataset& ds);

// Quantile-bins the response into probs.size()+1 classes, thresholds
// fitted on the train split.
EncodedTask make_classification_task(const TabularDataset& ds,
                                     const Vec& probs = {0.33, 0.66});

// Streams a fixed example set in a seeded random order, reshuffling at
// each epoch boundary (or in storage order when permute is false). The
// stream never ends; the run length decides how many epochs are touched.
class PermutedEpochStream : public ExampleStream {
 public:
  PermutedEpochStream(std::vector<LabeledExample> examples, RngHandle rng,
                      bool permute = true);
  std::optional<LabeledExample> next(std::int64_t i) override;

 private:
  std::vector<LabeledExample> examples_;
  RngHandle rng_;
  bool permute_;
  std::vector<std::size_t> order_;
  std::int64_t shuffled_epoch_ = -1;
};

// Seeded in-place Fisher-Yates shuffle.
void shuffle_indices(std::vector<std::size_t>& idx, RngHandle rng);

// Fraction of examples whose argmax class matches the label.
double classification_accuracy(const MultinomialLogisticLoss& model, const Vec& theta,
                               const std::vector<LabeledExample>& sample);

// Most frequent training label, lowest index on ties, and its accuracy
// as a constant predictor.
int majority_class(const std::vector<LabeledExample>& train);
double majority_class_accuracy(const std::vector<LabeledExample>& train,
                               const std::vector<LabeledExample>& test);

// Column specs for the US health-insurance table: standardized age, bmi
// and children; binary gender and smoker; ordinal codes for region,
// medical histories, exercise frequency, occupation and coverage level;
// charges as the response.
std::vector<ColumnSpec> insurance_column_specs();

// Seeded synthetic table matching insurance_column_specs(), with charges
// driven by a noisy linear signal in the other columns.
void write_synthetic_insurance_csv(const std::string& path, std::int64_t rows,
                                   std::uint64_t seed);

}  // namespace ldpsgd
