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

#include "ldpsgd/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "ldpsgd/errors.hpp"

namespace ldpsgd {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    cells.push_back(trim(cell));
  }
  if (!line.empty() && line.back() == ',') {
    cells.push_back("");
  }
  return cells;
}

double parse_number(const std::string& cell, const std::string& column, std::size_t row) {
  char* end = nullptr;
  const std::string t = trim(cell);
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || !std::isfinite(v)) {
    throw data_error("column '" + column + "', row " + std::to_string(row) +
                     ": cannot parse numeric value '" + cell + "'");
  }
  return v;
}

}  // namespace

Standardizer fit_standardizer(const Vec& values) {
  if (values.empty()) {
    throw config_error("fit_standardizer: values must be nonempty");
  }
  Standardizer s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) {
    const double c = v - s.mean;
    ss += c * c;
  }
  const double sd = std::sqrt(ss / static_cast<double>(values.size()));
  s.sd = sd > 0.0 ? sd : 1.0;
  return s;
}

double type7_quantile(Vec values, double p) {
  if (values.empty()) {
    throw config_error("type7_quantile: values must be nonempty");
  }
  if (!(p >= 0.0) || !(p <= 1.0)) {
    throw std::domain_error("type7_quantile: p must lie in [0, 1]");
  }
  std::sort(values.begin(), values.end());
  const double h = p * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  const double frac = h - static_cast<double>(lo);
  if (lo + 1 >= values.size()) {
    return values.back();
  }
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

int QuantileBinner::bin(double v) const {
  int k = 0;
  for (double t : thresholds) {
    if (v > t) ++k;
  }
  return k;
}

QuantileBinner fit_quantile_binner(const Vec& values, const Vec& probs) {
  if (probs.empty()) {
    throw config_error("fit_quantile_binner: probs must be nonempty");
  }
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (!(probs[k] > 0.0) || !(probs[k] < 1.0) || (k > 0 && probs[k] <= probs[k - 1])) {
      throw config_error("fit_quantile_binner: probs must be strictly increasing in (0, 1)");
    }
  }
  QuantileBinner binner;
  binner.thresholds.reserve(probs.size());
  for (double p : probs) {
    binner.thresholds.push_back(type7_quantile(values, p));
  }
  return binner;
}

std::vector<int> bin_by_quantiles(const Vec& values, const Vec& probs) {
  const QuantileBinner binner = fit_quantile_binner(values, probs);
  std::vector<int> labels;
  labels.reserve(values.size());
  for (double v : values) {
    labels.push_back(binner.bin(v));
  }
  return labels;
}

TabularDataset load_and_encode(const std::string& csv_path,
                               const std::vector<ColumnSpec>& specs, const SplitPlan& plan) {
  if (!(plan.train_fraction > 0.0) || !(plan.train_fraction < 1.0)) {
    throw config_error("load_and_encode: train_fraction must lie in (0, 1)");
  }
  int responses = 0;
  for (const ColumnSpec& spec : specs) {
    if (spec.role == ColumnRole::kResponse) ++responses;
  }
  if (responses != 1) {
    throw config_error("load_and_encode: specs must name exactly one response column");
  }

  std::ifstream in(csv_path);
  if (!in) {
    throw data_error("load_and_encode: cannot open " + csv_path);
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw schema_error("load_and_encode: empty file " + csv_path);
  }
  const std::vector<std::string> header = split_csv_line(line);
  std::unordered_map<std::string, std::size_t> col_of;
  for (std::size_t j = 0; j < header.size(); ++j) {
    col_of[header[j]] = j;
  }
  std::vector<std::size_t> spec_col(specs.size());
  for (std::size_t s = 0; s < specs.size(); ++s) {
    auto it = col_of.find(specs[s].name);
    if (it == col_of.end()) {
      throw schema_error("load_and_encode: column '" + specs[s].name + "' missing from " +
                         csv_path);
    }
    spec_col[s] = it->second;
  }

  std::vector<std::vector<std::string>> cells;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<std::string> row = split_csv_line(line);
    if (row.size() != header.size()) {
      throw data_error("load_and_encode: row " + std::to_string(cells.size() + 1) + " has " +
                       std::to_string(row.size()) + " cells, header has " +
                       std::to_string(header.size()));
    }
    cells.push_back(std::move(row));
  }
  const std::size_t n = cells.size();
  if (n < 2) {
    throw data_error("load_and_encode: need at least 2 data rows to split");
  }

  TabularDataset ds;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  shuffle_indices(order, RngHandle(plan.seed, streams::kPermute));
  std::size_t train_count = static_cast<std::size_t>(
      std::llround(plan.train_fraction * static_cast<double>(n)));
  train_count = std::clamp<std::size_t>(train_count, 1, n - 1);
  ds.train_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_count));
  ds.test_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(train_count), order.end());
  std::sort(ds.train_rows.begin(), ds.train_rows.end());
  std::sort(ds.test_rows.begin(), ds.test_rows.end());

  ds.rows.assign(n, Vec{1.0});
  for (std::size_t s = 0; s < specs.size(); ++s) {
    const ColumnSpec& spec = specs[s];
    const std::size_t j = spec_col[s];
    if (spec.role == ColumnRole::kResponse) {
      ds.response.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        ds.response.push_back(parse_number(cells[i][j], spec.name, i + 1));
      }
      continue;
    }
    Vec encoded(n);
    Standardizer scaler;
    if (spec.role == ColumnRole::kNumericStandardize) {
      for (std::size_t i = 0; i < n; ++i) {
        encoded[i] = parse_number(cells[i][j], spec.name, i + 1);
      }
      Vec train_values;
      train_values.reserve(ds.train_rows.size());
      for (std::size_t i : ds.train_rows) {
        train_values.push_back(encoded[i]);
      }
      scaler = fit_standardizer(train_values);
      for (double& v : encoded) v = scaler.apply(v);
    } else {
      if (spec.role == ColumnRole::kBinary && spec.mapping.size() != 2) {
        throw config_error("load_and_encode: binary column '" + spec.name +
                           "' needs exactly 2 mapped categories");
      }
      if (spec.mapping.size() < 2) {
        throw config_error("load_and_encode: column '" + spec.name +
                           "' needs at least 2 mapped categories");
      }
      std::unordered_map<std::string, double> codes;
      for (const auto& [category, code] : spec.mapping) {
        if (!codes.emplace(category, code).second) {
          throw config_error("load_and_encode: column '" + spec.name +
                             "' maps category '" + category + "' twice");
        }
      }
      for (std::size_t i = 0; i < n; ++i) {
        auto it = codes.find(cells[i][j]);
        if (it == codes.end()) {
          throw data_error("column '" + spec.name + "', row " + std::to_string(i + 1) +
                           ": unmapped category '" + cells[i][j] + "'");
        }
        encoded[i] = it->second;
      }
    }
    ds.feature_names.push_back(spec.name);
    ds.feature_scalers.push_back(scaler);
    for (std::size_t i = 0; i < n; ++i) {
      ds.rows[i].push_back(encoded[i]);
    }
  }
  return ds;
}

namespace {

std::vector<LabeledExample> gather_examples(const TabularDataset& ds,
                                            const std::vector<std::size_t>& idx,
                                            const Vec& labels) {
  std::vector<LabeledExample> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) {
    out.push_back({ds.rows[i], labels[i]});
  }
  return out;
}

}  // namespace

EncodedTask make_regression_task(const TabularDataset& ds) {
  if (ds.rows.empty() || ds.response.size() != ds.rows.size()) {
    throw config_error("make_regression_task: dataset has no usable response");
  }
  EncodedTask task;
  Vec train_response;
  train_response.reserve(ds.train_rows.size());
  for (std::size_t i : ds.train_rows) {
    train_response.push_back(ds.response[i]);
  }
  task.response_scaler = fit_standardizer(train_response);
  Vec scaled(ds.response.size());
  for (std::size_t i = 0; i < ds.response.size(); ++i) {
    scaled[i] = task.response_scaler.apply(ds.response[i]);
  }
  task.train = gather_examples(ds, ds.train_rows, scaled);
  task.test = gather_examples(ds, ds.test_rows, scaled);
  task.x_dim = static_cast<int>(ds.rows.front().size());
  return task;
}

EncodedTask make_classification_task(const TabularDataset& ds, const Vec& probs) {
  if (ds.rows.empty() || ds.response.size() != ds.rows.size()) {
    throw config_error("make_classification_task: dataset has no usable response");
  }
  Vec train_response;
  train_response.reserve(ds.train_rows.size());
  for (std::size_t i : ds.train_rows) {
    train_response.push_back(ds.response[i]);
  }
  const QuantileBinner binner = fit_quantile_binner(train_response, probs);
  Vec labels(ds.response.size());
  for (std::size_t i = 0; i < ds.response.size(); ++i) {
    labels[i] = static_cast<double>(binner.bin(ds.response[i]));
  }
  EncodedTask task;
  task.num_classes = static_cast<int>(probs.size()) + 1;
  task.train = gather_examples(ds, ds.train_rows, labels);
  task.test = gather_examples(ds, ds.test_rows, labels);
  task.x_dim = static_cast<int>(ds.rows.front().size());
  return task;
}

PermutedEpochStream::PermutedEpochStream(std::vector<LabeledExample> examples, RngHandle rng,
                                         bool permute)
    : examples_(std::move(examples)), rng_(rng), permute_(permute) {
  if (examples_.empty()) {
    throw config_error("PermutedEpochStream: examples must be nonempty");
  }
  order_.resize(examples_.size());
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
}

std::optional<LabeledExample> PermutedEpochStream::next(std::int64_t i) {
  if (i < 1) {
    throw std::domain_error("PermutedEpochStream::next: index must be >= 1");
  }
  const std::int64_t m = static_cast<std::int64_t>(examples_.size());
  const std::int64_t epoch = (i - 1) / m;
  if (permute_ && epoch != shuffled_epoch_) {
    for (std::size_t k = 0; k < order_.size(); ++k) order_[k] = k;
    shuffle_indices(order_, rng_.substream(static_cast<std::uint64_t>(epoch)));
    shuffled_epoch_ = epoch;
  }
  return examples_[order_[static_cast<std::size_t>((i - 1) % m)]];
}

void shuffle_indices(std::vector<std::size_t>& idx, RngHandle rng) {
  for (std::size_t k = idx.size(); k > 1; --k) {
    const double u = rng.next_unit();
    std::size_t j = static_cast<std::size_t>(u * static_cast<double>(k));
    j = std::min(j, k - 1);
    std::swap(idx[k - 1], idx[j]);
  }
}

double classification_accuracy(const MultinomialLogisticLoss& model, const Vec& theta,
                               const std::vector<LabeledExample>& sample) {
  if (sample.empty()) {
    throw config_error("classification_accuracy: sample must be nonempty");
  }
  std::size_t hits = 0;
  for (const LabeledExample& ex : sample) {
    if (model.predict(theta, ex.x) == ex.label()) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(sample.size());
}

int majority_class(const std::vector<LabeledExample>& train) {
  if (train.empty()) {
    throw config_error("majority_class: train must be nonempty");
  }
  std::vector<std::size_t> counts;
  for (const LabeledExample& ex : train) {
    const int y = ex.label();
    if (y < 0) {
      throw data_error("majority_class: negative class label");
    }
    if (counts.size() <= static_cast<std::size_t>(y)) {
      counts.resize(static_cast<std::size_t>(y) + 1, 0);
    }
    ++counts[static_cast<std::size_t>(y)];
  }
  int best = 0;
  for (std::size_t k = 1; k < counts.size(); ++k) {
    if (counts[k] > counts[static_cast<std::size_t>(best)]) {
      best = static_cast<int>(k);
    }
  }
  return best;
}

double majority_class_accuracy(const std::vector<LabeledExample>& train,
                               const std::vector<LabeledExample>& test) {
  if (test.empty()) {
    throw config_error("majority_class_accuracy: test must be nonempty");
  }
  const int cls = majority_class(train);
  std::size_t hits = 0;
  for (const LabeledExample& ex : test) {
    if (ex.label() == cls) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

std::vector<ColumnSpec> insurance_column_specs() {
  using Mapping = std::vector<std::pair<std::string, double>>;
  const Mapping severity = {{"None", 0},
                            {"High blood pressure", 1},
                            {"Diabetes", 2},
                            {"Heart disease", 3}};
  std::vector<ColumnSpec> specs;
  specs.push_back({"age", ColumnRole::kNumericStandardize, {}});
  specs.push_back({"gender", ColumnRole::kBinary, Mapping{{"female", 0}, {"male", 1}}});
  specs.push_back({"bmi", ColumnRole::kNumericStandardize, {}});
  specs.push_back({"children", ColumnRole::kNumericStandardize, {}});
  specs.push_back({"smoker", ColumnRole::kBinary, Mapping{{"no", 0}, {"yes", 1}}});
  specs.push_back({"region",
                   ColumnRole::kOrdinal,
                   Mapping{{"northeast", 0}, {"northwest", 1}, {"southeast", 2},
                           {"southwest", 3}}});
  specs.push_back({"medical_history", ColumnRole::kOrdinal, severity});
  specs.push_back({"family_medical_history", ColumnRole::kOrdinal, severity});
  specs.push_back({"exercise_frequency",
                   ColumnRole::kOrdinal,
                   Mapping{{"Never", 0}, {"Occasionally", 1}, {"Rarely", 2},
                           {"Frequently", 3}}});
  specs.push_back({"occupation",
                   ColumnRole::kOrdinal,
                   Mapping{{"Student", 0}, {"Unemployed", 1}, {"Blue collar", 2},
                           {"White collar", 3}}});
  specs.push_back({"coverage_level",
                   ColumnRole::kOrdinal,
                   Mapping{{"Basic", 0}, {"Standard", 1}, {"Premium", 2}}});
  specs.push_back({"charges", ColumnRole::kResponse, {}});
  return specs;
}

namespace {

// Draws an index from the cumulative weights implied by probs.
std::size_t draw_category(RngHandle& rng, const Vec& probs) {
  const double u = rng.next_unit();
  double acc = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    acc += probs[k];
    if (u < acc) return k;
  }
  return probs.size() - 1;
}

}  // namespace

void write_synthetic_insurance_csv(const std::string& path, std::int64_t rows,
                                   std::uint64_t seed) {
  if (rows < 1) {
    throw config_error("write_synthetic_insurance_csv: rows must be >= 1");
  }
  std::ofstream out(path);
  if (!out) {
    throw data_error("write_synthetic_insurance_csv: cannot open " + path + " for writing");
  }
  const char* genders[] = {"female", "male"};
  const char* smoker[] = {"no", "yes"};
  const char* regions[] = {"northeast", "northwest", "southeast", "southwest"};
  const char* severity[] = {"None", "High blood pressure", "Diabetes", "Heart disease"};
  const char* exercise[] = {"Never", "Occasionally", "Rarely", "Frequently"};
  const char* occupation[] = {"Student", "Unemployed", "Blue collar", "White collar"};
  const char* coverage[] = {"Basic", "Standard", "Premium"};

  out << "age,gender,bmi,children,smoker,region,medical_history,family_medical_history,"
         "exercise_frequency,occupation,coverage_level,charges\n";
  const RngHandle root(seed, streams::kData);
  char buf[64];
  for (std::int64_t i = 1; i <= rows; ++i) {
    RngHandle rng = root.substream(static_cast<std::uint64_t>(i));
    const int age = 18 + static_cast<int>(rng.next_unit() * 47.0);
    const std::size_t gender = draw_category(rng, {0.5, 0.5});
    double bmi = 27.5 + 4.0 * rng.next_gaussian();
    bmi = std::clamp(bmi, 15.0, 50.0);
    const std::size_t children = draw_category(rng, {0.3, 0.25, 0.2, 0.15, 0.07, 0.03});
    const std::size_t smk = draw_category(rng, {0.8, 0.2});
    const std::size_t region = draw_category(rng, {0.25, 0.25, 0.25, 0.25});
    const std::size_t medical = draw_category(rng, {0.5, 0.2, 0.2, 0.1});
    const std::size_t family = draw_category(rng, {0.5, 0.2, 0.2, 0.1});
    const std::size_t exer = draw_category(rng, {0.25, 0.3, 0.25, 0.2});
    const std::size_t occ = draw_category(rng, {0.2, 0.2, 0.3, 0.3});
    const std::size_t cov = draw_category(rng, {0.4, 0.35, 0.25});
    double charges = 4000.0 + 100.0 * (age - 40) + 150.0 * (bmi - 27.5) +
                     400.0 * static_cast<double>(children) +
                     9000.0 * static_cast<double>(smk) +
                     1800.0 * static_cast<double>(medical) +
                     1200.0 * static_cast<double>(family) -
                     500.0 * static_cast<double>(exer) +
                     600.0 * static_cast<double>(occ) +
                     2500.0 * static_cast<double>(cov) + 1500.0 * rng.next_gaussian();
    charges = std::max(charges, 100.0);
    std::snprintf(buf, sizeof(buf), "%.1f", bmi);
    out << age << ',' << genders[gender] << ',' << buf << ',' << children << ','
        << smoker[smk] << ',' << regions[region] << ',' << severity[medical] << ','
        << severity[family] << ',' << exercise[exer] << ',' << occupation[occ] << ','
        << coverage[cov] << ',';
    std::snprintf(buf, sizeof(buf), "%.2f", charges);
    out << buf << '\n';
  }
}

}  // namespace ldpsgd
