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

#include "ldpsgd/losses.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "ldpsgd/errors.hpp"

namespace ldpsgd {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double norm_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double kappa_integrand(double z) { return z * z * norm_pdf(z); }

double simpson_rule(double a, double fa, double b, double fb, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_simpson(double a, double fa, double b, double fb, double m, double fm,
                        double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = kappa_integrand(lm);
  const double frm = kappa_integrand(rm);
  const double left = simpson_rule(a, fa, m, fm, flm);
  const double right = simpson_rule(m, fm, b, fb, frm);
  const double correction = left + right - whole;
  if (depth <= 0 || std::abs(correction) <= 15.0 * tol) {
    return left + right + correction / 15.0;
  }
  return adaptive_simpson(a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

double stable_softplus(double m) {
  return std::max(m, 0.0) + std::log1p(std::exp(-std::abs(m)));
}

}  // namespace

double mallows_weight(const Vec& x) {
  const double nsq = norm2_sq(x);
  return nsq <= 2.0 ? 1.0 : 2.0 / nsq;
}

double huber_rho(double z, double c) {
  const double az = std::abs(z);
  return az <= c ? 0.5 * z * z : c * az - 0.5 * c * c;
}

double huber_psi(double z, double c) { return std::clamp(z, -c, c); }

double kappa_c(double c) {
  if (!(c > 0.0)) {
    throw std::domain_error("kappa_c: c must be > 0");
  }
  const double m = 0.5 * c;
  const double fa = kappa_integrand(0.0);
  const double fb = kappa_integrand(c);
  const double fm = kappa_integrand(m);
  const double whole = simpson_rule(0.0, fa, c, fb, fm);
  const double body = adaptive_simpson(0.0, fa, c, fb, m, fm, whole, 0.5e-12, 48);
  const double tail = c * c * norm_cdf(-c);
  return 2.0 * (body + tail);
}

Vec clip_gradient(Vec g, double clip_norm) {
  if (!(clip_norm > 0.0)) {
    throw std::domain_error("clip_gradient: clip_norm must be > 0");
  }
  const double n = norm2(g);
  if (n > clip_norm) {
    scale(g, clip_norm / n);
  }
  return g;
}

HuberScaleLoss::HuberScaleLoss(int x_dim, double c, double sigma_floor)
    : x_dim_(x_dim), c_(c), kappa_(0.0), sigma_floor_(sigma_floor) {
  if (x_dim < 1) {
    throw config_error("HuberScaleLoss: x_dim must be >= 1");
  }
  if (!(c > 0.0)) {
    throw config_error("HuberScaleLoss: c must be > 0");
  }
  if (!(sigma_floor > 0.0)) {
    throw config_error("HuberScaleLoss: sigma_floor must be > 0");
  }
  kappa_ = kappa_c(c);
}

double HuberScaleLoss::loss(const Vec& theta, const LabeledExample& ex) const {
  require_dim(static_cast<std::size_t>(param_dim()), theta.size(), "HuberScaleLoss theta");
  require_dim(static_cast<std::size_t>(x_dim_), ex.x.size(), "HuberScaleLoss x");
  const std::size_t p = static_cast<std::size_t>(x_dim_);
  double r = ex.y;
  for (std::size_t j = 0; j < p; ++j) r -= ex.x[j] * theta[j];
  const double sigma = std::max(theta[p], sigma_floor_);
  const double w = mallows_weight(ex.x);
  return (sigma * huber_rho(r / sigma, c_) + 0.5 * kappa_ * sigma) * w;
}

void HuberScaleLoss::gradient(const Vec& theta, const LabeledExample& ex, Vec& out) const {
  require_dim(static_cast<std::size_t>(param_dim()), theta.size(), "HuberScaleLoss theta");
  require_dim(static_cast<std::size_t>(x_dim_), ex.x.size(), "HuberScaleLoss x");
  const std::size_t p = static_cast<std::size_t>(x_dim_);
  out.assign(p + 1, 0.0);
  double r = ex.y;
  for (std::size_t j = 0; j < p; ++j) r -= ex.x[j] * theta[j];
  const double sigma = std::max(theta[p], sigma_floor_);
  const double u = r / sigma;
  const double w = mallows_weight(ex.x);
  const double psi = huber_psi(u, c_);
  for (std::size_t j = 0; j < p; ++j) out[j] = -psi * ex.x[j] * w;
  out[p] = (huber_rho(u, c_) - u * psi + 0.5 * kappa_) * w;
}

double HuberScaleLoss::grad_bound() const {
  const double s = 0.5 * std::max(kappa_, c_ * c_ - kappa_);
  return std::sqrt(2.0 * c_ * c_ + s * s);
}

double HuberScaleLoss::noise_multiplier() const {
  return 0.5 * std::sqrt(8.0 * c_ * c_ + 0.25 * c_ * c_ * c_ * c_);
}

void HuberScaleLoss::project(Vec& theta) const {
  require_dim(static_cast<std::size_t>(param_dim()), theta.size(), "HuberScaleLoss theta");
  const std::size_t p = static_cast<std::size_t>(x_dim_);
  theta[p] = std::max(theta[p], sigma_floor_);
}

BinaryLogisticLoss::BinaryLogisticLoss(int x_dim, bool mallows_weighted)
    : x_dim_(x_dim), weighted_(mallows_weighted) {
  if (x_dim < 1) {
    throw config_error("BinaryLogisticLoss: x_dim must be >= 1");
  }
}

double BinaryLogisticLoss::loss(const Vec& theta, const LabeledExample& ex) const {
  require_dim(static_cast<std::size_t>(x_dim_), theta.size(), "BinaryLogisticLoss theta");
  require_dim(static_cast<std::size_t>(x_dim_), ex.x.size(), "BinaryLogisticLoss x");
  if (ex.y != 0.0 && ex.y != 1.0) {
    throw data_error("BinaryLogisticLoss: y must be 0 or 1, got " + std::to_string(ex.y));
  }
  const double m = dot(theta, ex.x);
  const double w = weighted_ ? mallows_weight(ex.x) : 1.0;
  return (stable_softplus(m) - ex.y * m) * w;
}

void BinaryLogisticLoss::gradient(const Vec& theta, const LabeledExample& ex, Vec& out) const {
  require_dim(static_cast<std::size_t>(x_dim_), theta.size(), "BinaryLogisticLoss theta");
  require_dim(static_cast<std::size_t>(x_dim_), ex.x.size(), "BinaryLogisticLoss x");
  if (ex.y != 0.0 && ex.y != 1.0) {
    throw data_error("BinaryLogisticLoss: y must be 0 or 1, got " + std::to_string(ex.y));
  }
  const double m = dot(theta, ex.x);
  const double p = 1.0 / (1.0 + std::exp(-m));
  const double w = weighted_ ? mallows_weight(ex.x) : 1.0;
  const double s = (p - ex.y) * w;
  out.assign(ex.x.size(), 0.0);
  for (std::size_t j = 0; j < ex.x.size(); ++j) out[j] = s * ex.x[j];
}

double BinaryLogisticLoss::grad_bound() const {
  return weighted_ ? std::numbers::sqrt2 : std::numeric_limits<double>::infinity();
}

MultinomialLogisticLoss::MultinomialLogisticLoss(int num_classes, int x_dim)
    : classes_(num_classes), x_dim_(x_dim) {
  if (num_classes < 2) {
    throw config_error("MultinomialLogisticLoss: num_classes must be >= 2");
  }
  if (x_dim < 1) {
    throw config_error("MultinomialLogisticLoss: x_dim must be >= 1");
  }
}

void MultinomialLogisticLoss::probabilities(const Vec& theta, const Vec& x, Vec& probs) const {
  require_dim(static_cast<std::size_t>(param_dim()), theta.size(),
                   "MultinomialLogisticLoss theta");
  require_dim(static_cast<std::size_t>(x_dim_), x.size(), "MultinomialLogisticLoss x");
  const std::size_t k = static_cast<std::size_t>(classes_);
  const std::size_t p = static_cast<std::size_t>(x_dim_);
  probs.assign(k, 0.0);
  double max_m = -std::numeric_limits<double>::infinity();
  for (std::size_t cls = 0; cls < k; ++cls) {
    double m = 0.0;
    for (std::size_t j = 0; j < p; ++j) m += theta[cls * p + j] * x[j];
    probs[cls] = m;
    max_m = std::max(max_m, m);
  }
  double z = 0.0;
  for (std::size_t cls = 0; cls < k; ++cls) {
    probs[cls] = std::exp(probs[cls] - max_m);
    z += probs[cls];
  }
  for (std::size_t cls = 0; cls < k; ++cls) probs[cls] /= z;
}

int MultinomialLogisticLoss::predict(const Vec& theta, const Vec& x) const {
  Vec probs;
  probabilities(theta, x, probs);
  int best = 0;
  for (int cls = 1; cls < classes_; ++cls) {
    if (probs[static_cast<std::size_t>(cls)] > probs[static_cast<std::size_t>(best)]) {
      best = cls;
    }
  }
  return best;
}

double MultinomialLogisticLoss::loss(const Vec& theta, const LabeledExample& ex) const {
  const int y = ex.label();
  if (ex.y != static_cast<double>(y) || y < 0 || y >= classes_) {
    throw data_error("MultinomialLogisticLoss: y must be a class index in [0, " +
                     std::to_string(classes_) + ")");
  }
  Vec probs;
  probabilities(theta, ex.x, probs);
  const double w = mallows_weight(ex.x);
  return -w * std::log(std::max(probs[static_cast<std::size_t>(y)],
                                std::numeric_limits<double>::min()));
}

void MultinomialLogisticLoss::gradient(const Vec& theta, const LabeledExample& ex,
                                       Vec& out) const {
  const int y = ex.label();
  if (ex.y != static_cast<double>(y) || y < 0 || y >= classes_) {
    throw data_error("MultinomialLogisticLoss: y must be a class index in [0, " +
                     std::to_string(classes_) + ")");
  }
  Vec probs;
  probabilities(theta, ex.x, probs);
  const std::size_t k = static_cast<std::size_t>(classes_);
  const std::size_t p = static_cast<std::size_t>(x_dim_);
  const double w = mallows_weight(ex.x);
  out.assign(k * p, 0.0);
  for (std::size_t cls = 0; cls < k; ++cls) {
    const double s = (probs[cls] - (static_cast<int>(cls) == y ? 1.0 : 0.0)) * w;
    for (std::size_t j = 0; j < p; ++j) out[cls * p + j] = s * ex.x[j];
  }
}

ClippedLoss::ClippedLoss(std::shared_ptr<const BoundedLoss> inner, double clip_norm)
    : inner_(std::move(inner)), clip_norm_(clip_norm) {
  if (!inner_) {
    throw config_error("ClippedLoss: inner loss must not be null");
  }
  if (!(clip_norm > 0.0)) {
    throw config_error("ClippedLoss: clip_norm must be > 0");
  }
}

double ClippedLoss::loss(const Vec& theta, const LabeledExample& ex) const {
  return inner_->loss(theta, ex);
}

void ClippedLoss::gradient(const Vec& theta, const LabeledExample& ex, Vec& out) const {
  inner_->gradient(theta, ex, out);
  const double n = norm2(out);
  if (n > clip_norm_) {
    scale(out, clip_norm_ / n);
  }
}

}  // namespace ldpsgd
