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

#include <memory>

#include "ldpsgd/vec.hpp"

namespace ldpsgd {

// One observation: covariates (with a leading intercept 1) and either a
// regression target or a class index stored in y.
struct LabeledExample {
  Vec x;
  double y = 0.0;

  int label() const { return static_cast<int>(y); }
};

/**
 * Loss/gradient oracle with a certified gradient bound.
 *
 * Every implementation guarantees ||gradient(theta, ex)||_2 <= grad_bound()
 * for all theta and all admissible examples; this is what makes the noisy
 * update private at a fixed noise scale. noise_multiplier() is the constant
 * the optimizer multiplies the unit-calibrated noise by; by default it is
 * the certified bound, but a family may carry a tighter published
 * sensitivity constant instead.
 *
 * Oracles are pure functions of (theta, example) and freely shareable
 * across threads.
 */
class BoundedLoss {
 public:
  virtual ~BoundedLoss() = default;

  virtual int param_dim() const = 0;
  virtual double loss(const Vec& theta, const LabeledExample& ex) const = 0;
  virtual void gradient(const Vec& theta, const LabeledExample& ex, Vec& out) const = 0;

  // Certified sup-norm of the per-example gradient.
  virtual double grad_bound() const = 0;

  // Constant scaling the privacy noise in the update; defaults to the
  // certified bound.
  virtual double noise_multiplier() const { return grad_bound(); }

  // Domain projection applied after each update (identity by default).
  virtual void project(Vec& /*theta*/) const {}

  Vec gradient(const Vec& theta, const LabeledExample& ex) const {
    Vec g(static_cast<std::size_t>(param_dim()));
    gradient(theta, ex, g);
    return g;
  }
};

// Covariate down-weighting min(1, 2/||x||^2). Bounds ||x * w(x)|| by
// sqrt(2) without biasing the estimating equation, unlike norm clipping.
double mallows_weight(const Vec& x);

// Huber loss rho_c and its derivative psi_c = clamp(z, -c, c).
double huber_rho(double z, double c);
double huber_psi(double z, double c);

// E[min(Z^2, c^2)] for standard normal Z, by adaptive quadrature to
// absolute error <= 1e-10. This is the unique constant that zeroes the
// population scale score at the true scale.
double kappa_c(double c);

// g * min(1, C / ||g||).
Vec clip_gradient(Vec g, double clip_norm);

/**
 * Huber linear regression with concomitant scale and Mallows weights.
 *
 * theta = (beta[0..p-1], sigma) with p = x_dim. Per-example objective
 *   (sigma * rho_c(r/sigma) + kappa_c * sigma / 2) * w(x),  r = y - x.beta.
 * sigma is kept above a small floor by project(); the gradient treats the
 * Huber kink with the clamp subgradient.
 */
class HuberScaleLoss : public BoundedLoss {
 public:
  explicit HuberScaleLoss(int x_dim, double c = 1.345, double sigma_floor = 1e-3);

  using BoundedLoss::gradient;

  int param_dim() const override { return x_dim_ + 1; }
  double loss(const Vec& theta, const LabeledExample& ex) const override;
  void gradient(const Vec& theta, const LabeledExample& ex, Vec& out) const override;

  // Attainable per-example bound sqrt(2 c^2 + max(kappa, c^2 - kappa)^2 / 4).
  double grad_bound() const override;

  // Published sensitivity constant sqrt(8 c^2 + c^4 / 4) / 2, slightly below
  // the attainable per-example bound; kept as the default noise scale.
  double noise_multiplier() const override;

  void project(Vec& theta) const override;

  double c() const { return c_; }
  double kappa() const { return kappa_; }
  double sigma_floor() const { return sigma_floor_; }

 private:
  int x_dim_;
  double c_;
  double kappa_;
  double sigma_floor_;
};

// Binary cross-entropy, optionally Mallows-weighted (the unweighted
// variant exists for the clipping comparison and has no finite certified
// bound of its own; wrap it in ClippedLoss before private use).
class BinaryLogisticLoss : public BoundedLoss {
 public:
  explicit BinaryLogisticLoss(int x_dim, bool mallows_weighted = true);

  using BoundedLoss::gradient;

  int param_dim() const override { return x_dim_; }
  double loss(const Vec& theta, const LabeledExample& ex) const override;
  void gradient(const Vec& theta, const LabeledExample& ex, Vec& out) const override;
  double grad_bound() const override;

 private:
  int x_dim_;
  bool weighted_;
};

// Softmax cross-entropy over K classes with Mallows weights. Parameters
// are a K x p block stored row-major: theta[k*p + j].
class MultinomialLogisticLoss : public BoundedLoss {
 public:
  MultinomialLogisticLoss(int num_classes, int x_dim);

  using BoundedLoss::gradient;

  int num_classes() const { return classes_; }
  int param_dim() const override { return classes_ * x_dim_; }
  double loss(const Vec& theta, const LabeledExample& ex) const override;
  void gradient(const Vec& theta, const LabeledExample& ex, Vec& out) const override;
  double grad_bound() const override { return 2.0; }

  // Class probabilities for prediction; ties in argmax break to the
  // lowest class index.
  void probabilities(const Vec& theta, const Vec& x, Vec& probs) const;
  int predict(const Vec& theta, const Vec& x) const;

 private:
  int classes_;
  int x_dim_;
};

// Wraps any loss with gradient norm clipping at clip_norm, which becomes
// both the certified bound and the noise multiplier.
class ClippedLoss : public BoundedLoss {
 public:
  ClippedLoss(std::shared_ptr<const BoundedLoss> inner, double clip_norm);

  using BoundedLoss::gradient;

  int param_dim() const override { return inner_->param_dim(); }
  double loss(const Vec& theta, const LabeledExample& ex) const override;
  void gradient(const Vec& theta, const LabeledExample& ex, Vec& out) const override;
  double grad_bound() const override { return clip_norm_; }
  void project(Vec& theta) const override { inner_->project(theta); }

 private:
  std::shared_ptr<const BoundedLoss> inner_;
  double clip_norm_;
};

}  // namespace ldpsgd
