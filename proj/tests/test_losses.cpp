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

#include <cmath>
#include <memory>
#include <vector>

#include "doctest.h"

#include "ldpsgd/errors.hpp"
#include "ldpsgd/losses.hpp"
#include "ldpsgd/rng.hpp"
#include "ldpsgd/vec.hpp"

using namespace ldpsgd;

namespace {

double norm_cdf_ref(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double norm_pdf_ref(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

// E[min(Z^2, c^2)] in closed form, as an independent cross-check of the
// quadrature: integral of z^2 phi over |z|<c plus the truncated tail mass.
double kappa_closed_form(double c) {
  return (2.0 * norm_cdf_ref(c) - 1.0) - 2.0 * c * norm_pdf_ref(c) +
         2.0 * c * c * (1.0 - norm_cdf_ref(c));
}

double fd_partial(const BoundedLoss& loss, Vec theta, const LabeledExample& ex,
                  std::size_t k, double h) {
  theta[k] += h;
  const double up = loss.loss(theta, ex);
  theta[k] -= 2.0 * h;
  const double down = loss.loss(theta, ex);
  return (up - down) / (2.0 * h);
}

void check_gradient_fd(const BoundedLoss& loss, const Vec& theta, const LabeledExample& ex,
                       double h, double tol) {
  const Vec g = loss.gradient(theta, ex);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double fd = fd_partial(loss, theta, ex, k, h);
    CHECK(std::abs(g[k] - fd) <= tol * std::max(1.0, std::abs(g[k])));
  }
}

Vec random_x(RngHandle& rng, int x_dim, double spread) {
  Vec x(static_cast<std::size_t>(x_dim));
  x[0] = 1.0;
  for (int j = 1; j < x_dim; ++j) {
    x[static_cast<std::size_t>(j)] = spread * rng.next_gaussian();
  }
  return x;
}

}  // namespace

TEST_CASE("mallows weight caps at 1 and equals 2 over the squared norm") {
  CHECK(mallows_weight(Vec{1.0}) == 1.0);
  CHECK(mallows_weight(Vec{1.0, 1.0}) == 1.0);
  CHECK(mallows_weight(Vec{2.0, 2.0}) == 0.25);
  CHECK(mallows_weight(Vec{1.0, 1.0, std::sqrt(6.0)}) == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("mallows weight bounds the weighted covariate norm by sqrt(2)") {
  RngHandle rng(21, 0);
  double worst = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const int dim = 1 + static_cast<int>(rng.next_unit() * 8.0);
    const double spread = std::exp(3.0 * rng.next_gaussian());
    const Vec x = random_x(rng, dim, spread);
    const double wn = norm2(x) * mallows_weight(x);
    worst = std::max(worst, wn);
    CHECK(wn <= std::sqrt(2.0));
  }
  CHECK(worst > 0.99 * std::sqrt(2.0));
}

TEST_CASE("mallows weight lies in (0,1] and decreases with covariate norm") {
  RngHandle rng(22, 0);
  for (int i = 0; i < 1000; ++i) {
    Vec x = random_x(rng, 4, 2.0);
    const double w = mallows_weight(x);
    CHECK(w > 0.0);
    CHECK(w <= 1.0);
    Vec bigger = x;
    scale(bigger, 1.5);
    CHECK(mallows_weight(bigger) <= w);
  }
}

TEST_CASE("huber rho and psi branch values") {
  CHECK(huber_rho(0.5, 1.345) == 0.125);
  CHECK(huber_psi(10.0, 1.345) == 1.345);
  CHECK(huber_psi(-10.0, 1.345) == -1.345);
  CHECK(huber_psi(0.3, 1.345) == 0.3);
  const double c = 1.345;
  CHECK(huber_rho(3.0, c) == doctest::Approx(c * 3.0 - c * c / 2.0).epsilon(1e-15));
}

TEST_CASE("huber psi is the derivative of huber rho") {
  RngHandle rng(23, 0);
  const double c = 1.345;
  const double h = 1e-6;
  for (int i = 0; i < 100; ++i) {
    const double z = 4.0 * rng.next_gaussian();
    const double fd = (huber_rho(z + h, c) - huber_rho(z - h, c)) / (2.0 * h);
    CHECK(std::abs(fd - huber_psi(z, c)) <= 1e-6);
  }
}

TEST_CASE("kappa_c matches the closed form of the truncated second moment") {
  for (double c : {0.5, 1.0, 1.345, 2.0, 3.0}) {
    CHECK(kappa_c(c) == doctest::Approx(kappa_closed_form(c)).epsilon(1e-9));
  }
}

TEST_CASE("kappa_c limits: 1 as c grows, c^2 as c vanishes") {
  CHECK(std::abs(kappa_c(20.0) - 1.0) < 1e-9);
  const double c = 1e-4;
  CHECK(kappa_c(c) / (c * c) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK_THROWS_AS(kappa_c(0.0), std::domain_error);
  CHECK_THROWS_AS(kappa_c(-1.0), std::domain_error);
}

TEST_CASE("kappa_c agrees with a 10^7-sample monte carlo estimate") {
  const double c = 1.345;
  const double c2 = c * c;
  RngHandle rng(24, 0);
  const int n = 10000000;
  double s = 0.0, ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.next_gaussian();
    const double v = std::min(z * z, c2);
    s += v;
    ss += v * v;
  }
  const double mean = s / n;
  const double se = std::sqrt((ss / n - mean * mean) / n);
  CHECK(std::abs(kappa_c(c) - mean) < 3.0 * se);
}

TEST_CASE("huber scale loss: zero residual costs kappa sigma / 2") {
  HuberScaleLoss loss(1);
  const double sigma = 1.7;
  const Vec theta{2.5, sigma};
  const LabeledExample ex{Vec{1.0}, 2.5};
  CHECK(loss.loss(theta, ex) ==
        doctest::Approx(loss.kappa() * sigma / 2.0).epsilon(1e-15));
  const Vec g = loss.gradient(theta, ex);
  CHECK(g[0] == 0.0);
  CHECK(g[1] == doctest::Approx(loss.kappa() / 2.0).epsilon(1e-15));
}

TEST_CASE("huber scale loss: quadratic branch value with unit weight") {
  HuberScaleLoss loss(1);
  const double sigma = 2.0;
  const double r = 1.5;  // r/sigma = 0.75 < c
  const Vec theta{1.0, sigma};
  const LabeledExample ex{Vec{1.0}, 1.0 + r};
  CHECK(loss.loss(theta, ex) ==
        doctest::Approx(r * r / (2.0 * sigma) + loss.kappa() * sigma / 2.0).epsilon(1e-14));
}

TEST_CASE("huber scale gradient: zero residual leaves only the scale score") {
  HuberScaleLoss loss(3);
  const Vec theta{1.0, -2.0, 0.5, 1.3};
  const Vec x{1.0, 2.0, -1.0};
  const double y = dot(Vec{1.0, -2.0, 0.5}, x);
  const Vec g = loss.gradient(theta, LabeledExample{x, y});
  const double w = mallows_weight(x);
  for (int j = 0; j < 3; ++j) CHECK(g[static_cast<std::size_t>(j)] == 0.0);
  CHECK(g[3] == doctest::Approx(loss.kappa() / 2.0 * w).epsilon(1e-14));
}

TEST_CASE("huber scale gradient matches finite differences away from the kinks") {
  HuberScaleLoss loss(4);
  RngHandle rng(25, 0);
  int tested = 0;
  while (tested < 100) {
    Vec theta(5);
    for (int j = 0; j < 4; ++j) theta[static_cast<std::size_t>(j)] = rng.next_gaussian();
    theta[4] = 0.5 + 2.0 * rng.next_unit();
    const Vec x = random_x(rng, 4, 1.5);
    LabeledExample ex{x, 0.0};
    ex.y = dot(Vec(theta.begin(), theta.begin() + 4), x) + 3.0 * rng.next_gaussian();
    const double u =
        (ex.y - dot(Vec(theta.begin(), theta.begin() + 4), x)) / theta[4];
    if (std::abs(std::abs(u) - loss.c()) < 1e-3) continue;
    check_gradient_fd(loss, theta, ex, 1e-6, 1e-5);
    ++tested;
  }
}

TEST_CASE("huber scale constants: published sensitivity below attainable bound") {
  HuberScaleLoss loss(5);
  const double c = loss.c();
  const double kappa = loss.kappa();
  CHECK(loss.noise_multiplier() ==
        doctest::Approx(std::sqrt(8.0 * c * c + c * c * c * c / 4.0) / 2.0).epsilon(1e-15));
  const double sup = std::max(kappa, c * c - kappa);
  CHECK(loss.grad_bound() ==
        doctest::Approx(std::sqrt(2.0 * c * c + sup * sup / 4.0)).epsilon(1e-15));
  CHECK(loss.noise_multiplier() < loss.grad_bound());
}

TEST_CASE("huber scale gradient norm never exceeds the certified bound") {
  HuberScaleLoss loss(3);
  RngHandle rng(26, 0);
  const double bound = loss.grad_bound();
  double worst = 0.0;
  for (int i = 0; i < 1000000; ++i) {
    Vec theta(4);
    for (int j = 0; j < 3; ++j) theta[static_cast<std::size_t>(j)] = 2.0 * rng.next_gaussian();
    theta[3] = 0.001 + 3.0 * rng.next_unit();
    // Mix moderate draws with covariates near the critical norm and
    // residuals far beyond the clamp.
    const double spread = (i % 3 == 0) ? 0.7 : std::exp(rng.next_gaussian());
    const Vec x = random_x(rng, 3, spread);
    double y = rng.next_gaussian();
    if (i % 2 == 0) y += 50.0 * rng.next_gaussian();
    const double gn = norm2(loss.gradient(theta, LabeledExample{x, y}));
    worst = std::max(worst, gn);
    CHECK(gn <= bound);
  }
  CHECK(worst > 0.95 * bound);
}

TEST_CASE("huber scale estimates the true error scale on a large sample") {
  const int x_dim = 3;
  HuberScaleLoss loss(x_dim);
  const Vec beta{1.0, -0.5, 2.0};
  const double sigma_true = 1.5;
  RngHandle rng(27, 0);
  const int n = 1000000;
  std::vector<LabeledExample> sample;
  sample.reserve(n);
  for (int i = 0; i < n; ++i) {
    const Vec x = random_x(rng, x_dim, 1.0);
    sample.push_back({x, dot(beta, x) + sigma_true * rng.next_gaussian()});
  }
  // The scale score is decreasing in sigma; bisect it to its root with the
  // true regression coefficients held fixed.
  auto score = [&](double sigma) {
    Vec theta = beta;
    theta.push_back(sigma);
    double s = 0.0;
    Vec g;
    for (const LabeledExample& ex : sample) {
      loss.gradient(theta, ex, g);
      s += g[static_cast<std::size_t>(x_dim)];
    }
    return s / n;
  };
  double lo = 0.5 * sigma_true, hi = 2.0 * sigma_true;
  REQUIRE(score(lo) < 0.0);
  REQUIRE(score(hi) > 0.0);
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    (score(mid) < 0.0 ? lo : hi) = mid;
  }
  CHECK(0.5 * (lo + hi) == doctest::Approx(sigma_true).epsilon(0.01));
}

TEST_CASE("huber scale projection enforces the sigma floor") {
  HuberScaleLoss loss(2);
  Vec theta{1.0, 2.0, -5.0};
  loss.project(theta);
  CHECK(theta[2] == loss.sigma_floor());
  Vec ok{1.0, 2.0, 0.7};
  loss.project(ok);
  CHECK(ok[2] == 0.7);
}

TEST_CASE("binary logistic: zero margin with unit weight costs ln 2") {
  BinaryLogisticLoss loss(2);
  const Vec theta{1.0, -1.0};
  const LabeledExample ex{Vec{1.0, 1.0}, 1.0};
  CHECK(loss.loss(theta, ex) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  const Vec g = loss.gradient(theta, ex);
  CHECK(g[0] == doctest::Approx(-0.5).epsilon(1e-15));
}

TEST_CASE("binary logistic gradient matches finite differences") {
  BinaryLogisticLoss loss(4);
  RngHandle rng(28, 0);
  for (int i = 0; i < 100; ++i) {
    Vec theta(4);
    for (double& v : theta) v = rng.next_gaussian();
    const Vec x = random_x(rng, 4, 2.0);
    const double y = rng.next_unit() < 0.5 ? 0.0 : 1.0;
    check_gradient_fd(loss, theta, LabeledExample{x, y}, 1e-6, 1e-6);
  }
}

TEST_CASE("binary logistic gradient norm never exceeds sqrt(2)") {
  BinaryLogisticLoss loss(3);
  RngHandle rng(29, 0);
  const double bound = std::sqrt(2.0);
  CHECK(loss.grad_bound() == bound);
  double worst = 0.0;
  for (int i = 0; i < 1000000; ++i) {
    Vec theta(3);
    const double scale_t = (i % 2 == 0) ? 20.0 : 1.0;
    for (double& v : theta) v = scale_t * rng.next_gaussian();
    const double spread = (i % 3 == 0) ? 0.7 : std::exp(rng.next_gaussian());
    const Vec x = random_x(rng, 3, spread);
    const double y = rng.next_unit() < 0.5 ? 0.0 : 1.0;
    const double gn = norm2(loss.gradient(theta, LabeledExample{x, y}));
    worst = std::max(worst, gn);
    CHECK(gn <= bound);
  }
  CHECK(worst > 0.95 * bound);
}

TEST_CASE("binary logistic validates labels and exposes no bound unweighted") {
  BinaryLogisticLoss weighted(2);
  CHECK_THROWS_AS(weighted.loss(Vec{0.0, 0.0}, LabeledExample{Vec{1.0, 0.0}, 0.5}),
                  data_error);
  BinaryLogisticLoss unweighted(2, false);
  CHECK(std::isinf(unweighted.grad_bound()));
  // Unweighted gradients can exceed sqrt(2) on heavy covariates.
  const Vec theta{5.0, 5.0};
  const Vec x{1.0, 10.0};
  CHECK(norm2(unweighted.gradient(theta, LabeledExample{x, 0.0})) > std::sqrt(2.0));
}

TEST_CASE("multinomial with uniform logits costs ln K times the weight") {
  MultinomialLogisticLoss loss(3, 2);
  const Vec theta = zeros(6);
  const Vec x{1.0, 3.0};
  const double w = mallows_weight(x);
  for (double y : {0.0, 1.0, 2.0}) {
    CHECK(loss.loss(theta, LabeledExample{x, y}) ==
          doctest::Approx(std::log(3.0) * w).epsilon(1e-14));
  }
}

TEST_CASE("multinomial with two classes reduces to binary logistic") {
  const int p = 3;
  BinaryLogisticLoss binary(p);
  MultinomialLogisticLoss multi(2, p);
  RngHandle rng(30, 0);
  for (int i = 0; i < 100; ++i) {
    Vec theta_b(static_cast<std::size_t>(p));
    for (double& v : theta_b) v = rng.next_gaussian();
    // Class-0 row zero, class-1 row equal to the binary parameter.
    Vec theta_m = zeros(static_cast<std::size_t>(2 * p));
    for (int j = 0; j < p; ++j) theta_m[static_cast<std::size_t>(p + j)] = theta_b[static_cast<std::size_t>(j)];
    const Vec x = random_x(rng, p, 1.5);
    const double y = rng.next_unit() < 0.5 ? 0.0 : 1.0;
    const LabeledExample ex{x, y};
    CHECK(multi.loss(theta_m, ex) == doctest::Approx(binary.loss(theta_b, ex)).epsilon(1e-10));
    const Vec gb = binary.gradient(theta_b, ex);
    const Vec gm = multi.gradient(theta_m, ex);
    for (int j = 0; j < p; ++j) {
      CHECK(gm[static_cast<std::size_t>(p + j)] ==
            doctest::Approx(gb[static_cast<std::size_t>(j)]).epsilon(1e-10));
      CHECK(gm[static_cast<std::size_t>(j)] ==
            doctest::Approx(-gb[static_cast<std::size_t>(j)]).epsilon(1e-10));
    }
  }
}

TEST_CASE("multinomial gradient matches finite differences") {
  MultinomialLogisticLoss loss(3, 3);
  RngHandle rng(31, 0);
  for (int i = 0; i < 100; ++i) {
    Vec theta(9);
    for (double& v : theta) v = rng.next_gaussian();
    const Vec x = random_x(rng, 3, 2.0);
    const double y = static_cast<double>(static_cast<int>(rng.next_unit() * 3.0));
    check_gradient_fd(loss, theta, LabeledExample{x, y}, 1e-6, 1e-6);
  }
}

TEST_CASE("multinomial gradient norm never exceeds 2") {
  MultinomialLogisticLoss loss(4, 3);
  RngHandle rng(32, 0);
  double worst = 0.0;
  for (int i = 0; i < 1000000; ++i) {
    Vec theta(12);
    const double scale_t = (i % 2 == 0) ? 15.0 : 1.0;
    for (double& v : theta) v = scale_t * rng.next_gaussian();
    const double spread = (i % 3 == 0) ? 0.7 : std::exp(rng.next_gaussian());
    const Vec x = random_x(rng, 3, spread);
    const double y = static_cast<double>(static_cast<int>(rng.next_unit() * 4.0));
    const double gn = norm2(loss.gradient(theta, LabeledExample{x, y}));
    worst = std::max(worst, gn);
    CHECK(gn <= 2.0);
  }
  CHECK(worst > 1.9);
}

TEST_CASE("multinomial prediction breaks ties toward the lowest class") {
  MultinomialLogisticLoss loss(3, 2);
  CHECK(loss.predict(zeros(6), Vec{1.0, 0.5}) == 0);
  Vec theta = zeros(6);
  theta[4] = 1.0;  // class 2 favored on the intercept
  CHECK(loss.predict(theta, Vec{1.0, 0.0}) == 2);
}

TEST_CASE("multinomial rejects malformed labels") {
  MultinomialLogisticLoss loss(3, 2);
  const Vec theta = zeros(6);
  CHECK_THROWS_AS(loss.loss(theta, LabeledExample{Vec{1.0, 0.0}, 3.0}), data_error);
  CHECK_THROWS_AS(loss.loss(theta, LabeledExample{Vec{1.0, 0.0}, -1.0}), data_error);
  CHECK_THROWS_AS(loss.loss(theta, LabeledExample{Vec{1.0, 0.0}, 1.5}), data_error);
  CHECK(std::isfinite(loss.loss(Vec{0, 0, 0, 0, 500.0, 500.0}, LabeledExample{Vec{1.0, 1.0}, 0.0})));
}

TEST_CASE("clip_gradient preserves short vectors and rescales long ones") {
  const Vec g{3.0, 4.0};
  CHECK(clip_gradient(g, 10.0) == g);
  const Vec clipped = clip_gradient(g, 2.5);
  CHECK(norm2(clipped) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(clipped[0] / clipped[1] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(clip_gradient(zeros(3), 1.0) == zeros(3));
}

TEST_CASE("clipped loss caps the inner gradient norm at the clip level") {
  const auto inner = std::make_shared<BinaryLogisticLoss>(3, false);
  ClippedLoss clipped(inner, 1.5);
  CHECK(clipped.grad_bound() == 1.5);
  CHECK(clipped.noise_multiplier() == 1.5);
  RngHandle rng(33, 0);
  for (int i = 0; i < 10000; ++i) {
    Vec theta(3);
    for (double& v : theta) v = 3.0 * rng.next_gaussian();
    const Vec x = random_x(rng, 3, 4.0);
    const double y = rng.next_unit() < 0.5 ? 0.0 : 1.0;
    const LabeledExample ex{x, y};
    const Vec g = clipped.gradient(theta, ex);
    CHECK(norm2(g) <= 1.5 * (1.0 + 1e-12));
    const Vec raw = inner->gradient(theta, ex);
    if (norm2(raw) <= 1.5) CHECK(g == raw);
    CHECK(clipped.loss(theta, ex) == inner->loss(theta, ex));
  }
}

TEST_CASE("clipped loss validates its construction and delegates projection") {
  CHECK_THROWS_AS(ClippedLoss(nullptr, 1.0), config_error);
  CHECK_THROWS_AS(ClippedLoss(std::make_shared<BinaryLogisticLoss>(2), 0.0), config_error);
  ClippedLoss wrapped(std::make_shared<HuberScaleLoss>(2), 1.0);
  Vec theta{0.0, 0.0, -1.0};
  wrapped.project(theta);
  CHECK(theta[2] == 1e-3);
}
