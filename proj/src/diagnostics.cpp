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

#include "ldpsgd/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "ldpsgd/errors.hpp"
#include "ldpsgd/textio.hpp"

namespace ldpsgd {

namespace {

// Mean and standard error of the mean; SE is 0 for a single value.
struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const Vec& v) {
  MeanSe out;
  const std::size_t n = v.size();
  for (double x : v) out.mean += x;
  out.mean /= static_cast<double>(n);
  if (n > 1) {
    double ss = 0.0;
    for (double x : v) {
      const double c = x - out.mean;
      ss += c * c;
    }
    out.se = std::sqrt(ss / (static_cast<double>(n - 1) * static_cast<double>(n)));
  }
  return out;
}

}  // namespace

double param_distance(const Vec& theta, const Vec& theta_star) {
  require_dim(theta.size(), theta_star.size(), "param_distance");
  double s = 0.0;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const double c = theta[k] - theta_star[k];
    s += c * c;
  }
  return s;
}

double mean_loss(const BoundedLoss& loss, const Vec& theta,
                 const std::vector<LabeledExample>& sample) {
  if (sample.empty()) {
    throw config_error("mean_loss: sample must be nonempty");
  }
  double s = 0.0;
  for (const LabeledExample& ex : sample) {
    s += loss.loss(theta, ex);
  }
  return s / static_cast<double>(sample.size());
}

double loss_gap(const Vec& theta, const Vec& theta_star, const BoundedLoss& loss,
                const std::vector<LabeledExample>& holdout) {
  return mean_loss(loss, theta, holdout) - mean_loss(loss, theta_star, holdout);
}

Trajectory aggregate_traces(const std::vector<RunTrace>& traces, const Vec& theta_star,
                            const BoundedLoss& loss,
                            const std::vector<LabeledExample>& holdout) {
  if (traces.empty()) {
    throw config_error("aggregate_traces: need at least one trace");
  }
  const std::size_t cps = traces.front().checkpoints.size();
  if (cps == 0) {
    throw config_error("aggregate_traces: traces carry no checkpoints");
  }
  Trajectory traj;
  traj.replications = static_cast<int>(traces.size());
  traj.checkpoints.reserve(cps);
  for (std::size_t k = 0; k < cps; ++k) {
    const std::int64_t n = traces.front().checkpoints[k].n;
    if (k > 0 && n <= traj.checkpoints.back()) {
      throw config_error("aggregate_traces: checkpoints must be strictly increasing");
    }
    traj.checkpoints.push_back(n);
  }
  for (const RunTrace& trace : traces) {
    if (trace.checkpoints.size() != cps) {
      throw config_error("aggregate_traces: traces disagree on the checkpoint grid");
    }
    for (std::size_t k = 0; k < cps; ++k) {
      if (trace.checkpoints[k].n != traj.checkpoints[k]) {
        throw config_error("aggregate_traces: traces disagree on the checkpoint grid");
      }
    }
  }

  const double f_star = mean_loss(loss, theta_star, holdout);
  const std::size_t r = traces.size();
  Vec dist(r), dist_bar(r), gap(r), gap_bar(r);
  for (std::size_t k = 0; k < cps; ++k) {
    for (std::size_t j = 0; j < r; ++j) {
      const CheckpointRow& row = traces[j].checkpoints[k];
      dist[j] = param_distance(row.theta, theta_star);
      dist_bar[j] = param_distance(row.theta_bar, theta_star);
      gap[j] = mean_loss(loss, row.theta, holdout) - f_star;
      gap_bar[j] = mean_loss(loss, row.theta_bar, holdout) - f_star;
    }
    const MeanSe d = mean_se(dist);
    const MeanSe db = mean_se(dist_bar);
    const MeanSe g = mean_se(gap);
    const MeanSe gb = mean_se(gap_bar);
    traj.theta_dist.push_back(d.mean);
    traj.theta_dist_se.push_back(d.se);
    traj.theta_bar_dist.push_back(db.mean);
    traj.theta_bar_dist_se.push_back(db.se);
    traj.loss_gap.push_back(g.mean);
    traj.loss_gap_se.push_back(g.se);
    traj.loss_gap_bar.push_back(gb.mean);
    traj.loss_gap_bar_se.push_back(gb.se);
    if (g.mean < -3.0 * g.se) {
      traj.warnings.push_back("loss gap below -3 standard errors at n=" +
                              std::to_string(traj.checkpoints[k]));
    }
    if (gb.mean < -3.0 * gb.se) {
      traj.warnings.push_back("averaged loss gap below -3 standard errors at n=" +
                              std::to_string(traj.checkpoints[k]));
    }
  }
  return traj;
}

RateFit estimate_rate(const std::vector<std::int64_t>& checkpoints, const Vec& values,
                      std::int64_t n_lo, std::int64_t n_hi) {
  require_dim(checkpoints.size(), values.size(), "estimate_rate");
  if (n_lo > n_hi) {
    throw config_error("estimate_rate: window must satisfy n_lo <= n_hi");
  }
  Vec lx, ly;
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    if (checkpoints[k] < n_lo || checkpoints[k] > n_hi) continue;
    if (!(values[k] > 0.0)) {
      throw std::domain_error("estimate_rate: values in the window must be > 0");
    }
    lx.push_back(std::log(static_cast<double>(checkpoints[k])));
    ly.push_back(std::log(values[k]));
  }
  if (lx.size() < 5) {
    throw config_error("estimate_rate: need at least 5 checkpoints in the window");
  }
  const std::size_t m = lx.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    mx += lx[k];
    my += ly[k];
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double cx = lx[k] - mx;
    const double cy = ly[k] - my;
    sxx += cx * cx;
    sxy += cx * cy;
    syy += cy * cy;
  }
  if (!(sxx > 0.0)) {
    throw config_error("estimate_rate: window collapses to a single abscissa");
  }
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double e = ly[k] - (fit.intercept + fit.slope * lx[k]);
    ssr += e * e;
  }
  fit.r2 = syy > 0.0 ? std::max(0.0, 1.0 - ssr / syy) : 1.0;
  fit.n_lo = n_lo;
  fit.n_hi = n_hi;
  fit.points = static_cast<int>(m);
  return fit;
}

RateFit fit_tail_rate(const std::vector<std::int64_t>& checkpoints, const Vec& values) {
  if (checkpoints.empty()) {
    throw config_error("fit_tail_rate: no checkpoints");
  }
  const std::int64_t n_hi = checkpoints.back();
  return estimate_rate(checkpoints, values, n_hi / 10, n_hi);
}

double relative_order(const std::vector<std::int64_t>& checkpoints, const Vec& numerator,
                      const Vec& denominator, std::int64_t n_lo, std::int64_t n_hi) {
  require_dim(numerator.size(), denominator.size(), "relative_order");
  Vec ratio(numerator.size());
  for (std::size_t k = 0; k < ratio.size(); ++k) {
    if (!(denominator[k] > 0.0)) {
      throw std::domain_error("relative_order: denominator values must be > 0");
    }
    ratio[k] = numerator[k] / denominator[k];
  }
  return estimate_rate(checkpoints, ratio, n_lo, n_hi).slope;
}

bool tail_nonincreasing(const std::vector<std::int64_t>& checkpoints, const Vec& values,
                        const Vec& ses, std::int64_t n_lo) {
  require_dim(checkpoints.size(), values.size(), "tail_nonincreasing");
  require_dim(checkpoints.size(), ses.size(), "tail_nonincreasing");
  for (std::size_t k = 0; k + 1 < checkpoints.size(); ++k) {
    if (checkpoints[k] < n_lo) continue;
    const double pooled = std::sqrt(ses[k] * ses[k] + ses[k + 1] * ses[k + 1]);
    if (values[k + 1] - values[k] > 3.0 * pooled) {
      return false;
    }
  }
  return true;
}

double dist_decay_exponent(double alpha) {
  if (!(alpha > 0.0) || !(alpha < 1.0)) {
    throw std::domain_error("dist_decay_exponent: alpha must lie in (0, 1)");
  }
  return alpha;
}

double dist_bar_decay_exponent(double alpha) {
  if (!(alpha > 0.0) || !(alpha < 1.0)) {
    throw std::domain_error("dist_bar_decay_exponent: alpha must lie in (0, 1)");
  }
  return std::min(2.0 * alpha, 1.0);
}

double gap_decay_exponent(double alpha) {
  if (!(alpha >= 1.0 / 3.0) || !(alpha < 1.0)) {
    throw std::domain_error("gap_decay_exponent: alpha must lie in [1/3, 1)");
  }
  if (alpha <= 0.5) return 0.5 * (3.0 * alpha - 1.0);
  if (alpha <= 2.0 / 3.0) return 0.5 * alpha;
  return 1.0 - alpha;
}

double gap_bar_decay_exponent(double alpha) {
  if (!(alpha >= 1.0 / 3.0) || !(alpha < 1.0)) {
    throw std::domain_error("gap_bar_decay_exponent: alpha must lie in [1/3, 1)");
  }
  return alpha <= 0.5 ? alpha : 1.0 - alpha;
}

double relative_order_dist(double alpha) {
  return dist_bar_decay_exponent(alpha) - dist_decay_exponent(alpha);
}

double relative_order_gap(double alpha) {
  return gap_bar_decay_exponent(alpha) - gap_decay_exponent(alpha);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << "n,delta,delta_se,delta_bar,delta_bar_se,gap,gap_se,gap_bar,gap_bar_se\n";
  for (std::size_t k = 0; k < traj.checkpoints.size(); ++k) {
    out << traj.checkpoints[k] << ',' << g17(traj.theta_dist[k]) << ','
        << g17(traj.theta_dist_se[k]) << ',' << g17(traj.theta_bar_dist[k]) << ','
        << g17(traj.theta_bar_dist_se[k]) << ',' << g17(traj.loss_gap[k]) << ','
        << g17(traj.loss_gap_se[k]) << ',' << g17(traj.loss_gap_bar[k]) << ','
        << g17(traj.loss_gap_bar_se[k]) << '\n';
  }
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) {
    throw data_error("write_trajectory_csv: cannot open " + path + " for writing");
  }
  write_trajectory_csv(out, traj);
}

}  // namespace ldpsgd
