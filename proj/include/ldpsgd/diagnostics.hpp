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
#include <vector>

#include "ldpsgd/losses.hpp"
#include "ldpsgd/optimizer.hpp"
#include "ldpsgd/vec.hpp"

namespace ldpsgd {

/**
 * Replication-averaged trajectory: at each checkpoint n, the mean over
 * replications of the squared parameter distance for the iterate and its
 * running average, and of the holdout loss gap for both, each with its
 * Monte-Carlo standard error.
 */
struct Trajectory {
  std::vector<std::int64_t> checkpoints;
  Vec theta_dist;
  Vec theta_dist_se;
  Vec theta_bar_dist;
  Vec theta_bar_dist_se;
  Vec loss_gap;
  Vec loss_gap_se;
  Vec loss_gap_bar;
  Vec loss_gap_bar_se;
  int replications = 0;
  std::vector<std::string> warnings;
};

// Log-log least-squares fit over a checkpoint window.
struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::int64_t n_lo = 0;
  std::int64_t n_hi = 0;
  int points = 0;
};

// Squared Euclidean distance between an estimate and the optimum.
double param_distance(const Vec& theta, const Vec& theta_star);

// Mean per-example loss over a fixed sample.
double mean_loss(const BoundedLoss& loss, const Vec& theta,
                 const std::vector<LabeledExample>& sample);

// Holdout estimate of F(theta) - F(theta_star).
double loss_gap(const Vec& theta, const Vec& theta_star, const BoundedLoss& loss,
                const std::vector<LabeledExample>& holdout);

// Folds replicated traces (identical checkpoint grids) into a Trajectory;
// a loss-gap mean below -3 standard errors is appended to warnings rather
// than rejected, since the holdout estimate is itself noisy.
Trajectory aggregate_traces(const std::vector<RunTrace>& traces, const Vec& theta_star,
                            const BoundedLoss& loss,
                            const std::vector<LabeledExample>& holdout);

// OLS of ln v on ln n restricted to checkpoints with n_lo <= n <= n_hi.
// Needs at least 5 such checkpoints and positive values throughout the
// window; a constant series fits slope 0 exactly.
RateFit estimate_rate(const std::vector<std::int64_t>& checkpoints, const Vec& values,
                      std::int64_t n_lo, std::int64_t n_hi);

// estimate_rate over the final decade [n_max / 10, n_max].
RateFit fit_tail_rate(const std::vector<std::int64_t>& checkpoints, const Vec& values);

// Slope of ln(numerator / denominator) on ln n over the window: the
// empirical exponent by which the denominator series outpaces the
// numerator's decay.
double relative_order(const std::vector<std::int64_t>& checkpoints, const Vec& numerator,
                      const Vec& denominator, std::int64_t n_lo, std::int64_t n_hi);

// True when the series never rises by more than 3 pooled standard errors
// between consecutive checkpoints with n >= n_lo.
bool tail_nonincreasing(const std::vector<std::int64_t>& checkpoints, const Vec& values,
                        const Vec& ses, std::int64_t n_lo);

// Asymptotic decay exponents (series ~ n^{-exponent}) as functions of the
// step-size decay alpha: squared parameter distance of the iterate and of
// the running average on alpha in (0,1), and the loss gaps on [1/3, 1).
double dist_decay_exponent(double alpha);
double dist_bar_decay_exponent(double alpha);
double gap_decay_exponent(double alpha);
double gap_bar_decay_exponent(double alpha);

// Exponent gaps between the averaged and unaveraged series implied by the
// decay exponents above.
double relative_order_dist(double alpha);
double relative_order_gap(double alpha);

// Nine-column trajectory CSV:
// n,delta,delta_se,delta_bar,delta_bar_se,gap,gap_se,gap_bar,gap_bar_se.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
void write_trajectory_csv(const std::string& path, const Trajectory& traj);

}  // namespace ldpsgd
