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

// Times the replication loop of one experiment cell with the serial runner
// and with the OpenMP runner, and checks that both produce identical output.

#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "ldpsgd/experiments.hpp"

using namespace ldpsgd;

namespace {

CellParams bench_cell(std::int64_t n, int replications) {
  const SyntheticDesign design = SyntheticDesign::linear_huber(5, n);
  CellParams cell;
  cell.cell_id = "bench";
  cell.design = design;
  cell.loss = std::make_shared<HuberScaleLoss>(design.d + 1, 1.345);
  cell.mech = MechKind::kGdp;
  cell.budgets = std::make_shared<FixedBudget>(PrivacyBudget::gdp(2.0));
  cell.budget_label = "mu2";
  cell.schedule = {0.2, 0.5};
  cell.n = n;
  cell.replications = replications;
  cell.checkpoints = geometric_grid(10, n, 5);
  cell.holdout = 1000;
  cell.theta0 = zeros(static_cast<std::size_t>(cell.loss->param_dim()));
  cell.theta_star = design_optimum(design);
  cell.alpha = 0.5;
  return cell;
}

double time_run(const CellParams& cell, ExecMode mode, CellResult& out) {
  const auto start = std::chrono::steady_clock::now();
  out = run_cell(cell, 7, mode, 0);
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(stop - start).count();
}

}  // namespace

int main(int argc, char** argv) {
  std::int64_t n = 50000;
  int replications = 16;
  if (argc > 1) n = std::atoll(argv[1]);
  if (argc > 2) replications = std::atoi(argv[2]);

  const CellParams cell = bench_cell(n, replications);
  std::printf("cell: d=%d n=%lld replications=%d\n", cell.design.d,
              static_cast<long long>(n), replications);

  CellResult serial, parallel;
  const double t_serial = time_run(cell, ExecMode::kSerial, serial);
  std::printf("serial: %8.3f s  (%.2f Ms steps/s)\n", t_serial,
              1e-6 * static_cast<double>(n) * replications / t_serial);
  const double t_parallel = time_run(cell, ExecMode::kOpenMp, parallel);
  std::printf("openmp: %8.3f s  (%.2f Ms steps/s)  speedup %.2fx\n", t_parallel,
              1e-6 * static_cast<double>(n) * replications / t_parallel,
              t_serial / t_parallel);

  bool identical = serial.final_dist == parallel.final_dist &&
                   serial.final_dist_bar == parallel.final_dist_bar &&
                   serial.trajectory.theta_dist == parallel.trajectory.theta_dist &&
                   serial.trajectory.theta_bar_dist == parallel.trajectory.theta_bar_dist;
  std::printf("serial and openmp results identical: %s\n", identical ? "yes" : "NO");
  return identical ? 0 : 1;
}
