// Copyright 2026 The sfl-lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Exhaustive validation oracles. They evaluate objectives through the latency
// and convergence modules directly and share no code with the solvers.

#ifndef SFL_ORACLE_H_
#define SFL_ORACLE_H_

#include <cstdint>
#include <vector>

#include "sfl/convergence.h"
#include "sfl/latency.h"

namespace sfl {

inline constexpr double kMaxOracleGrid = 1e7;

struct JointOptimum {
  Decision decision;
  double theta = 0.0;
  std::int64_t evaluated = 0;
};

// Global optimum of the time-to-convergence objective over cuts in [1, L]
// and batches in [1, max_batch]. Ties go to the lexicographically smallest
// (cuts, batch). Throws Error(kGridTooLarge) when (max_batch L)^N exceeds
// kMaxOracleGrid and Error(kInfeasible) when nothing is feasible.
JointOptimum brute_force_joint(const Scenario& scenario, int max_batch);

struct CutOptimum {
  std::vector<int> cuts;
  double objective = 0.0;
  std::int64_t evaluated = 0;
};

// Minimizes the linearized objective at tight auxiliaries over all L^N cut
// assignments for fixed batch sizes.
CutOptimum enumerate_cuts(const Scenario& scenario,
                          const std::vector<int>& batch);

struct BatchOptimum {
  std::vector<int> batch;
  double objective = 0.0;
};

// Minimizes theta(b) over the box [1, upper_i] for a batch subproblem given
// as (scale, A, B, C_i, D); the box bounds are inclusive.
BatchOptimum enumerate_batches(double scale, double a, double b,
                               const std::vector<double>& server_cost,
                               double fixed_latency,
                               const std::vector<int>& upper);

}  // namespace sfl

#endif  // SFL_ORACLE_H_
