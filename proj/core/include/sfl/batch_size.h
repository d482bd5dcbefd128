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

// Batch-size block of the alternating optimizer. With cuts and auxiliary
// bounds fixed the objective reduces to
//
//   theta(b) = scale * (sum_i b_i C_i + D) / (A - sum_i B / b_i)
//
// whose stationary point is found coordinate-wise (Newton steps in Jacobi
// sweeps) and then rounded to integers with the three-case rule: 1 when the
// stationary value is at most 1, the cap when it is at least the cap, and the
// better neighbour in between.

#ifndef SFL_BATCH_SIZE_H_
#define SFL_BATCH_SIZE_H_

#include <limits>
#include <vector>

#include "sfl/convergence.h"
#include "sfl/profiles.h"

namespace sfl {

struct BsSubproblem {
  double scale = 0.0;  // 2 * loss_gap / lr
  double a = 0.0;      // eps - 1{I>1} 4 beta^2 gamma^2 I^2 T1
  double b = 0.0;      // (beta gamma / N^2) sum_j sigma_j^2
  std::vector<double> server_cost;  // C_i, seconds per sample on the server
  double fixed_latency = 0.0;       // D = T3 + T4 + (T5 + T6) / I
  // Real-valued caps from memory, the T3/T4 stage bounds and max_batch.
  std::vector<double> kappa;
  // Largest integer batch meeting every cap; floor(kappa_i) up to the
  // strictness of the memory constraint.
  std::vector<int> cap;

  int num_devices() const { return static_cast<int>(server_cost.size()); }
};

BsSubproblem make_bs_subproblem(const Scenario& scenario,
                                const std::vector<int>& cuts,
                                const AuxiliaryT& aux, int max_batch);

// theta(b); +infinity when the denominator is not positive.
double bs_objective(const BsSubproblem& sub, const std::vector<double>& batch);
double bs_objective(const BsSubproblem& sub, const std::vector<int>& batch);

// Stationarity function Xi_i(b): the sign of d theta / d b_i.
double stationarity(const BsSubproblem& sub, const std::vector<double>& batch,
                    int device);

inline constexpr double kUnboundedBatch =
    std::numeric_limits<double>::infinity();

struct NewtonJacobiOptions {
  double tol = 1e-9;
  int max_sweeps = 200;
  double damping = 0.5;
};

struct NewtonJacobiResult {
  // Stationary batch sizes; kUnboundedBatch for devices with C_i = 0, whose
  // objective decreases in b_i everywhere.
  std::vector<double> roots;
  int sweeps = 0;
  double residual = 0.0;
  int bisection_fallbacks = 0;
};

// Solves Xi_i(b) = 0 for every device with C_i > 0. `init` may be empty, in
// which case b_i = clamp(sqrt(B D / (A C_i)), 1, kappa_i). Throws
// Error(kNonConvergence) after max_sweeps and Error(kInfeasible) when no
// feasible start (A > sum B / b) can be found.
NewtonJacobiResult newton_jacobi_roots(const BsSubproblem& sub,
                                       std::vector<double> init = {},
                                       const NewtonJacobiOptions& options = {});

enum class BsMode {
  kExact,      // every combination of per-device candidates
  kPerDevice,  // three-case rule with a single correction pass
  kAuto,       // exact while the candidate product stays small
};

// Per-device candidate set {1, floor(b^), ceil(b^), cap} restricted to
// [1, cap], ascending.
std::vector<int> batch_candidates(double stationary, int cap);

// The three-case assignment for one device; kMiddle means the choice between
// floor and ceil is left to the objective.
enum class BsCase { kLower, kMiddle, kUpper };
BsCase classify_stationary(double stationary, double kappa);

struct BsSolution {
  std::vector<int> batch;
  std::vector<double> stationary;
  std::vector<BsCase> cases;
  // Continuous optimum on the box [1, kappa]: out-of-box devices pinned to
  // the violated bound, the rest re-solved with the pinned ones held fixed.
  std::vector<double> box_stationary;
  double objective = 0.0;
  bool exact = false;
};

BsSolution solve_bs(const BsSubproblem& sub, BsMode mode = BsMode::kAuto,
                    const NewtonJacobiOptions& nj = {});

// Convenience overload building the subproblem. Throws Error(kInfeasible)
// when some cap is below 1 or no candidate has a positive denominator.
BsSolution solve_bs(const Scenario& scenario, const std::vector<int>& cuts,
                    const AuxiliaryT& aux, int max_batch,
                    BsMode mode = BsMode::kAuto);

}  // namespace sfl

#endif  // SFL_BATCH_SIZE_H_
