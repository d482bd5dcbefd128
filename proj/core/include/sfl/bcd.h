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

#ifndef SFL_BCD_H_
#define SFL_BCD_H_

#include <optional>
#include <vector>

#include "sfl/batch_size.h"
#include "sfl/convergence.h"
#include "sfl/latency.h"
#include "sfl/split_point.h"

namespace sfl {

struct BcdOptions {
  // Stop when consecutive objective values differ by at most this (seconds).
  double tol = 1e-6;
  int max_iters = 50;
  int max_batch = 64;
  BsMode bs_mode = BsMode::kAuto;
  DinkelbachOptions dinkelbach;
};

struct BcdIteration {
  int iteration = 0;
  Decision decision;
  double objective_after_bs = 0.0;  // before the cut block re-tightens T
  double objective = 0.0;
  int dinkelbach_iters = 0;
};

struct BcdRun {
  Decision start;
  Decision decision;
  double objective = 0.0;
  std::vector<BcdIteration> trace;
  bool converged = false;
};

struct BcdResult {
  Decision decision;
  double theta = 0.0;
  AuxiliaryT aux;
  std::vector<BcdRun> runs;
  int best_run = 0;
};

// Memory fit, cut range, 1 <= b_i <= max_batch and positive denominator.
bool is_feasible(const Scenario& scenario, const Decision& decision,
                 int max_batch);

// One alternating run from `init`: batch block, then cut block, until the
// objective changes by at most tol. Throws Error(kInfeasible) when `init` is
// not feasible.
BcdRun bcd_run(const Scenario& scenario, const Decision& init,
               const BcdOptions& options = {});

// Starting points tried when no initial decision is given: homogeneous cuts
// crossed with a ladder of uniform batch sizes, clipped per device to the
// memory cap, plus the all-shallow maximal-batch point.
std::vector<Decision> bcd_starts(const Scenario& scenario, int max_batch);

// With `init`, a single run. Without, the best run over bcd_starts() (ties
// to the lexicographically smallest decision). Throws Error(kInfeasible)
// when no feasible decision exists.
BcdResult bcd_optimize(const Scenario& scenario, const BcdOptions& options = {},
                       const std::optional<Decision>& init = std::nullopt);

// Same search with the cut block frozen at `cuts`: alternates the batch block
// with re-tightened auxiliaries.
BcdResult optimize_batch_for_cuts(const Scenario& scenario,
                                  const std::vector<int>& cuts,
                                  const BcdOptions& options = {});

}  // namespace sfl

#endif  // SFL_BCD_H_
