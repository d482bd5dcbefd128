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

// Cut-layer block of the alternating optimizer. With batch sizes fixed the
// linearized objective is a ratio Num(c) / Den(c) over per-device cut
// assignments. Dinkelbach's method reduces it to a sequence of parametric
// problems min_c Num(c) - lambda Den(c), each solved exactly by depth-first
// branch and bound over devices.

#ifndef SFL_SPLIT_POINT_H_
#define SFL_SPLIT_POINT_H_

#include <cstdint>
#include <vector>

#include "sfl/convergence.h"
#include "sfl/profiles.h"

namespace sfl {

// Relative tolerance under which two objective values count as tied; ties go
// to the lexicographically smallest decision.
inline constexpr double kTieRelTol = 1e-12;

// Per-device cut tables for a fixed batch vector. Cuts violating the memory
// constraint, or whose moment alone makes the denominator non-positive, are
// excluded up front; any combination of the remaining cuts is feasible.
class SplitProblem {
 public:
  SplitProblem(const Scenario& scenario, const std::vector<int>& batch);

  int num_devices() const { return num_devices_; }
  int num_layers() const { return num_layers_; }
  // Allowed cuts of a device, ascending.
  const std::vector<int>& allowed_cuts(int device) const {
    return devices_[device].cuts;
  }
  bool feasible() const;

  double numerator(const std::vector<int>& cuts) const;
  double denominator(const std::vector<int>& cuts) const;
  double ratio(const std::vector<int>& cuts) const;
  // Num(c) - lambda Den(c).
  double parametric_value(const std::vector<int>& cuts, double lambda) const;

  // Admissible lower bound on parametric_value over every completion of the
  // first partial.size() devices.
  double lower_bound(const std::vector<int>& partial, double lambda) const;

  // A feasible assignment: every device takes its individually cheapest cut.
  std::vector<int> greedy_cuts() const;
  bool allowed(const std::vector<int>& cuts) const;

 private:
  struct CutEntry {
    int cut = 0;
    double server = 0.0;   // server FP + BP seconds for this device
    double fp_up = 0.0;    // client FP + activation upload
    double down_bp = 0.0;  // gradient download + client BP
    double moment = 0.0;   // G~^2(c)
    double params = 0.0;   // delta(c)
    double agg_up = 0.0;   // delta(c) / r_up_fed
    double agg_down = 0.0; // delta(c) / r_down_fed
  };
  struct DeviceTable {
    std::vector<int> cuts;
    std::vector<CutEntry> entries;  // indexed by cut - 1, valid for all cuts
    double min_server = 0.0;
  };

  friend class SplitSearch;

  const CutEntry& entry(int device, int cut) const {
    return devices_[device].entries[cut - 1];
  }

  int num_devices_ = 0;
  int num_layers_ = 0;
  double num_scale_ = 0.0;   // 2 * loss_gap
  double lr_ = 0.0;
  double den_base_ = 0.0;    // eps - variance(b)
  double drift_coef_ = 0.0;  // 1{I>1} 4 beta^2 gamma^2 I^2
  double inv_interval_ = 0.0;
  double server_up_rate_ = 0.0;
  double server_down_rate_ = 0.0;
  std::vector<DeviceTable> devices_;
};

struct InnerSolution {
  std::vector<int> cuts;
  double value = 0.0;
  std::int64_t nodes = 0;
};

// Exact minimizer of Num(c) - lambda Den(c) (lambda >= 0). When
// lexicographic is set, returns the lexicographically smallest assignment
// within kTieRelTol of the minimum. `incumbent` seeds the search when
// non-empty. Throws Error(kInfeasible) when some device has no allowed cut.
InnerSolution inner_parametric_solve(const SplitProblem& problem, double lambda,
                                     bool lexicographic = true,
                                     const std::vector<int>& incumbent = {});

struct DinkelbachOptions {
  double tol = 1e-9;  // on |F(lambda)| relative to the numerator scale
  int max_iters = 100;
};

struct DinkelbachStep {
  double lambda = 0.0;
  double f_value = 0.0;
  double f_relative = 0.0;
  std::int64_t nodes = 0;
};

struct MsSolution {
  std::vector<int> cuts;
  AuxiliaryT aux;
  double lambda = 0.0;  // achieved Num / Den of `cuts`
  std::vector<DinkelbachStep> trace;
};

// Optimal cuts for fixed batch sizes. Throws Error(kInfeasible) when no cut
// assignment fits memory with a positive denominator and
// Error(kNonConvergence) past max_iters.
MsSolution solve_ms_dinkelbach(const Scenario& scenario,
                               const std::vector<int>& batch,
                               const DinkelbachOptions& options = {},
                               const std::vector<int>& warm_cuts = {});

}  // namespace sfl

#endif  // SFL_SPLIT_POINT_H_
