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

// Convergence bound for split federated training with per-device batch sizes
// and heterogeneous cuts, the client drift bound between aggregations, the
// implied minimum number of rounds, and the time-to-convergence objectives
// that the optimizer minimizes.

#ifndef SFL_CONVERGENCE_H_
#define SFL_CONVERGENCE_H_

#include <string>
#include <vector>

#include "sfl/latency.h"
#include "sfl/profiles.h"

namespace sfl {

struct BoundInputs {
  double smoothness = 0.0;
  double lr = 0.0;
  int agg_interval = 1;
  double target_eps = 0.0;
  double loss_gap = 0.0;
  std::vector<double> grad_var;  // per layer, all L layers
  std::vector<int> batch;        // per device
  // Second moments summed over layers 1..L_c, L_c = max_i c_i.
  double moment_at_split = 0.0;
  int split_depth = 0;

  int num_devices() const { return static_cast<int>(batch.size()); }
};

BoundInputs make_bound_inputs(const Scenario& scenario,
                              const Decision& decision);

// 1{I>1} * 4 gamma^2 I^2 * moment_cum.
double drift_bound(double lr, int agg_interval, double moment_cum);

// (beta gamma / N^2) * sum_i sum_j sigma_j^2 / b_i.
double variance_term(const BoundInputs& inputs);
// 1{I>1} * 4 beta^2 gamma^2 I^2 * G~^2_{L_c}.
double drift_term(const BoundInputs& inputs);

// Bound on the average squared gradient norm after the given rounds.
double convergence_bound(const BoundInputs& inputs, double rounds);

// eps - variance - drift, evaluated in extended precision.
long double rounds_denominator(const BoundInputs& inputs);

struct RoundsEstimate {
  double rounds = 0.0;
  long double denominator = 0.0;
  // Set when the denominator is below 1e-6 * eps and the estimate sits near
  // the pole of the objective.
  bool ill_conditioned = false;
};

// Continuous lower bound on the rounds needed to reach target_eps. Throws
// Error(kInfeasible) naming the dominating term when the denominator is not
// positive.
RoundsEstimate min_rounds(const BoundInputs& inputs);

// Estimated time to convergence: min_rounds * (T_S + T_A / I).
double objective_theta(const Scenario& scenario, const Decision& decision);

// Auxiliary upper bounds of the linearized objective. Field k is T_k.
struct AuxiliaryT {
  double max_moment = 0.0;    // T1: max_i G~^2(c_i)
  double max_params = 0.0;    // T2: max_i delta(c_i)
  double max_fp_up = 0.0;     // T3: max_i (client FP + activation upload)
  double max_down_bp = 0.0;   // T4: max_i (gradient download + client BP)
  double max_agg_up = 0.0;    // T5: max(max_i sub-model up, server up)
  double max_agg_down = 0.0;  // T6: max(max_i sub-model down, server down)

  bool operator==(const AuxiliaryT&) const = default;
};

// The tight values: every T_k equals the max it bounds.
AuxiliaryT tight_auxiliary(const Scenario& scenario, const Decision& decision);

// (eps - variance(b) - 1{I>1} 4 beta^2 gamma^2 I^2 T1) in extended precision.
long double aux_denominator(const Scenario& scenario,
                            const std::vector<int>& batch,
                            const AuxiliaryT& aux);

// Linearized objective over (b, T) with the server compute terms supplied.
// Throws Error(kInfeasible) when its denominator is not positive.
double objective_theta_prime(const Scenario& scenario,
                             const std::vector<int>& batch,
                             const AuxiliaryT& aux,
                             const ServerCompute& server_terms);

// objective_theta_prime at the tight auxiliaries of a decision.
double objective_theta_prime(const Scenario& scenario,
                             const Decision& decision);

// Describes why a denominator is not positive, for error messages.
std::string describe_infeasibility(double target_eps, double variance,
                                   double drift);

}  // namespace sfl

#endif  // SFL_CONVERGENCE_H_
