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

// Empirical smoothness, per-layer gradient variance and second moments of
// the toy model, for feeding the bound and the optimizer.

#ifndef SFL_SIM_ESTIMATE_H_
#define SFL_SIM_ESTIMATE_H_

#include <cstdint>
#include <vector>

#include "sfl/profiles.h"
#include "sfl/sim/data.h"
#include "sfl/sim/model.h"

namespace sfl::sim {

struct ProbeConfig {
  int probes = 4;        // parameter points around the base model
  int draws = 32;        // mini-batches per probe point
  int batch = 8;         // probe batch size
  double perturb = 0.1;  // std of the per-coordinate perturbation
  std::uint64_t seed = 0;
};

struct ConstantEstimates {
  double smoothness = 0.0;
  std::vector<double> grad_var;     // per layer, scaled by the probe batch
  std::vector<double> grad_moment;  // per layer
};

// smoothness: max over probe pairs of ||g(w) - g(w')|| / ||w - w'|| with
// full-data gradients. grad_var_j: batch * mean ||g_j - g_full_j||^2 over
// draws. grad_moment_j: max ||g_j||^2 over draws. Throws
// Error(kInvalidArgument) with fewer than 2 probes.
ConstantEstimates estimate_constants(const ModelSpec& spec, const Params& base,
                                     const Dataset& data,
                                     const ProbeConfig& config);

// Copies the estimates into the scenario's smoothness and layer statistics.
void apply_estimates(const ConstantEstimates& est, Scenario& scenario);

}  // namespace sfl::sim

#endif  // SFL_SIM_ESTIMATE_H_
