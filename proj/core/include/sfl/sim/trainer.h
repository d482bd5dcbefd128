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

// Split federated training on the toy model. Every device keeps a full
// replica; layers 1..L_c (client segment plus server-side non-common
// segment) evolve per device and are averaged every I rounds, layers above
// L_c are averaged every round. The cut of each device only changes what
// the simulated clock charges.

#ifndef SFL_SIM_TRAINER_H_
#define SFL_SIM_TRAINER_H_

#include <cstdint>
#include <vector>

#include "sfl/latency.h"
#include "sfl/profiles.h"
#include "sfl/sim/data.h"
#include "sfl/sim/model.h"

namespace sfl::sim {

// Everything a run needs besides its mutable state. Validated on
// construction: model depth must equal the scenario's layer count.
struct SimContext {
  SimContext(const Scenario& scenario, const Decision& decision, ModelSpec spec,
             const Dataset& data, DataPartition partition);

  const Scenario* scenario;
  Decision decision;
  ModelSpec spec;
  const Dataset* data;
  DataPartition partition;
  LatencyBreakdown latency;
  int split_depth = 0;  // L_c
};

struct TrainState {
  std::vector<Params> replicas;
  long round = 0;
  long aggregations = 0;
  double clock = 0.0;  // seconds, round * T_S + aggregations * T_A
  std::uint64_t seed = 0;
  std::vector<double> loss_history;  // mini-batch loss, one per round
};

TrainState init_state(const SimContext& ctx, const Params& init,
                      std::uint64_t seed);

// Sample indices drawn by one device in one round, without replacement from
// its partition. Pure function of its arguments.
std::vector<int> sample_device_batch(const DataPartition& partition, int device,
                                     int batch, std::uint64_t seed, long round);

struct RoundStats {
  double loss = 0.0;  // average over devices of their mini-batch losses
  // Per device, sum over layers 1..L_c of squared gradient norms.
  std::vector<double> client_grad_sq;
};

// One round: per-device gradients, per-device SGD on layers 1..L_c, averaged
// update of the common layers, clock += T_S. Throws Error(kDivergence) on a
// non-finite loss, naming the round.
RoundStats run_round(const SimContext& ctx, TrainState& state);

// Averages layers 1..L_c across devices and charges T_A. Throws
// Error(kInvalidArgument) when round is not a multiple of I.
void aggregate_clients(const SimContext& ctx, TrainState& state);

// Max over devices of ||mean_k h_k - h_i||^2 over layers 1..L_c.
double client_divergence(const SimContext& ctx, const TrainState& state);

// Loss of the device-averaged model on the whole dataset.
Params averaged_model(const TrainState& state);

struct TrainConfig {
  long max_rounds = 200;
  bool stop_at_plateau = false;
  int plateau_window = 10;
  double plateau_rel = 2e-4;
  double divergence_factor = 1e6;
  std::uint64_t seed = 0;
};

struct RoundRecord {
  long round = 0;
  double sim_time = 0.0;
  double loss = 0.0;       // mini-batch
  double eval_loss = 0.0;  // full data, averaged model
  double accuracy = 0.0;
};

struct DriftCheck {
  long round = 0;
  double measured = 0.0;
  double bound = 0.0;  // 4 lr^2 I^2 * max observed client grad norm^2
};

struct RunReport {
  std::vector<RoundRecord> series;
  long rounds_run = 0;
  long plateau_round = -1;
  double plateau_time = 0.0;
  std::vector<DriftCheck> drift;
  int drift_violations = 0;
  TrainState final_state;
};

// Plateau: the window-mean of eval loss improved by less than plateau_rel
// (relative) over the last window rounds. Returns the first such round or -1.
long find_plateau(const std::vector<double>& eval_loss, int window, double rel);

// Throws Error(kDivergence) when the loss exceeds divergence_factor times the
// first round's loss or stops being finite.
RunReport train(const SimContext& ctx, const Params& init,
                const TrainConfig& config);

}  // namespace sfl::sim

#endif  // SFL_SIM_TRAINER_H_
