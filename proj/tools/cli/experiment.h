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

// Toy-model world used by simulate and sweep: a tanh network with one layer
// per profiled layer, Gaussian blobs sized to the device count, and a
// partition across devices.

#ifndef SFL_TOOLS_EXPERIMENT_H_
#define SFL_TOOLS_EXPERIMENT_H_

#include <cstdint>

#include "sfl/profiles.h"
#include "sfl/sim/data.h"
#include "sfl/sim/estimate.h"
#include "sfl/sim/model.h"
#include "sfl/sim/trainer.h"

namespace sfl::cli {

struct SimSettings {
  int width = 16;                 // hidden width
  int input_dim = 8;
  int classes = 4;
  int samples_per_device = 128;   // must be even (two shards per device)
  double center_spread = 1.0;
  double noise = 1.0;
  sim::Activation activation = sim::Activation::kTanh;
  sim::PartitionMode partition = sim::PartitionMode::kNonIid;
};

struct SimWorld {
  sim::ModelSpec spec;
  sim::Dataset data;
  sim::DataPartition partition;
  sim::Params init;
};

// Depth follows the scenario's layer count, data size its device count.
SimWorld make_world(const Scenario& scenario, const SimSettings& settings,
                    std::uint64_t seed);

// Replaces smoothness and the per-layer statistics of `scenario` with
// estimates taken around the world's initial parameters.
sim::ConstantEstimates calibrate(Scenario& scenario, const SimWorld& world,
                                 std::uint64_t seed);

sim::RunReport simulate(const Scenario& scenario, const Decision& decision,
                        const SimWorld& world, const sim::TrainConfig& config);

}  // namespace sfl::cli

#endif  // SFL_TOOLS_EXPERIMENT_H_
