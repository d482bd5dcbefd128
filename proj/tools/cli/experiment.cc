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

#include "experiment.h"

#include "sfl/error.h"

namespace sfl::cli {

SimWorld make_world(const Scenario& scenario, const SimSettings& settings,
                    std::uint64_t seed) {
  if (settings.samples_per_device < 2 || settings.samples_per_device % 2 != 0) {
    throw Error(ErrorKind::kInvalidArgument, "samples per device must be even and >= 2");
  }
  SimWorld w;
  w.spec.widths.push_back(settings.input_dim);
  for (int l = 0; l + 1 < scenario.num_layers(); ++l) {
    w.spec.widths.push_back(settings.width);
    w.spec.hidden.push_back(settings.activation);
  }
  w.spec.widths.push_back(settings.classes);
  w.spec.loss = sim::LossKind::kCrossEntropy;

  sim::BlobConfig blobs;
  blobs.samples = settings.samples_per_device * scenario.num_devices();
  blobs.dim = settings.input_dim;
  blobs.classes = settings.classes;
  blobs.center_spread = settings.center_spread;
  blobs.noise = settings.noise;
  w.data = sim::make_blobs(seed, blobs);
  w.partition = sim::partition_data(w.data, scenario.num_devices(), settings.partition, seed);
  w.init = sim::init_params(w.spec, seed);
  return w;
}

sim::ConstantEstimates calibrate(Scenario& scenario, const SimWorld& world,
                                 std::uint64_t seed) {
  sim::ProbeConfig probe;
  probe.seed = seed;
  const sim::ConstantEstimates est =
      sim::estimate_constants(world.spec, world.init, world.data, probe);
  sim::apply_estimates(est, scenario);
  return est;
}

sim::RunReport simulate(const Scenario& scenario, const Decision& decision,
                        const SimWorld& world, const sim::TrainConfig& config) {
  const sim::SimContext ctx(scenario, decision, world.spec, world.data, world.partition);
  return sim::train(ctx, world.init, config);
}

}  // namespace sfl::cli
