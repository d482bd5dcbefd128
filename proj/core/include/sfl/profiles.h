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

// Layer, device and server profiles plus the scenario container that ties
// them to the training hyperparameters. Units: FLOPs and FLOPS for compute,
// bits and bits/s for traffic and memory; step size, smoothness, target and
// loss gap are dimensionless.

#ifndef SFL_PROFILES_H_
#define SFL_PROFILES_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace sfl {

// Per-layer constants of the layered model. All vectors have one entry per
// layer. Cut-indexed accessors take a 1-based cut layer c in [1, L].
struct LayerProfile {
  // Cumulative forward FLOPs per sample through layers 1..j.
  std::vector<double> fp_flops_cum;
  // Cumulative backward FLOPs per sample through layers 1..j.
  std::vector<double> bp_flops_cum;
  // Activation bits per sample emitted at cut layer j.
  std::vector<double> act_bits;
  // Activation-gradient bits per sample returned at cut layer j.
  std::vector<double> grad_bits;
  // Client-side sub-model size in bits when cut at layer j.
  std::vector<double> param_bits;
  // Cumulative optimizer-state bits for layers 1..j.
  std::vector<double> opt_state_bits_cum;
  // Per-layer gradient variance constant (scaled by 1/b in the bound).
  std::vector<double> grad_var;
  // Per-layer second-moment bound of the stochastic gradient.
  std::vector<double> grad_moment;

  int num_layers() const { return static_cast<int>(fp_flops_cum.size()); }

  double fp(int cut) const { return fp_flops_cum[cut - 1]; }
  double bp(int cut) const { return bp_flops_cum[cut - 1]; }
  double act(int cut) const { return act_bits[cut - 1]; }
  double grad(int cut) const { return grad_bits[cut - 1]; }
  double params(int cut) const { return param_bits[cut - 1]; }
  double opt_state(int cut) const { return opt_state_bits_cum[cut - 1]; }
  double fp_total() const { return fp_flops_cum.back(); }
  double bp_total() const { return bp_flops_cum.back(); }

  // Per-layer forward/backward FLOPs recovered by differencing.
  std::vector<double> fp_flops_per_layer() const;
  std::vector<double> bp_flops_per_layer() const;

  bool operator==(const LayerProfile&) const = default;
};

// Prefix sums of the per-layer second moments, activation sizes and
// activation-gradient sizes. Entry j-1 holds the sum over layers 1..j.
struct CumulativeStats {
  std::vector<double> moment_cum;
  std::vector<double> act_cum;
  std::vector<double> grad_cum;

  double moment(int cut) const { return moment_cum[cut - 1]; }
  double act(int cut) const { return act_cum[cut - 1]; }
  double grad(int cut) const { return grad_cum[cut - 1]; }
};

CumulativeStats cumulative_stats(const LayerProfile& layers);

struct DeviceProfile {
  double compute_flops = 0.0;
  double up_rate_edge = 0.0;
  double down_rate_edge = 0.0;
  double up_rate_fed = 0.0;
  double down_rate_fed = 0.0;
  double memory_bits = 0.0;

  bool operator==(const DeviceProfile&) const = default;
};

struct ServerProfile {
  double compute_flops = 0.0;
  // Edge server -> fed server.
  double up_rate_fed = 0.0;
  // Fed server -> edge server.
  double down_rate_fed = 0.0;

  bool operator==(const ServerProfile&) const = default;
};

struct TrainingParams {
  double lr = 0.0;
  int agg_interval = 1;
  double target_eps = 0.0;
  double smoothness = 0.0;
  double loss_gap = 0.0;

  bool operator==(const TrainingParams&) const = default;
};

struct Scenario {
  LayerProfile layers;
  std::vector<DeviceProfile> devices;
  ServerProfile server;
  TrainingParams training;

  int num_devices() const { return static_cast<int>(devices.size()); }
  int num_layers() const { return layers.num_layers(); }

  bool operator==(const Scenario&) const = default;
};

// Throw Error(kValidation) naming the violated field and invariant.
void validate(const LayerProfile& layers);
void validate(const DeviceProfile& device, int index);
void validate(const ServerProfile& server);
void validate(const Scenario& scenario);

// Scenario documents are JSON; see docs/scenario_format.md. A "layers" value
// may be an inline object or a path relative to base_dir.
Scenario parse_scenario(const std::string& text,
                        const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);
std::string serialize_scenario(const Scenario& scenario);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

// Sampling configuration for generate_scenario. Defaults reproduce the
// reference simulation settings: 20 TFLOPS server, [1, 2] TFLOPS devices,
// [75, 80] Mbps uplinks, [360, 380] Mbps downlinks and inter-server links,
// step size 5e-4 and aggregation interval 15.
struct ScenarioRanges {
  Range device_compute{1e12, 2e12};
  Range uplink{75e6, 80e6};
  Range downlink{360e6, 380e6};
  Range server_link{360e6, 380e6};
  Range server_compute{20e12, 20e12};
  Range memory{2e8, 6e8};
  LayerProfile layers;  // empty selects default_layer_profile()
  TrainingParams training{5e-4, 15, 1.0, 10.0, 2.3};
};

inline constexpr int kDefaultNumDevices = 20;

void validate(const ScenarioRanges& ranges);

// Pure function of its arguments; every device field is drawn uniformly from
// its range.
Scenario generate_scenario(std::uint64_t seed, int num_devices,
                           const ScenarioRanges& ranges = {});

// Six-layer CIFAR-scale convolutional profile used when no profile is given.
LayerProfile default_layer_profile();

// Random monotone profile with L layers for small oracle instances.
LayerProfile random_layer_profile(std::uint64_t seed, int num_layers);

// Small synthetic scenario (second-scale latencies, sub-second per-sample
// client costs, a few aggregation rounds) whose optimum over b <= 16 is
// usually interior. Used by the oracle cross-checks.
Scenario generate_small_instance(std::uint64_t seed, int num_devices,
                                 int num_layers);

}  // namespace sfl

#endif  // SFL_PROFILES_H_
