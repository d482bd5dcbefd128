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

// Per-round latency model of split training (client FP, activation upload,
// server FP/BP, gradient download, client BP) and of the periodic client-side
// aggregation (sub-model upload/download between devices, edge server and fed
// server). All results are in seconds.

#ifndef SFL_LATENCY_H_
#define SFL_LATENCY_H_

#include <vector>

#include "sfl/profiles.h"

namespace sfl {

// Per-device batch sizes and 1-based cut layers.
struct Decision {
  std::vector<int> batch;
  std::vector<int> cut;

  int num_devices() const { return static_cast<int>(batch.size()); }
  // Deepest client-specific depth across devices.
  int split_depth() const;

  bool operator==(const Decision&) const = default;
  auto operator<=>(const Decision&) const = default;
};

// Throws Error(kValidation) unless sizes match the scenario, every batch is
// >= 1 and every cut lies in [1, L].
void validate(const Decision& decision, const Scenario& scenario);

struct DeviceLatency {
  double fp = 0.0;
  double act_up = 0.0;
  double grad_down = 0.0;
  double bp = 0.0;
  double sub_up = 0.0;
  double sub_down = 0.0;
};

struct LatencyBreakdown {
  std::vector<DeviceLatency> devices;
  double server_fp = 0.0;
  double server_bp = 0.0;
  // Bits of server-side non-common sub-models exchanged with the fed server.
  double server_noncommon_bits = 0.0;
  double server_sub_up = 0.0;
  double server_sub_down = 0.0;
  double split_training = 0.0;  // T_S
  double aggregation = 0.0;     // T_A
};

double client_fp_latency(const DeviceProfile& device,
                         const LayerProfile& layers, int batch, int cut);
double activation_upload_latency(const DeviceProfile& device,
                                 const LayerProfile& layers, int batch,
                                 int cut);
double grad_download_latency(const DeviceProfile& device,
                             const LayerProfile& layers, int batch, int cut);
double client_bp_latency(const DeviceProfile& device,
                         const LayerProfile& layers, int batch, int cut);

struct ServerCompute {
  double fp = 0.0;
  double bp = 0.0;
};
ServerCompute server_fp_bp_latency(const Scenario& scenario,
                                   const Decision& decision);

// N * max_i delta(c_i) - sum_i delta(c_i).
double server_noncommon_bits(const Scenario& scenario,
                             const Decision& decision);

struct AggregationLatency {
  double up = 0.0;
  double down = 0.0;
};
AggregationLatency aggregation_latencies(const Scenario& scenario,
                                         const Decision& decision);

LatencyBreakdown round_latency(const Scenario& scenario,
                               const Decision& decision);

// Re-derives T_S and T_A from the per-stage fields of a breakdown.
double recompose_split_training(const LatencyBreakdown& breakdown);
double recompose_aggregation(const LatencyBreakdown& breakdown);

// rounds * T_S + floor(rounds / I) * T_A, with the exact floor.
double total_time(const Scenario& scenario, const Decision& decision,
                  long rounds);
double total_time(const LatencyBreakdown& breakdown, int agg_interval,
                  long rounds);

// Client memory constraint: b (act_cum + grad_cum) + opt_state + params must
// stay strictly below the device memory.
bool fits_memory(const Scenario& scenario, const CumulativeStats& stats,
                 int device, int batch, int cut);
bool fits_memory(const Scenario& scenario, const Decision& decision);

// Largest batch satisfying the memory constraint at the given cut, or 0 when
// even a single sample does not fit. Saturates at max_batch.
int max_batch_for_memory(const Scenario& scenario, const CumulativeStats& stats,
                         int device, int cut, int max_batch);

}  // namespace sfl

#endif  // SFL_LATENCY_H_
