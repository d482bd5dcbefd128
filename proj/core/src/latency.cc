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

#include "sfl/latency.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "sfl/error.h"

namespace sfl {
namespace {

// x / rate with an infinitely fast resource contributing exactly zero.
double transfer(double amount, double rate) { return amount / rate; }

}  // namespace

int Decision::split_depth() const {
  return cut.empty() ? 0 : *std::max_element(cut.begin(), cut.end());
}

void validate(const Decision& decision, const Scenario& scenario) {
  const int n = scenario.num_devices();
  if (decision.num_devices() != n ||
      static_cast<int>(decision.cut.size()) != n) {
    throw Error(ErrorKind::kValidation,
                "decision: expected " + std::to_string(n) +
                    " batch sizes and cuts, got " +
                    std::to_string(decision.batch.size()) + " and " +
                    std::to_string(decision.cut.size()));
  }
  for (int i = 0; i < n; ++i) {
    if (decision.batch[i] < 1) {
      throw Error(ErrorKind::kValidation,
                  "decision.batch[" + std::to_string(i) + "] must be >= 1");
    }
    if (decision.cut[i] < 1 || decision.cut[i] > scenario.num_layers()) {
      throw Error(ErrorKind::kValidation,
                  "decision.cut[" + std::to_string(i) + "] must lie in [1, " +
                      std::to_string(scenario.num_layers()) + "]");
    }
  }
}

double client_fp_latency(const DeviceProfile& device,
                         const LayerProfile& layers, int batch, int cut) {
  return transfer(batch * layers.fp(cut), device.compute_flops);
}

double activation_upload_latency(const DeviceProfile& device,
                                 const LayerProfile& layers, int batch,
                                 int cut) {
  return transfer(batch * layers.act(cut), device.up_rate_edge);
}

double grad_download_latency(const DeviceProfile& device,
                             const LayerProfile& layers, int batch, int cut) {
  return transfer(batch * layers.grad(cut), device.down_rate_edge);
}

double client_bp_latency(const DeviceProfile& device,
                         const LayerProfile& layers, int batch, int cut) {
  return transfer(batch * layers.bp(cut), device.compute_flops);
}

ServerCompute server_fp_bp_latency(const Scenario& scenario,
                                   const Decision& decision) {
  const LayerProfile& layers = scenario.layers;
  double fp_work = 0.0;
  double bp_work = 0.0;
  for (int i = 0; i < decision.num_devices(); ++i) {
    const int c = decision.cut[i];
    fp_work += decision.batch[i] * (layers.fp_total() - layers.fp(c));
    bp_work += decision.batch[i] * (layers.bp_total() - layers.bp(c));
  }
  return {transfer(fp_work, scenario.server.compute_flops),
          transfer(bp_work, scenario.server.compute_flops)};
}

double server_noncommon_bits(const Scenario& scenario,
                             const Decision& decision) {
  double max_bits = 0.0;
  double sum_bits = 0.0;
  for (int c : decision.cut) {
    const double bits = scenario.layers.params(c);
    max_bits = std::max(max_bits, bits);
    sum_bits += bits;
  }
  // Exactly zero for homogeneous cuts: N * x - (x + ... + x) may round.
  const bool homogeneous =
      std::all_of(decision.cut.begin(), decision.cut.end(),
                  [&](int c) { return c == decision.cut.front(); });
  if (homogeneous) return 0.0;
  return std::max(0.0, decision.num_devices() * max_bits - sum_bits);
}

AggregationLatency aggregation_latencies(const Scenario& scenario,
                                         const Decision& decision) {
  const double lambda_s = server_noncommon_bits(scenario, decision);
  AggregationLatency out;
  out.up = transfer(lambda_s, scenario.server.up_rate_fed);
  out.down = transfer(lambda_s, scenario.server.down_rate_fed);
  for (int i = 0; i < decision.num_devices(); ++i) {
    const DeviceProfile& d = scenario.devices[i];
    const double bits = scenario.layers.params(decision.cut[i]);
    out.up = std::max(out.up, transfer(bits, d.up_rate_fed));
    out.down = std::max(out.down, transfer(bits, d.down_rate_fed));
  }
  return out;
}

LatencyBreakdown round_latency(const Scenario& scenario,
                               const Decision& decision) {
  validate(decision, scenario);
  const LayerProfile& layers = scenario.layers;
  LatencyBreakdown out;
  out.devices.resize(decision.num_devices());
  for (int i = 0; i < decision.num_devices(); ++i) {
    const DeviceProfile& d = scenario.devices[i];
    const int b = decision.batch[i];
    const int c = decision.cut[i];
    DeviceLatency& dl = out.devices[i];
    dl.fp = client_fp_latency(d, layers, b, c);
    dl.act_up = activation_upload_latency(d, layers, b, c);
    dl.grad_down = grad_download_latency(d, layers, b, c);
    dl.bp = client_bp_latency(d, layers, b, c);
    dl.sub_up = transfer(layers.params(c), d.up_rate_fed);
    dl.sub_down = transfer(layers.params(c), d.down_rate_fed);
  }
  const ServerCompute server = server_fp_bp_latency(scenario, decision);
  out.server_fp = server.fp;
  out.server_bp = server.bp;
  out.server_noncommon_bits = server_noncommon_bits(scenario, decision);
  out.server_sub_up = transfer(out.server_noncommon_bits, scenario.server.up_rate_fed);
  out.server_sub_down =
      transfer(out.server_noncommon_bits, scenario.server.down_rate_fed);
  out.split_training = recompose_split_training(out);
  out.aggregation = recompose_aggregation(out);
  return out;
}

double recompose_split_training(const LatencyBreakdown& breakdown) {
  double up_stage = 0.0;
  double down_stage = 0.0;
  for (const DeviceLatency& d : breakdown.devices) {
    up_stage = std::max(up_stage, d.fp + d.act_up);
    down_stage = std::max(down_stage, d.grad_down + d.bp);
  }
  return up_stage + breakdown.server_fp + breakdown.server_bp + down_stage;
}

double recompose_aggregation(const LatencyBreakdown& breakdown) {
  double up = breakdown.server_sub_up;
  double down = breakdown.server_sub_down;
  for (const DeviceLatency& d : breakdown.devices) {
    up = std::max(up, d.sub_up);
    down = std::max(down, d.sub_down);
  }
  return up + down;
}

double total_time(const LatencyBreakdown& breakdown, int agg_interval,
                  long rounds) {
  if (rounds < 1) {
    throw Error(ErrorKind::kInvalidArgument, "total_time: rounds must be >= 1");
  }
  if (agg_interval < 1) {
    throw Error(ErrorKind::kInvalidArgument,
                "total_time: aggregation interval must be >= 1");
  }
  const long aggregations = rounds / agg_interval;
  return static_cast<double>(rounds) * breakdown.split_training +
         static_cast<double>(aggregations) * breakdown.aggregation;
}

double total_time(const Scenario& scenario, const Decision& decision,
                  long rounds) {
  return total_time(round_latency(scenario, decision),
                    scenario.training.agg_interval, rounds);
}

bool fits_memory(const Scenario& scenario, const CumulativeStats& stats,
                 int device, int batch, int cut) {
  const LayerProfile& layers = scenario.layers;
  const double used = batch * (stats.act(cut) + stats.grad(cut)) +
                      layers.opt_state(cut) + layers.params(cut);
  return used < scenario.devices[device].memory_bits;
}

bool fits_memory(const Scenario& scenario, const Decision& decision) {
  const CumulativeStats stats = cumulative_stats(scenario.layers);
  for (int i = 0; i < decision.num_devices(); ++i) {
    if (!fits_memory(scenario, stats, i, decision.batch[i], decision.cut[i])) {
      return false;
    }
  }
  return true;
}

int max_batch_for_memory(const Scenario& scenario, const CumulativeStats& stats,
                         int device, int cut, int max_batch) {
  // Memory use is affine in b; start from the real-valued estimate and fix up
  // rounding against the strict inequality.
  const LayerProfile& layers = scenario.layers;
  const double per_sample = stats.act(cut) + stats.grad(cut);
  const double room = scenario.devices[device].memory_bits -
                      layers.opt_state(cut) - layers.params(cut);
  if (room <= 0.0) return 0;
  if (per_sample <= 0.0) return max_batch;
  const double estimate = std::min(room / per_sample, static_cast<double>(max_batch));
  int b = static_cast<int>(std::floor(estimate));
  while (b < max_batch && fits_memory(scenario, stats, device, b + 1, cut)) ++b;
  while (b > 0 && !fits_memory(scenario, stats, device, b, cut)) --b;
  return b;
}

}  // namespace sfl
