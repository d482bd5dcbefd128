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

#include <gtest/gtest.h>

#include <limits>

#include "sfl/latency.h"
#include "sfl/random.h"
#include "support/test_support.h"

namespace sfl {
namespace {

using test::desk_decision;
using test::desk_scenario;
using test::rel_diff;

constexpr double kGoldenTol = 1e-12;

// Pinned from tests/oracles/desk_goldens.py (exact rational evaluation).
constexpr double kTs = 2.855;
constexpr double kTa = 0.41999999999999998;

TEST(StageLatency, ClientForward) {
  const Scenario s = desk_scenario();
  EXPECT_DOUBLE_EQ(client_fp_latency(s.devices[0], s.layers, 4, 2), 0.8);
  DeviceProfile d = s.devices[0];
  d.compute_flops = s.layers.fp(3);
  EXPECT_DOUBLE_EQ(client_fp_latency(d, s.layers, 1, 3), 1.0);
}

TEST(StageLatency, ActivationUploadLinearInBatch) {
  const Scenario s = desk_scenario();
  EXPECT_DOUBLE_EQ(activation_upload_latency(s.devices[0], s.layers, 16, 1), 1.6);
  EXPECT_DOUBLE_EQ(activation_upload_latency(s.devices[1], s.layers, 6, 2),
                   2.0 * activation_upload_latency(s.devices[1], s.layers, 3, 2));
  DeviceProfile d = s.devices[0];
  d.up_rate_edge = s.layers.act(4);
  EXPECT_DOUBLE_EQ(activation_upload_latency(d, s.layers, 1, 4), 1.0);
}

TEST(StageLatency, DownloadAndBackward) {
  const Scenario s = desk_scenario();
  EXPECT_DOUBLE_EQ(client_bp_latency(s.devices[0], s.layers, 4, 2), 1.6);
  DeviceProfile d = s.devices[0];
  d.down_rate_edge = s.layers.grad(2);
  EXPECT_DOUBLE_EQ(grad_download_latency(d, s.layers, 1, 2), 1.0);
  LayerProfile zero = s.layers;
  zero.grad_bits[3] = 0.0;
  EXPECT_EQ(grad_download_latency(s.devices[0], zero, 8, 4), 0.0);
}

TEST(ServerLatency, DeskValuesAndScaling) {
  Scenario s = desk_scenario();
  const ServerCompute sc = server_fp_bp_latency(s, desk_decision());
  EXPECT_LE(rel_diff(sc.fp, 0.06), kGoldenTol);
  EXPECT_LE(rel_diff(sc.bp, 0.12), kGoldenTol);
  const ServerCompute none = server_fp_bp_latency(s, Decision{{4, 4}, {4, 4}});
  EXPECT_EQ(none.fp, 0.0);
  EXPECT_EQ(none.bp, 0.0);
  s.server.compute_flops *= 2.0;
  const ServerCompute half = server_fp_bp_latency(s, desk_decision());
  EXPECT_DOUBLE_EQ(half.fp, sc.fp / 2.0);
  EXPECT_DOUBLE_EQ(half.bp, sc.bp / 2.0);
}

TEST(AggregationLatency, NonCommonBits) {
  const Scenario s = desk_scenario();
  EXPECT_EQ(server_noncommon_bits(s, Decision{{1, 1}, {1, 2}}), 2e6);
  EXPECT_EQ(server_noncommon_bits(s, Decision{{1, 1}, {3, 3}}), 0.0);
  Scenario one = s;
  one.devices.resize(1);
  EXPECT_EQ(server_noncommon_bits(one, Decision{{1}, {4}}), 0.0);
}

TEST(AggregationLatency, DeskValues) {
  const Scenario s = desk_scenario();
  const AggregationLatency a = aggregation_latencies(s, desk_decision());
  EXPECT_LE(rel_diff(a.up, 0.29999999999999999), kGoldenTol);
  EXPECT_LE(rel_diff(a.down, 0.12), kGoldenTol);
  // Homogeneous cuts: the server terms vanish and device terms dominate.
  const LatencyBreakdown h = round_latency(s, Decision{{2, 2}, {3, 3}});
  EXPECT_EQ(h.server_sub_up, 0.0);
  EXPECT_EQ(h.server_sub_down, 0.0);
}

TEST(RoundLatency, DeskGolden) {
  const LatencyBreakdown b = round_latency(desk_scenario(), desk_decision());
  const double fp[] = {0.80000000000000004, 0.59999999999999998};
  const double up[] = {0.20000000000000001, 0.16};
  const double down[] = {0.074999999999999997, 0.059999999999999998};
  const double bp[] = {1.6000000000000001, 1.2};
  const double sub_up[] = {0.074999999999999997, 0.29999999999999999};
  const double sub_down[] = {0.037499999999999999, 0.12};
  for (int i = 0; i < 2; ++i) {
    EXPECT_LE(rel_diff(b.devices[i].fp, fp[i]), kGoldenTol);
    EXPECT_LE(rel_diff(b.devices[i].act_up, up[i]), kGoldenTol);
    EXPECT_LE(rel_diff(b.devices[i].grad_down, down[i]), kGoldenTol);
    EXPECT_LE(rel_diff(b.devices[i].bp, bp[i]), kGoldenTol);
    EXPECT_LE(rel_diff(b.devices[i].sub_up, sub_up[i]), kGoldenTol);
    EXPECT_LE(rel_diff(b.devices[i].sub_down, sub_down[i]), kGoldenTol);
  }
  EXPECT_EQ(b.server_noncommon_bits, 3e6);
  EXPECT_LE(rel_diff(b.server_sub_up, 0.03), kGoldenTol);
  EXPECT_LE(rel_diff(b.server_sub_down, 0.015), kGoldenTol);
  EXPECT_LE(rel_diff(b.split_training, kTs), kGoldenTol);
  EXPECT_LE(rel_diff(b.aggregation, kTa), kGoldenTol);
  EXPECT_EQ(recompose_split_training(b), b.split_training);
  EXPECT_EQ(recompose_aggregation(b), b.aggregation);
}

TEST(RoundLatency, RejectsInvalidDecision) {
  const Scenario s = desk_scenario();
  EXPECT_EQ(test::capture_error([&] { round_latency(s, Decision{{0, 1}, {1, 1}}); }).kind(),
            ErrorKind::kValidation);
  EXPECT_EQ(test::capture_error([&] { round_latency(s, Decision{{1, 1}, {1, 5}}); }).kind(),
            ErrorKind::kValidation);
  EXPECT_EQ(test::capture_error([&] { round_latency(s, Decision{{1}, {1}}); }).kind(),
            ErrorKind::kValidation);
}

TEST(RoundLatency, IdenticalDevicesMatchSingleDevice) {
  Scenario s = desk_scenario();
  s.devices[1] = s.devices[0];
  const LatencyBreakdown b = round_latency(s, Decision{{3, 3}, {2, 2}});
  const DeviceLatency& d = b.devices[0];
  EXPECT_DOUBLE_EQ(b.split_training,
                   d.fp + d.act_up + b.server_fp + b.server_bp + d.grad_down + d.bp);
}

TEST(RoundLatency, InfinitelyFastDeviceLeavesTheMaxes) {
  Scenario s = desk_scenario();
  const double inf = std::numeric_limits<double>::infinity();
  DeviceProfile& fast = s.devices[0];
  fast.compute_flops = fast.up_rate_edge = fast.down_rate_edge = inf;
  fast.up_rate_fed = fast.down_rate_fed = inf;
  const LatencyBreakdown b = round_latency(s, desk_decision());
  const DeviceLatency& slow = b.devices[1];
  EXPECT_DOUBLE_EQ(b.split_training, slow.fp + slow.act_up + b.server_fp + b.server_bp +
                                         slow.grad_down + slow.bp);
  EXPECT_EQ(b.devices[0].fp + b.devices[0].act_up + b.devices[0].sub_up, 0.0);
}

TEST(TotalTime, FloorArithmetic) {
  const LatencyBreakdown b = round_latency(desk_scenario(), desk_decision());
  EXPECT_LE(rel_diff(total_time(b, 15, 30), 86.489999999999995), kGoldenTol);
  EXPECT_LE(rel_diff(total_time(b, 15, 14), 39.969999999999999), kGoldenTol);
  EXPECT_LE(rel_diff(total_time(b, 15, 1000), 2882.7199999999998), kGoldenTol);
  EXPECT_LE(rel_diff(total_time(desk_scenario(), desk_decision(), 1000), 3065.0), kGoldenTol);
  EXPECT_EQ(total_time(b, 15, 14), 14 * b.split_training);
}

TEST(TotalTime, RejectsNonPositiveRounds) {
  EXPECT_EQ(test::capture_error([] {
              total_time(desk_scenario(), desk_decision(), 0);
            }).kind(),
            ErrorKind::kInvalidArgument);
}

TEST(LatencyProperties, MonotoneInBatchAndScaling) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Scenario s = generate_small_instance(seed, 3, 5);
    Rng rng = make_rng({seed, 77});
    Decision d;
    for (int i = 0; i < 3; ++i) {
      d.batch.push_back(static_cast<int>(uniform_int(rng, 1, 20)));
      d.cut.push_back(static_cast<int>(uniform_int(rng, 1, 5)));
    }
    const LatencyBreakdown base = round_latency(s, d);
    for (int i = 0; i < 3; ++i) {
      Decision more = d;
      ++more.batch[i];
      const LatencyBreakdown b = round_latency(s, more);
      EXPECT_GE(b.split_training, base.split_training);
      EXPECT_GE(b.devices[i].fp, base.devices[i].fp);
      EXPECT_GE(b.devices[i].act_up, base.devices[i].act_up);
      EXPECT_GE(b.devices[i].grad_down, base.devices[i].grad_down);
      EXPECT_GE(b.devices[i].bp, base.devices[i].bp);
    }
    // Compute scaling divides compute terms; link scaling divides transfers.
    Scenario fast = s;
    for (DeviceProfile& dev : fast.devices) dev.compute_flops *= 4.0;
    fast.server.compute_flops *= 4.0;
    const LatencyBreakdown c = round_latency(fast, d);
    EXPECT_LE(rel_diff(c.server_fp, base.server_fp / 4.0), 1e-15);
    EXPECT_LE(rel_diff(c.devices[0].bp, base.devices[0].bp / 4.0), 1e-15);
    EXPECT_EQ(c.devices[0].act_up, base.devices[0].act_up);
    Scenario wide = s;
    for (DeviceProfile& dev : wide.devices) {
      dev.up_rate_edge *= 4.0;
      dev.down_rate_edge *= 4.0;
      dev.up_rate_fed *= 4.0;
      dev.down_rate_fed *= 4.0;
    }
    wide.server.up_rate_fed *= 4.0;
    wide.server.down_rate_fed *= 4.0;
    const LatencyBreakdown w = round_latency(wide, d);
    EXPECT_LE(rel_diff(w.aggregation, base.aggregation / 4.0), 1e-15);
    EXPECT_LE(rel_diff(w.devices[2].grad_down, base.devices[2].grad_down / 4.0), 1e-15);
    EXPECT_EQ(w.devices[2].fp, base.devices[2].fp);
    EXPECT_EQ(recompose_split_training(base), base.split_training);
  }
}

TEST(Memory, StrictInequalityAndCap) {
  Scenario s = desk_scenario();
  const CumulativeStats stats = cumulative_stats(s.layers);
  // cut 2: per sample 12e6 + 9e6 bits, fixed 6e6 + 3e6.
  s.devices[0].memory_bits = 9e6 + 4 * 21e6;
  EXPECT_FALSE(fits_memory(s, stats, 0, 4, 2));
  EXPECT_TRUE(fits_memory(s, stats, 0, 3, 2));
  EXPECT_EQ(max_batch_for_memory(s, stats, 0, 2, 64), 3);
  EXPECT_EQ(max_batch_for_memory(s, stats, 0, 2, 2), 2);
  s.devices[0].memory_bits = 9e6;
  EXPECT_EQ(max_batch_for_memory(s, stats, 0, 2, 64), 0);
}

}  // namespace
}  // namespace sfl
