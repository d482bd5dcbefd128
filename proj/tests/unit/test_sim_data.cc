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

#include <algorithm>
#include <set>

#include "sfl/sim/data.h"
#include "support/test_support.h"

namespace sfl::sim {
namespace {

using test::capture_error;

Dataset blobs(int samples, int classes) {
  BlobConfig cfg;
  cfg.samples = samples;
  cfg.classes = classes;
  return make_blobs(17, cfg);
}

void expect_exact_cover(const Dataset& data, const DataPartition& part) {
  std::vector<int> all;
  for (const auto& s : part.device_samples) all.insert(all.end(), s.begin(), s.end());
  std::sort(all.begin(), all.end());
  ASSERT_EQ(static_cast<int>(all.size()), data.size());
  for (int k = 0; k < data.size(); ++k) EXPECT_EQ(all[k], k);
}

TEST(Blobs, ShapeAndBalancedLabels) {
  const Dataset d = blobs(120, 4);
  EXPECT_EQ(d.features.rows(), 8);
  EXPECT_EQ(d.features.cols(), 120);
  EXPECT_EQ(std::count(d.labels.begin(), d.labels.end(), 2), 30);
  EXPECT_EQ(capture_error([] { make_blobs(1, BlobConfig{0, 8, 4, 1.0, 1.0}); }).kind(),
            ErrorKind::kInvalidArgument);
}

TEST(Partition, IidEqualSharesCoverEverySample) {
  const Dataset d = blobs(1200, 10);
  const DataPartition p = partition_data(d, 20, PartitionMode::kIid, 1);
  for (const auto& s : p.device_samples) EXPECT_EQ(s.size(), 60u);
  expect_exact_cover(d, p);
}

TEST(Partition, NonIidTwoShardsPerDevice) {
  // 40 shards of 30 samples; each class fills exactly four shards.
  const Dataset d = blobs(1200, 10);
  const DataPartition p = partition_data(d, 20, PartitionMode::kNonIid, 1);
  expect_exact_cover(d, p);
  for (const auto& s : p.device_samples) {
    EXPECT_EQ(s.size(), 60u);
    std::set<int> labels;
    for (int k : s) labels.insert(d.labels[k]);
    EXPECT_LE(labels.size(), 2u);
  }
}

TEST(Partition, DeterministicPerSeed) {
  const Dataset d = blobs(240, 4);
  for (PartitionMode m : {PartitionMode::kIid, PartitionMode::kNonIid}) {
    EXPECT_EQ(partition_data(d, 6, m, 3).device_samples,
              partition_data(d, 6, m, 3).device_samples);
    EXPECT_NE(partition_data(d, 6, m, 3).device_samples,
              partition_data(d, 6, m, 4).device_samples);
  }
}

TEST(Partition, RejectsUnevenSplits) {
  const Dataset d = blobs(100, 4);
  EXPECT_EQ(capture_error([&] { partition_data(d, 3, PartitionMode::kIid, 0); }).kind(),
            ErrorKind::kInvalidArgument);
  EXPECT_EQ(capture_error([&] { partition_data(d, 0, PartitionMode::kIid, 0); }).kind(),
            ErrorKind::kInvalidArgument);
  EXPECT_EQ(capture_error([] { parse_partition_mode("dirichlet"); }).kind(),
            ErrorKind::kInvalidArgument);
  EXPECT_EQ(parse_partition_mode("non-iid"), PartitionMode::kNonIid);
}

}  // namespace
}  // namespace sfl::sim
