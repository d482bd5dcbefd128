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

#include "sfl/sim/data.h"

#include <algorithm>
#include <numeric>

#include "sfl/error.h"
#include "sfl/random.h"

namespace sfl::sim {

Dataset make_blobs(std::uint64_t seed, const BlobConfig& config) {
  if (config.samples < 1 || config.dim < 1 || config.classes < 1) {
    throw Error(ErrorKind::kInvalidArgument,
                "make_blobs: samples, dim and classes must be >= 1");
  }
  Rng rng = make_rng({seed, 0xB10BULL});
  Eigen::MatrixXd centers(config.dim, config.classes);
  for (int c = 0; c < config.classes; ++c) {
    for (int d = 0; d < config.dim; ++d) {
      centers(d, c) = config.center_spread * standard_normal(rng);
    }
  }
  Dataset data;
  data.num_classes = config.classes;
  data.features.resize(config.dim, config.samples);
  data.labels.resize(config.samples);
  for (int k = 0; k < config.samples; ++k) {
    const int c = k % config.classes;
    data.labels[k] = c;
    for (int d = 0; d < config.dim; ++d) {
      data.features(d, k) = centers(d, c) + config.noise * standard_normal(rng);
    }
  }
  return data;
}

const char* partition_mode_name(PartitionMode mode) {
  return mode == PartitionMode::kIid ? "iid" : "noniid";
}

PartitionMode parse_partition_mode(const std::string& name) {
  if (name == "iid") return PartitionMode::kIid;
  if (name == "noniid" || name == "non-iid") return PartitionMode::kNonIid;
  throw Error(ErrorKind::kInvalidArgument,
              "unknown partition mode \"" + name + "\" (iid | noniid)");
}

DataPartition partition_data(const Dataset& data, int num_devices,
                             PartitionMode mode, std::uint64_t seed) {
  if (num_devices < 1) {
    throw Error(ErrorKind::kInvalidArgument, "partition_data: need >= 1 device");
  }
  const int n = data.size();
  const int pieces = mode == PartitionMode::kIid ? num_devices : 2 * num_devices;
  if (n == 0 || n % pieces != 0) {
    throw Error(ErrorKind::kInvalidArgument,
                "partition_data: " + std::to_string(n) +
                    " samples do not split into " + std::to_string(pieces) +
                    " equal parts");
  }
  Rng rng = make_rng({seed, 0x5A4DULL, static_cast<std::uint64_t>(num_devices)});
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  DataPartition out;
  out.mode = mode;
  out.device_samples.resize(num_devices);
  if (mode == PartitionMode::kIid) {
    shuffle(order, rng);
    const int per = n / num_devices;
    for (int i = 0; i < num_devices; ++i) {
      out.device_samples[i].assign(order.begin() + i * per, order.begin() + (i + 1) * per);
    }
    return out;
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return data.labels[a] < data.labels[b]; });
  const int shard = n / pieces;
  std::vector<int> shards(pieces);
  std::iota(shards.begin(), shards.end(), 0);
  shuffle(shards, rng);
  for (int i = 0; i < num_devices; ++i) {
    for (int s : {shards[2 * i], shards[2 * i + 1]}) {
      out.device_samples[i].insert(out.device_samples[i].end(),
                                   order.begin() + s * shard,
                                   order.begin() + (s + 1) * shard);
    }
  }
  return out;
}

}  // namespace sfl::sim
