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

// Synthetic labelled data and its split across devices.

#ifndef SFL_SIM_DATA_H_
#define SFL_SIM_DATA_H_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sfl::sim {

struct Dataset {
  Eigen::MatrixXd features;  // dim x n
  std::vector<int> labels;
  int num_classes = 0;

  int size() const { return static_cast<int>(labels.size()); }
};

struct BlobConfig {
  int samples = 1200;
  int dim = 8;
  int classes = 4;
  double center_spread = 2.0;  // std of class centres
  double noise = 1.0;          // std of samples around their centre
};

// Gaussian blobs; samples are assigned to classes round-robin.
Dataset make_blobs(std::uint64_t seed, const BlobConfig& config = {});

enum class PartitionMode { kIid, kNonIid };
const char* partition_mode_name(PartitionMode mode);
PartitionMode parse_partition_mode(const std::string& name);

struct DataPartition {
  PartitionMode mode = PartitionMode::kIid;
  std::vector<std::vector<int>> device_samples;

  int num_devices() const { return static_cast<int>(device_samples.size()); }
};

// IID: shuffle and deal equal contiguous blocks. Non-IID: sort by label,
// cut into 2N equal shards and hand each device two random shards. Throws
// Error(kInvalidArgument) when the sizes do not divide evenly.
DataPartition partition_data(const Dataset& data, int num_devices,
                             PartitionMode mode, std::uint64_t seed);

}  // namespace sfl::sim

#endif  // SFL_SIM_DATA_H_
