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

// Decision generators for experiments: the joint optimizer and the three
// random baselines.

#ifndef SFL_TOOLS_POLICIES_H_
#define SFL_TOOLS_POLICIES_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sfl/bcd.h"
#include "sfl/latency.h"
#include "sfl/profiles.h"

namespace sfl::cli {

enum class Policy {
  kHasfl,    // joint batch/cut optimization
  kRbsRms,   // random batch, random cut
  kRbsHams,  // random batch, optimized cut
  kHabsRms,  // optimized batch, random cut
};

inline constexpr Policy kAllPolicies[] = {Policy::kHasfl, Policy::kRbsRms,
                                          Policy::kRbsHams, Policy::kHabsRms};

// Random batches are drawn from 1..kRandomBatchMax.
inline constexpr int kRandomBatchMax = 64;

const char* policy_name(Policy policy);
// Throws Error(kInvalidArgument) on unknown names.
Policy parse_policy(const std::string& name);

struct PolicyOptions {
  BcdOptions bcd;
  std::uint64_t seed = 0;
  std::uint64_t draw = 0;  // separates independent draws under one seed
};

struct PolicyOutcome {
  Decision decision;
  std::optional<BcdResult> bcd;  // set for hasfl
  // Non-empty when a baseline had to fall back (e.g. no positive bound
  // denominator at its random component).
  std::string note;
};

// Random draws only touch memory-feasible choices: a random cut is uniform
// over the layers at which the device holds one sample, and a random batch
// is clipped to the device's memory cap. Throws Error(kInfeasible) for hasfl
// when no decision is feasible, and when some device fits no cut at all.
PolicyOutcome decide(Policy policy, const Scenario& scenario,
                     const PolicyOptions& options);

struct Evaluation {
  double theta = 0.0;        // +inf when the bound denominator is not positive
  double rounds = 0.0;       // continuous round estimate, +inf likewise
  long rounds_ceil = 0;      // 0 when rounds is not finite
  double total_time = 0.0;   // exact time at rounds_ceil, +inf likewise
  bool ill_conditioned = false;
  std::string infeasible;    // reason, empty when feasible
  LatencyBreakdown latency;
};

Evaluation evaluate_decision(const Scenario& scenario, const Decision& decision);

}  // namespace sfl::cli

#endif  // SFL_TOOLS_POLICIES_H_
