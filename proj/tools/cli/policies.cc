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

#include "policies.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sfl/convergence.h"
#include "sfl/error.h"
#include "sfl/random.h"
#include "sfl/split_point.h"

namespace sfl::cli {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t policy_key(Policy p) { return 0xB45E0ULL + static_cast<std::uint64_t>(p); }

// Largest batch (<= limit) per cut for one device; 0 where nothing fits.
std::vector<int> device_caps(const Scenario& scenario, const CumulativeStats& stats,
                             int device, int limit) {
  std::vector<int> caps(scenario.num_layers());
  for (int c = 1; c <= scenario.num_layers(); ++c) {
    caps[c - 1] = max_batch_for_memory(scenario, stats, device, c, limit);
  }
  return caps;
}

std::vector<int> random_cuts(const Scenario& scenario, const CumulativeStats& stats,
                             Rng& rng) {
  std::vector<int> cuts(scenario.num_devices());
  for (int i = 0; i < scenario.num_devices(); ++i) {
    const std::vector<int> caps = device_caps(scenario, stats, i, 1);
    std::vector<int> allowed;
    for (int c = 1; c <= scenario.num_layers(); ++c) {
      if (caps[c - 1] >= 1) allowed.push_back(c);
    }
    if (allowed.empty()) {
      throw Error(ErrorKind::kInfeasible,
                  "device " + std::to_string(i) + " cannot hold one sample at any cut");
    }
    cuts[i] = allowed[uniform_int(rng, 0, static_cast<std::int64_t>(allowed.size()) - 1)];
  }
  return cuts;
}

// Uniform draw in 1..kRandomBatchMax, clipped to the memory cap at `cuts`.
std::vector<int> random_batch(const Scenario& scenario, const CumulativeStats& stats,
                              const std::vector<int>& cuts, Rng& rng) {
  std::vector<int> batch(scenario.num_devices());
  for (int i = 0; i < scenario.num_devices(); ++i) {
    const int b = static_cast<int>(uniform_int(rng, 1, kRandomBatchMax));
    const int cap = max_batch_for_memory(scenario, stats, i, cuts[i], kRandomBatchMax);
    if (cap < 1) {
      throw Error(ErrorKind::kInfeasible,
                  "device " + std::to_string(i) + " cannot hold one sample at cut " +
                      std::to_string(cuts[i]));
    }
    batch[i] = std::min(b, cap);
  }
  return batch;
}

}  // namespace

const char* policy_name(Policy policy) {
  switch (policy) {
    case Policy::kHasfl: return "hasfl";
    case Policy::kRbsRms: return "rbs-rms";
    case Policy::kRbsHams: return "rbs-hams";
    case Policy::kHabsRms: return "habs-rms";
  }
  return "?";
}

Policy parse_policy(const std::string& name) {
  for (Policy p : kAllPolicies) {
    if (name == policy_name(p)) return p;
  }
  throw Error(ErrorKind::kInvalidArgument,
              "unknown policy \"" + name + "\" (expected hasfl, rbs-rms, rbs-hams or habs-rms)");
}

PolicyOutcome decide(Policy policy, const Scenario& scenario,
                     const PolicyOptions& options) {
  PolicyOutcome out;
  if (policy == Policy::kHasfl) {
    out.bcd = bcd_optimize(scenario, options.bcd);
    out.decision = out.bcd->decision;
    return out;
  }
  const CumulativeStats stats = cumulative_stats(scenario.layers);
  Rng rng = make_rng({options.seed, policy_key(policy), options.draw});
  const int n = scenario.num_devices();
  switch (policy) {
    case Policy::kRbsRms: {
      out.decision.cut = random_cuts(scenario, stats, rng);
      out.decision.batch = random_batch(scenario, stats, out.decision.cut, rng);
      break;
    }
    case Policy::kRbsHams: {
      // Clip at cut 1, where memory caps are largest, so every device keeps
      // at least one allowed cut.
      out.decision.batch = random_batch(scenario, stats, std::vector<int>(n, 1), rng);
      try {
        DinkelbachOptions dk = options.bcd.dinkelbach;
        out.decision.cut = solve_ms_dinkelbach(scenario, out.decision.batch, dk).cuts;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kInfeasible) throw;
        out.decision.cut.assign(n, 1);
        out.note = "no cut assignment has a positive bound denominator; using cut 1";
      }
      break;
    }
    case Policy::kHabsRms: {
      out.decision.cut = random_cuts(scenario, stats, rng);
      try {
        out.decision.batch =
            optimize_batch_for_cuts(scenario, out.decision.cut, options.bcd).decision.batch;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kInfeasible) throw;
        out.decision.batch.resize(n);
        for (int i = 0; i < n; ++i) {
          out.decision.batch[i] = max_batch_for_memory(scenario, stats, i, out.decision.cut[i],
                                                       options.bcd.max_batch);
        }
        out.note = "no batch vector has a positive bound denominator; using memory caps";
      }
      break;
    }
    case Policy::kHasfl:
      break;
  }
  return out;
}

Evaluation evaluate_decision(const Scenario& scenario, const Decision& decision) {
  Evaluation ev;
  ev.latency = round_latency(scenario, decision);
  const BoundInputs in = make_bound_inputs(scenario, decision);
  if (!fits_memory(scenario, decision)) {
    ev.infeasible = "memory constraint violated";
  } else if (rounds_denominator(in) <= 0.0L) {
    ev.infeasible = describe_infeasibility(in.target_eps, variance_term(in), drift_term(in));
  }
  if (!ev.infeasible.empty()) {
    ev.theta = ev.rounds = ev.total_time = kInf;
    return ev;
  }
  const RoundsEstimate r = min_rounds(in);
  ev.rounds = r.rounds;
  ev.ill_conditioned = r.ill_conditioned;
  ev.theta = objective_theta(scenario, decision);
  if (r.rounds > 1e15) {  // beyond any runnable length
    ev.total_time = kInf;
    return ev;
  }
  ev.rounds_ceil = static_cast<long>(std::ceil(r.rounds));
  ev.total_time = ev.rounds_ceil >= 1 ? total_time(scenario, decision, ev.rounds_ceil) : 0.0;
  return ev;
}

}  // namespace sfl::cli
