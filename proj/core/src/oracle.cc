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

#include "sfl/oracle.h"

#include <cmath>
#include <limits>
#include <string>

#include "sfl/error.h"

namespace sfl {
namespace {

// Same relative tie window as the solvers, restated here on purpose.
constexpr double kOracleTie = 1e-12;

// Odometer over a mixed-radix vector with digits in [lo, hi_k]; false once it
// wraps around.
bool advance(std::vector<int>& digits, int lo, const std::vector<int>& hi) {
  for (int k = static_cast<int>(digits.size()) - 1; k >= 0; --k) {
    if (++digits[k] <= hi[k]) return true;
    digits[k] = lo;
  }
  return false;
}

double grid_size(int radix, int n) { return std::pow(static_cast<double>(radix), n); }

void guard_grid(double size, const char* what) {
  if (size > kMaxOracleGrid) {
    throw Error(ErrorKind::kGridTooLarge,
                std::string(what) + ": grid of " + std::to_string(size) +
                    " points exceeds the oracle limit of 1e7");
  }
}

bool feasible_point(const Scenario& scenario, const Decision& d) {
  return fits_memory(scenario, d) &&
         rounds_denominator(make_bound_inputs(scenario, d)) > 0.0L;
}

}  // namespace

JointOptimum brute_force_joint(const Scenario& scenario, int max_batch) {
  if (max_batch < 1) {
    throw Error(ErrorKind::kInvalidArgument, "brute_force_joint: max_batch must be >= 1");
  }
  const int n = scenario.num_devices();
  const int l = scenario.num_layers();
  guard_grid(grid_size(max_batch, n) * grid_size(l, n), "brute_force_joint");

  // Pass 1 finds the minimum, pass 2 the first (cuts, batch) in
  // lexicographic order within the tie window.
  JointOptimum out;
  double best = std::numeric_limits<double>::infinity();
  bool any = false;
  for (int pass = 0; pass < 2; ++pass) {
    Decision d{std::vector<int>(n, 1), std::vector<int>(n, 1)};
    do {
      d.batch.assign(n, 1);
      do {
        if (pass == 0) ++out.evaluated;
        if (!feasible_point(scenario, d)) continue;
        const double theta = objective_theta(scenario, d);
        if (pass == 0) {
          any = true;
          if (theta < best) best = theta;
        } else if (theta <= best + kOracleTie * std::abs(best)) {
          out.decision = d;
          out.theta = theta;
          return out;
        }
      } while (advance(d.batch, 1, std::vector<int>(n, max_batch)));
    } while (advance(d.cut, 1, std::vector<int>(n, l)));
    if (!any) {
      throw Error(ErrorKind::kInfeasible,
                  "brute_force_joint: no decision fits memory with a positive "
                  "bound denominator");
    }
  }
  throw Error(ErrorKind::kInfeasible, "brute_force_joint: internal tie search failed");
}

CutOptimum enumerate_cuts(const Scenario& scenario,
                          const std::vector<int>& batch) {
  const int n = scenario.num_devices();
  const int l = scenario.num_layers();
  guard_grid(grid_size(l, n), "enumerate_cuts");
  CutOptimum out;
  double best = std::numeric_limits<double>::infinity();
  bool any = false;
  for (int pass = 0; pass < 2; ++pass) {
    Decision d{batch, std::vector<int>(n, 1)};
    do {
      if (pass == 0) ++out.evaluated;
      if (!feasible_point(scenario, d)) continue;
      const double value = objective_theta_prime(scenario, d);
      if (pass == 0) {
        any = true;
        if (value < best) best = value;
      } else if (value <= best + kOracleTie * std::abs(best)) {
        out.cuts = d.cut;
        out.objective = value;
        return out;
      }
    } while (advance(d.cut, 1, std::vector<int>(n, l)));
    if (!any) {
      throw Error(ErrorKind::kInfeasible,
                  "enumerate_cuts: no cut assignment is feasible at these batch sizes");
    }
  }
  throw Error(ErrorKind::kInfeasible, "enumerate_cuts: internal tie search failed");
}

BatchOptimum enumerate_batches(double scale, double a, double b,
                               const std::vector<double>& server_cost,
                               double fixed_latency,
                               const std::vector<int>& upper) {
  const int n = static_cast<int>(server_cost.size());
  if (static_cast<int>(upper.size()) != n) {
    throw Error(ErrorKind::kInvalidArgument, "enumerate_batches: size mismatch");
  }
  double size = 1.0;
  for (int u : upper) {
    if (u < 1) {
      throw Error(ErrorKind::kInfeasible, "enumerate_batches: empty box");
    }
    size *= u;
  }
  guard_grid(size, "enumerate_batches");

  auto value = [&](const std::vector<int>& batch) {
    double cost = fixed_latency;
    double inv = 0.0;
    for (int k = 0; k < n; ++k) {
      cost += batch[k] * server_cost[k];
      inv += 1.0 / batch[k];
    }
    const double den = a - b * inv;
    return den > 0.0 ? scale * cost / den : std::numeric_limits<double>::infinity();
  };

  BatchOptimum out;
  double best = std::numeric_limits<double>::infinity();
  for (int pass = 0; pass < 2; ++pass) {
    std::vector<int> batch(n, 1);
    do {
      const double v = value(batch);
      if (pass == 0) {
        if (v < best) best = v;
      } else if (std::isfinite(v) && v <= best + kOracleTie * std::abs(best)) {
        out.batch = batch;
        out.objective = v;
        return out;
      }
    } while (advance(batch, 1, upper));
    if (!std::isfinite(best)) {
      throw Error(ErrorKind::kInfeasible,
                  "enumerate_batches: no batch vector has a positive denominator");
    }
  }
  throw Error(ErrorKind::kInfeasible, "enumerate_batches: internal tie search failed");
}

}  // namespace sfl
