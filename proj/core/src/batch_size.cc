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

#include "sfl/batch_size.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "sfl/error.h"
#include "sfl/latency.h"
#include "sfl/split_point.h"

namespace sfl {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Slack when turning a latency cap into an integer, so that the batch that
// defined a tight T3/T4 stays admissible despite rounding.
constexpr double kCapSlack = 1e-9;
constexpr double kExactCandidateLimit = 1e5;

double stage_cap(double budget, double per_sample) {
  if (per_sample <= 0.0) return kInf;
  return budget / per_sample;
}

int integer_cap(double ratio) {
  if (ratio >= 1e9) return 1000000000;
  return static_cast<int>(std::floor(ratio + kCapSlack));
}

// Sums over devices with C_i > 0 use the iterate; devices whose server cost
// is zero sit at their cap, which is where the rounding rule sends them.
struct Sums {
  double inv = 0.0;   // sum_k 1 / b_k
  double cost = 0.0;  // sum_k b_k C_k
};

Sums batch_sums(const BsSubproblem& sub, const std::vector<double>& x) {
  Sums s;
  for (int k = 0; k < sub.num_devices(); ++k) {
    s.inv += 1.0 / x[k];
    s.cost += x[k] * sub.server_cost[k];
  }
  return s;
}

// phi(x) = C (A - S_o - B/x) - (P_o + x C + D) B / x^2 with the other
// devices frozen; increasing and concave in x on its domain.
struct Coordinate {
  double c, a_rest, b, p_rest;
  double phi(double x) const {
    return c * (a_rest - b / x) - (p_rest + x * c) * b / (x * x);
  }
  double dphi(double x) const {
    return 2.0 * (p_rest + x * c) * b / (x * x * x);
  }
  bool valid(double x) const { return x > 0.0 && a_rest - b / x > 0.0; }
};

double bisect(const Coordinate& co, int* fallbacks) {
  ++*fallbacks;
  double lo = co.b / co.a_rest;  // phi -> -inf at the domain edge
  double hi = std::max(2.0 * lo, 1.0);
  while (co.phi(hi) <= 0.0 && hi < 1e300) hi *= 2.0;
  for (int it = 0; it < 2000 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (co.phi(mid) > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Active-set pass over the unconstrained roots. Pinned devices fold into A
// (through 1/b) and D (through b C), which leaves a problem of the same form
// for the free ones. Falls back to the last iterate when the reduced A stops
// being positive.
std::vector<double> box_stationary(const BsSubproblem& sub,
                                   const std::vector<double>& roots,
                                   const NewtonJacobiOptions& nj) {
  const int n = sub.num_devices();
  std::vector<double> x = roots;
  std::vector<bool> pinned(n, false);
  for (int round = 0; round < n; ++round) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      if (pinned[i]) continue;
      if (x[i] <= 1.0) {
        x[i] = 1.0;
      } else if (x[i] >= sub.kappa[i]) {
        x[i] = sub.kappa[i];
      } else {
        continue;
      }
      pinned[i] = true;
      changed = true;
    }
    if (!changed) break;
    BsSubproblem rest;
    rest.scale = sub.scale;
    rest.a = sub.a;
    rest.b = sub.b;
    rest.fixed_latency = sub.fixed_latency;
    std::vector<int> index;
    for (int i = 0; i < n; ++i) {
      if (pinned[i]) {
        rest.a -= sub.b / x[i];
        rest.fixed_latency += x[i] * sub.server_cost[i];
      } else {
        index.push_back(i);
        rest.server_cost.push_back(sub.server_cost[i]);
        rest.kappa.push_back(sub.kappa[i]);
        rest.cap.push_back(sub.cap[i]);
      }
    }
    if (index.empty() || !(rest.a > 0.0)) break;
    std::vector<double> r;
    try {
      r = newton_jacobi_roots(rest, {}, nj).roots;
    } catch (const Error&) {
      break;
    }
    for (std::size_t k = 0; k < index.size(); ++k) x[index[k]] = r[k];
  }
  return x;
}

}  // namespace

BsSubproblem make_bs_subproblem(const Scenario& scenario,
                                const std::vector<int>& cuts,
                                const AuxiliaryT& aux, int max_batch) {
  const int n = scenario.num_devices();
  if (static_cast<int>(cuts.size()) != n) {
    throw Error(ErrorKind::kInvalidArgument, "make_bs_subproblem: cuts size mismatch");
  }
  if (max_batch < 1) {
    throw Error(ErrorKind::kInvalidArgument, "make_bs_subproblem: max_batch must be >= 1");
  }
  const LayerProfile& layers = scenario.layers;
  const TrainingParams& tr = scenario.training;
  const CumulativeStats stats = cumulative_stats(layers);
  BsSubproblem sub;
  sub.scale = 2.0 * tr.loss_gap / tr.lr;
  const double drift_coef =
      tr.agg_interval > 1 ? 4.0 * tr.smoothness * tr.smoothness * tr.lr *
                                tr.lr * tr.agg_interval * tr.agg_interval
                          : 0.0;
  sub.a = tr.target_eps - drift_coef * aux.max_moment;
  double var_sum = 0.0;
  for (double v : layers.grad_var) var_sum += v;
  sub.b = tr.smoothness * tr.lr / (static_cast<double>(n) * n) * var_sum;
  sub.fixed_latency = aux.max_fp_up + aux.max_down_bp +
                      (aux.max_agg_up + aux.max_agg_down) / tr.agg_interval;
  for (int i = 0; i < n; ++i) {
    const int c = cuts[i];
    if (c < 1 || c > layers.num_layers()) {
      throw Error(ErrorKind::kInvalidArgument, "make_bs_subproblem: cut out of range");
    }
    const DeviceProfile& d = scenario.devices[i];
    sub.server_cost.push_back((layers.fp_total() - layers.fp(c) +
                               layers.bp_total() - layers.bp(c)) /
                              scenario.server.compute_flops);
    const double room = d.memory_bits - layers.opt_state(c) - layers.params(c);
    const double per_sample_bits = stats.act(c) + stats.grad(c);
    const double mem_ratio = per_sample_bits > 0.0
                                 ? room / per_sample_bits
                                 : (room > 0.0 ? kInf : 0.0);
    const double up_ratio = stage_cap(
        aux.max_fp_up, layers.fp(c) / d.compute_flops + layers.act(c) / d.up_rate_edge);
    const double down_ratio = stage_cap(
        aux.max_down_bp,
        layers.grad(c) / d.down_rate_edge + layers.bp(c) / d.compute_flops);
    sub.kappa.push_back(std::min({mem_ratio, up_ratio, down_ratio,
                                  static_cast<double>(max_batch)}));
    const int mem_cap = max_batch_for_memory(scenario, stats, i, c, max_batch);
    sub.cap.push_back(
        std::min({mem_cap, integer_cap(up_ratio), integer_cap(down_ratio), max_batch}));
  }
  return sub;
}

double bs_objective(const BsSubproblem& sub, const std::vector<double>& batch) {
  long double inv = 0.0L;
  long double cost = 0.0L;
  for (int k = 0; k < sub.num_devices(); ++k) {
    inv += 1.0L / batch[k];
    cost += static_cast<long double>(batch[k]) * sub.server_cost[k];
  }
  const long double den = static_cast<long double>(sub.a) - sub.b * inv;
  if (!(den > 0.0L)) return kInf;
  return static_cast<double>(sub.scale * (cost + sub.fixed_latency) / den);
}

double bs_objective(const BsSubproblem& sub, const std::vector<int>& batch) {
  return bs_objective(sub, std::vector<double>(batch.begin(), batch.end()));
}

double stationarity(const BsSubproblem& sub, const std::vector<double>& batch,
                    int device) {
  const Sums s = batch_sums(sub, batch);
  const double x = batch[device];
  return sub.server_cost[device] * (sub.a - sub.b * s.inv) -
         (s.cost + sub.fixed_latency) * sub.b / (x * x);
}

NewtonJacobiResult newton_jacobi_roots(const BsSubproblem& sub,
                                       std::vector<double> init,
                                       const NewtonJacobiOptions& options) {
  const int n = sub.num_devices();
  NewtonJacobiResult out;
  out.roots.assign(n, 0.0);

  std::vector<int> active;
  for (int i = 0; i < n; ++i) {
    if (sub.server_cost[i] > 0.0) active.push_back(i);
  }
  if (sub.b <= 0.0) {
    // No variance: the objective increases in every b_i with C_i > 0.
    for (int i = 0; i < n; ++i) {
      out.roots[i] = sub.server_cost[i] > 0.0 ? 0.0 : kUnboundedBatch;
    }
    return out;
  }
  if (sub.a <= 0.0) {
    throw Error(ErrorKind::kInfeasible,
                "batch block: target is below the drift floor (A <= 0)");
  }

  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) {
    if (sub.server_cost[i] <= 0.0) {
      x[i] = std::max(1.0, static_cast<double>(sub.cap.empty() ? 1 : sub.cap[i]));
    } else if (static_cast<int>(init.size()) == n && init[i] > 0.0) {
      x[i] = init[i];
    } else {
      const double kappa = sub.kappa.empty() ? kInf : std::max(1.0, sub.kappa[i]);
      const double guess = std::sqrt(sub.b * sub.fixed_latency /
                                     (sub.a * sub.server_cost[i]));
      x[i] = std::clamp(std::isfinite(guess) ? guess : 1.0, 1.0, kappa);
    }
  }
  // Repair an infeasible start by scaling the active batches up.
  for (int guard = 0; sub.a - sub.b * batch_sums(sub, x).inv <= 0.0; ++guard) {
    if (guard > 200 || active.empty()) {
      throw Error(ErrorKind::kInfeasible,
                  "batch block: no batch vector makes the bound denominator positive");
    }
    for (int i : active) x[i] *= 2.0;
  }

  auto residual = [&](const std::vector<double>& v) {
    const Sums s = batch_sums(sub, v);
    double worst = 0.0;
    for (int i : active) {
      const double c = sub.server_cost[i];
      const double lhs = c * (sub.a - sub.b * s.inv);
      const double rhs = (s.cost + sub.fixed_latency) * sub.b / (v[i] * v[i]);
      const double scale = std::abs(lhs) + rhs;
      if (scale > 0.0) worst = std::max(worst, std::abs(lhs - rhs) / scale);
    }
    return worst;
  };

  out.residual = residual(x);
  while (out.residual > options.tol) {
    if (out.sweeps >= options.max_sweeps) {
      throw Error(ErrorKind::kNonConvergence,
                  "Newton-Jacobi: residual " + std::to_string(out.residual) +
                      " after " + std::to_string(out.sweeps) + " sweeps");
    }
    const Sums s = batch_sums(sub, x);
    std::vector<double> next = x;
    for (int i : active) {
      Coordinate co{sub.server_cost[i], sub.a - sub.b * (s.inv - 1.0 / x[i]),
                    sub.b, s.cost - x[i] * sub.server_cost[i]};
      co.p_rest += sub.fixed_latency;
      if (co.a_rest <= 0.0) {
        // Objective decreases in x_i everywhere; move right.
        next[i] = 2.0 * x[i];
        continue;
      }
      double cur = x[i];
      if (!co.valid(cur)) cur = bisect(co, &out.bisection_fallbacks);
      double step = co.phi(cur) / co.dphi(cur);
      double cand = cur - step;
      int halvings = 0;
      while (!co.valid(cand) && halvings < 60) {
        step *= options.damping;
        cand = cur - step;
        ++halvings;
      }
      if (!co.valid(cand) || !std::isfinite(cand)) {
        cand = bisect(co, &out.bisection_fallbacks);
      }
      next[i] = cand;
    }
    // A Jacobi step can jointly overshoot the denominator; pull back halfway
    // towards the previous iterate until it is positive again.
    for (int guard = 0; sub.a - sub.b * batch_sums(sub, next).inv <= 0.0; ++guard) {
      if (guard > 60) {
        throw Error(ErrorKind::kNonConvergence,
                    "Newton-Jacobi: iterate left the feasible region");
      }
      for (int i : active) next[i] = x[i] + options.damping * (next[i] - x[i]);
    }
    x = std::move(next);
    ++out.sweeps;
    out.residual = residual(x);
  }
  for (int i = 0; i < n; ++i) {
    out.roots[i] = sub.server_cost[i] > 0.0 ? x[i] : kUnboundedBatch;
  }
  return out;
}

std::vector<int> batch_candidates(double stationary, int cap) {
  std::vector<int> out;
  if (cap < 1) return out;
  auto add = [&](double v) {
    if (!(v >= 1.0)) v = 1.0;
    if (v > cap) v = cap;
    out.push_back(static_cast<int>(v));
  };
  add(1.0);
  if (std::isfinite(stationary)) {
    add(std::floor(stationary));
    add(std::ceil(stationary));
  }
  add(cap);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

BsCase classify_stationary(double stationary, double kappa) {
  if (stationary <= 1.0) return BsCase::kLower;
  if (stationary >= kappa) return BsCase::kUpper;
  return BsCase::kMiddle;
}

BsSolution solve_bs(const BsSubproblem& sub, BsMode mode,
                    const NewtonJacobiOptions& nj) {
  const int n = sub.num_devices();
  for (int i = 0; i < n; ++i) {
    if (sub.cap[i] < 1) {
      throw Error(ErrorKind::kInfeasible,
                  "batch block: device " + std::to_string(i) +
                      " cannot hold a single sample at its cut (cap < 1)");
    }
  }
  BsSolution sol;
  sol.stationary = newton_jacobi_roots(sub, {}, nj).roots;
  sol.box_stationary = box_stationary(sub, sol.stationary, nj);

  std::vector<std::vector<int>> candidates(n);
  double product = 1.0;
  for (int i = 0; i < n; ++i) {
    sol.cases.push_back(classify_stationary(sol.stationary[i], sub.kappa[i]));
    candidates[i] = batch_candidates(sol.stationary[i], sub.cap[i]);
    for (int v : batch_candidates(sol.box_stationary[i], sub.cap[i])) {
      if (std::find(candidates[i].begin(), candidates[i].end(), v) == candidates[i].end()) {
        candidates[i].push_back(v);
      }
    }
    std::sort(candidates[i].begin(), candidates[i].end());
    product *= static_cast<double>(candidates[i].size());
  }
  const bool exact = mode == BsMode::kExact ||
                     (mode == BsMode::kAuto && product <= kExactCandidateLimit);
  sol.exact = exact;

  auto better = [](double value, double best) {
    return value < best - kTieRelTol * std::abs(best);
  };

  if (exact) {
    std::vector<int> idx(n, 0);
    std::vector<int> batch(n);
    double best = kInf;
    while (true) {
      for (int i = 0; i < n; ++i) batch[i] = candidates[i][idx[i]];
      const double value = bs_objective(sub, batch);
      if (std::isfinite(value) && (sol.batch.empty() || better(value, best))) {
        best = value;
        sol.batch = batch;
      }
      int k = n - 1;
      while (k >= 0 && ++idx[k] == static_cast<int>(candidates[k].size())) {
        idx[k] = 0;
        --k;
      }
      if (k < 0) break;
    }
    if (sol.batch.empty()) {
      throw Error(ErrorKind::kInfeasible,
                  "batch block: no candidate batch vector has a positive bound denominator");
    }
    sol.objective = best;
    return sol;
  }

  // Three-case rule on the box optimum, middle devices start at the floor,
  // then one pass in index order picks the better neighbour given the others.
  std::vector<int> batch(n);
  std::vector<BsCase> box_cases(n);
  for (int i = 0; i < n; ++i) {
    const double x = sol.box_stationary[i];
    box_cases[i] = classify_stationary(x, sub.kappa[i]);
    switch (box_cases[i]) {
      case BsCase::kLower: batch[i] = 1; break;
      case BsCase::kUpper: batch[i] = sub.cap[i]; break;
      case BsCase::kMiddle:
        batch[i] = std::clamp(static_cast<int>(std::floor(x)), 1, sub.cap[i]);
        break;
    }
  }
  for (int i = 0; i < n; ++i) {
    if (box_cases[i] != BsCase::kMiddle) continue;
    const double x = sol.box_stationary[i];
    const int lo = std::clamp(static_cast<int>(std::floor(x)), 1, sub.cap[i]);
    const int hi = std::clamp(static_cast<int>(std::ceil(x)), 1, sub.cap[i]);
    batch[i] = lo;
    const double at_lo = bs_objective(sub, batch);
    batch[i] = hi;
    const double at_hi = bs_objective(sub, batch);
    batch[i] = better(at_hi, at_lo) ? hi : lo;
  }
  sol.objective = bs_objective(sub, batch);
  if (!std::isfinite(sol.objective)) {
    throw Error(ErrorKind::kInfeasible,
                "batch block: rounded batch vector has a non-positive bound denominator");
  }
  sol.batch = std::move(batch);
  return sol;
}

BsSolution solve_bs(const Scenario& scenario, const std::vector<int>& cuts,
                    const AuxiliaryT& aux, int max_batch, BsMode mode) {
  return solve_bs(make_bs_subproblem(scenario, cuts, aux, max_batch), mode);
}

}  // namespace sfl
