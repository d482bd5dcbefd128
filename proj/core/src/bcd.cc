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

#include "sfl/bcd.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

#include "sfl/error.h"

namespace sfl {
namespace {

// Lexicographic order on (cuts, batch), the tie-break shared with the oracle.
bool decision_less(const Decision& a, const Decision& b) {
  return std::tie(a.cut, a.batch) < std::tie(b.cut, b.batch);
}

bool improves(double value, const Decision& decision, double best,
              const Decision& best_decision) {
  const double tie = kTieRelTol * std::abs(best);
  if (value < best - tie) return true;
  if (value > best + tie) return false;
  return decision_less(decision, best_decision);
}

std::vector<int> batch_ladder(int max_batch) {
  std::vector<int> out;
  if (max_batch <= 16) {
    for (int b = 1; b <= max_batch; ++b) out.push_back(b);
    return out;
  }
  for (int b : {1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64}) {
    if (b <= max_batch) out.push_back(b);
  }
  if (out.back() != max_batch) out.push_back(max_batch);
  return out;
}

// Largest batch per device at one homogeneous cut; empty when some device
// cannot hold a single sample there.
std::vector<int> memory_caps(const Scenario& scenario, int cut, int max_batch) {
  const CumulativeStats stats = cumulative_stats(scenario.layers);
  std::vector<int> caps(scenario.num_devices());
  for (int i = 0; i < scenario.num_devices(); ++i) {
    caps[i] = max_batch_for_memory(scenario, stats, i, cut, max_batch);
    if (caps[i] < 1) return {};
  }
  return caps;
}

Decision fallback_start(const Scenario& scenario, int max_batch) {
  Decision d;
  d.cut.assign(scenario.num_devices(), 1);
  d.batch = memory_caps(scenario, 1, max_batch);
  return d;
}

void check_options(const BcdOptions& options) {
  if (options.max_batch < 1) {
    throw Error(ErrorKind::kInvalidArgument, "bcd: max_batch must be >= 1");
  }
  if (!(options.tol >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "bcd: tol must be >= 0");
  }
  if (options.max_iters < 1) {
    throw Error(ErrorKind::kInvalidArgument, "bcd: max_iters must be >= 1");
  }
}

// Batch block with the descent safeguard: keeps the current batch when the
// rounded candidate does not improve the objective at fixed auxiliaries.
std::vector<int> batch_step(const Scenario& scenario, const Decision& current,
                            const AuxiliaryT& aux, const BcdOptions& options) {
  const BsSubproblem sub =
      make_bs_subproblem(scenario, current.cut, aux, options.max_batch);
  const BsSolution sol = solve_bs(sub, options.bs_mode);
  const double before = bs_objective(sub, current.batch);
  return sol.objective < before ? sol.batch : current.batch;
}

[[noreturn]] void throw_no_feasible(const Scenario& scenario, int max_batch) {
  const Decision probe = fallback_start(scenario, max_batch);
  if (probe.batch.empty()) {
    throw Error(ErrorKind::kInfeasible,
                "no feasible decision: some device cannot hold one sample at "
                "cut 1 (memory constraint)");
  }
  const BoundInputs in = make_bound_inputs(scenario, probe);
  throw Error(ErrorKind::kInfeasible,
              "no feasible decision: " +
                  describe_infeasibility(in.target_eps, variance_term(in),
                                         drift_term(in)));
}

}  // namespace

bool is_feasible(const Scenario& scenario, const Decision& decision,
                 int max_batch) {
  const int n = scenario.num_devices();
  if (decision.num_devices() != n || static_cast<int>(decision.cut.size()) != n) {
    return false;
  }
  for (int i = 0; i < n; ++i) {
    if (decision.batch[i] < 1 || decision.batch[i] > max_batch) return false;
    if (decision.cut[i] < 1 || decision.cut[i] > scenario.num_layers()) return false;
  }
  if (!fits_memory(scenario, decision)) return false;
  return rounds_denominator(make_bound_inputs(scenario, decision)) > 0.0L;
}

BcdRun bcd_run(const Scenario& scenario, const Decision& init,
               const BcdOptions& options) {
  check_options(options);
  if (!is_feasible(scenario, init, options.max_batch)) {
    throw Error(ErrorKind::kInfeasible,
                "bcd: initial decision violates memory, range or bound-denominator "
                "constraints");
  }
  BcdRun run;
  run.start = init;
  Decision current = init;
  double objective = objective_theta_prime(scenario, current);
  for (int iter = 1; iter <= options.max_iters; ++iter) {
    BcdIteration step;
    step.iteration = iter;
    const AuxiliaryT aux = tight_auxiliary(scenario, current);
    Decision next{batch_step(scenario, current, aux, options), current.cut};
    step.objective_after_bs = objective_theta_prime(scenario, next);

    const MsSolution ms =
        solve_ms_dinkelbach(scenario, next.batch, options.dinkelbach, next.cut);
    next.cut = ms.cuts;
    step.dinkelbach_iters = static_cast<int>(ms.trace.size());
    step.objective = objective_theta_prime(scenario, next);
    step.decision = next;
    run.trace.push_back(step);

    const double change = std::abs(objective - step.objective);
    current = next;
    objective = step.objective;
    if (change <= options.tol) {
      run.converged = true;
      break;
    }
  }
  run.decision = current;
  run.objective = objective_theta(scenario, current);
  return run;
}

std::vector<Decision> bcd_starts(const Scenario& scenario, int max_batch) {
  std::vector<Decision> out;
  const std::vector<int> ladder = batch_ladder(max_batch);
  for (int c = 1; c <= scenario.num_layers(); ++c) {
    const std::vector<int> caps = memory_caps(scenario, c, max_batch);
    if (caps.empty()) continue;
    for (int b0 : ladder) {
      Decision d;
      d.cut.assign(scenario.num_devices(), c);
      for (int cap : caps) d.batch.push_back(std::min(b0, cap));
      if (std::find(out.begin(), out.end(), d) == out.end()) out.push_back(d);
    }
    // Straggler-balanced starts: device k at b0 fixes both stage budgets and
    // every device takes the largest batch that fits in them.
    std::vector<double> up(scenario.num_devices()), down(scenario.num_devices());
    for (int i = 0; i < scenario.num_devices(); ++i) {
      const DeviceProfile& dev = scenario.devices[i];
      up[i] = client_fp_latency(dev, scenario.layers, 1, c) +
              activation_upload_latency(dev, scenario.layers, 1, c);
      down[i] = grad_download_latency(dev, scenario.layers, 1, c) +
                client_bp_latency(dev, scenario.layers, 1, c);
    }
    for (int k = 0; k < scenario.num_devices(); ++k) {
      for (int b0 : ladder) {
        Decision d;
        d.cut.assign(scenario.num_devices(), c);
        for (int i = 0; i < scenario.num_devices(); ++i) {
          double fit = static_cast<double>(caps[i]);
          if (up[i] > 0.0) fit = std::min(fit, std::floor(b0 * up[k] / up[i] + 1e-9));
          if (down[i] > 0.0) fit = std::min(fit, std::floor(b0 * down[k] / down[i] + 1e-9));
          d.batch.push_back(std::max(1, static_cast<int>(fit)));
        }
        if (std::find(out.begin(), out.end(), d) == out.end()) out.push_back(d);
      }
    }
  }
  const Decision fallback = fallback_start(scenario, max_batch);
  if (!fallback.batch.empty() &&
      std::find(out.begin(), out.end(), fallback) == out.end()) {
    out.push_back(fallback);
  }
  return out;
}

BcdResult bcd_optimize(const Scenario& scenario, const BcdOptions& options,
                       const std::optional<Decision>& init) {
  check_options(options);
  BcdResult result;
  if (init) {
    result.runs.push_back(bcd_run(scenario, *init, options));
  } else {
    // The all-shallow maximal-batch point minimizes both the variance and the
    // drift term, so nothing is feasible when it is not.
    const Decision fallback = fallback_start(scenario, options.max_batch);
    if (fallback.batch.empty() ||
        !is_feasible(scenario, fallback, options.max_batch)) {
      throw_no_feasible(scenario, options.max_batch);
    }
    for (const Decision& start : bcd_starts(scenario, options.max_batch)) {
      if (!is_feasible(scenario, start, options.max_batch)) continue;
      result.runs.push_back(bcd_run(scenario, start, options));
    }
  }
  for (std::size_t k = 0; k < result.runs.size(); ++k) {
    const BcdRun& run = result.runs[k];
    if (k == 0 || improves(run.objective, run.decision, result.theta,
                           result.decision)) {
      result.best_run = static_cast<int>(k);
      result.theta = run.objective;
      result.decision = run.decision;
    }
  }
  result.aux = tight_auxiliary(scenario, result.decision);
  return result;
}

BcdResult optimize_batch_for_cuts(const Scenario& scenario,
                                  const std::vector<int>& cuts,
                                  const BcdOptions& options) {
  check_options(options);
  const int n = scenario.num_devices();
  if (static_cast<int>(cuts.size()) != n) {
    throw Error(ErrorKind::kInvalidArgument, "optimize_batch_for_cuts: cuts size mismatch");
  }
  const CumulativeStats stats = cumulative_stats(scenario.layers);
  std::vector<int> caps(n);
  for (int i = 0; i < n; ++i) {
    if (cuts[i] < 1 || cuts[i] > scenario.num_layers()) {
      throw Error(ErrorKind::kInvalidArgument, "optimize_batch_for_cuts: cut out of range");
    }
    caps[i] = max_batch_for_memory(scenario, stats, i, cuts[i], options.max_batch);
    if (caps[i] < 1) {
      throw Error(ErrorKind::kInfeasible,
                  "device " + std::to_string(i) + " cannot hold one sample at cut " +
                      std::to_string(cuts[i]));
    }
  }
  BcdResult result;
  for (int b0 : batch_ladder(options.max_batch)) {
    Decision start{std::vector<int>(n), cuts};
    for (int i = 0; i < n; ++i) start.batch[i] = std::min(b0, caps[i]);
    if (!is_feasible(scenario, start, options.max_batch)) continue;
    const bool seen = std::any_of(result.runs.begin(), result.runs.end(),
                                  [&](const BcdRun& r) { return r.start == start; });
    if (seen) continue;
    BcdRun run;
    run.start = start;
    Decision current = start;
    double objective = objective_theta_prime(scenario, current);
    for (int iter = 1; iter <= options.max_iters; ++iter) {
      BcdIteration step;
      step.iteration = iter;
      const AuxiliaryT aux = tight_auxiliary(scenario, current);
      current.batch = batch_step(scenario, current, aux, options);
      step.objective_after_bs = step.objective = objective_theta_prime(scenario, current);
      step.decision = current;
      run.trace.push_back(step);
      const double change = std::abs(objective - step.objective);
      objective = step.objective;
      if (change <= options.tol) {
        run.converged = true;
        break;
      }
    }
    run.decision = current;
    run.objective = objective_theta(scenario, current);
    result.runs.push_back(run);
  }
  if (result.runs.empty()) {
    throw Error(ErrorKind::kInfeasible,
                "no batch vector makes the bound denominator positive at the given cuts");
  }
  for (std::size_t k = 0; k < result.runs.size(); ++k) {
    const BcdRun& run = result.runs[k];
    if (k == 0 || improves(run.objective, run.decision, result.theta,
                           result.decision)) {
      result.best_run = static_cast<int>(k);
      result.theta = run.objective;
      result.decision = run.decision;
    }
  }
  result.aux = tight_auxiliary(scenario, result.decision);
  return result;
}

}  // namespace sfl
