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

#include "sfl/split_point.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "sfl/error.h"
#include "sfl/latency.h"

namespace sfl {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double excess(double value, double running_max) {
  return value > running_max ? value - running_max : 0.0;
}

}  // namespace

SplitProblem::SplitProblem(const Scenario& scenario,
                           const std::vector<int>& batch) {
  num_devices_ = scenario.num_devices();
  num_layers_ = scenario.num_layers();
  if (static_cast<int>(batch.size()) != num_devices_) {
    throw Error(ErrorKind::kInvalidArgument, "SplitProblem: batch size mismatch");
  }
  const TrainingParams& tr = scenario.training;
  const LayerProfile& layers = scenario.layers;
  const CumulativeStats stats = cumulative_stats(layers);

  num_scale_ = 2.0 * tr.loss_gap;
  lr_ = tr.lr;
  inv_interval_ = 1.0 / tr.agg_interval;
  server_up_rate_ = scenario.server.up_rate_fed;
  server_down_rate_ = scenario.server.down_rate_fed;
  drift_coef_ = tr.agg_interval > 1 ? 4.0 * tr.smoothness * tr.smoothness *
                                          tr.lr * tr.lr * tr.agg_interval *
                                          tr.agg_interval
                                    : 0.0;
  // Every cut shares the variance part of the denominator.
  Decision probe{batch, std::vector<int>(num_devices_, 1)};
  BoundInputs inputs = make_bound_inputs(scenario, probe);
  inputs.moment_at_split = 0.0;
  den_base_ = static_cast<double>(rounds_denominator(inputs));

  devices_.resize(num_devices_);
  for (int i = 0; i < num_devices_; ++i) {
    if (batch[i] < 1) {
      throw Error(ErrorKind::kInvalidArgument, "SplitProblem: batch sizes must be >= 1");
    }
    const DeviceProfile& d = scenario.devices[i];
    DeviceTable& table = devices_[i];
    table.min_server = kInf;
    for (int c = 1; c <= num_layers_; ++c) {
      CutEntry e;
      e.cut = c;
      e.server = batch[i] *
                 (layers.fp_total() - layers.fp(c) + layers.bp_total() - layers.bp(c)) /
                 scenario.server.compute_flops;
      e.fp_up = client_fp_latency(d, layers, batch[i], c) +
                activation_upload_latency(d, layers, batch[i], c);
      e.down_bp = grad_download_latency(d, layers, batch[i], c) +
                  client_bp_latency(d, layers, batch[i], c);
      e.moment = stats.moment(c);
      e.params = layers.params(c);
      e.agg_up = e.params / d.up_rate_fed;
      e.agg_down = e.params / d.down_rate_fed;
      table.entries.push_back(e);
      const bool memory_ok = fits_memory(scenario, stats, i, batch[i], c);
      const bool den_ok = den_base_ - drift_coef_ * e.moment > 0.0;
      if (memory_ok && den_ok) {
        table.cuts.push_back(c);
        table.min_server = std::min(table.min_server, e.server);
      }
    }
  }
}

bool SplitProblem::feasible() const {
  return std::all_of(devices_.begin(), devices_.end(),
                     [](const DeviceTable& t) { return !t.cuts.empty(); });
}

bool SplitProblem::allowed(const std::vector<int>& cuts) const {
  if (static_cast<int>(cuts.size()) != num_devices_) return false;
  for (int i = 0; i < num_devices_; ++i) {
    const auto& allowed = devices_[i].cuts;
    if (!std::binary_search(allowed.begin(), allowed.end(), cuts[i])) return false;
  }
  return true;
}

double SplitProblem::numerator(const std::vector<int>& cuts) const {
  double server = 0.0, fp_up = 0.0, down_bp = 0.0, up = 0.0, down = 0.0;
  double max_params = 0.0, sum_params = 0.0;
  bool homogeneous = true;
  for (int i = 0; i < num_devices_; ++i) {
    const CutEntry& e = entry(i, cuts[i]);
    server += e.server;
    fp_up = std::max(fp_up, e.fp_up);
    down_bp = std::max(down_bp, e.down_bp);
    up = std::max(up, e.agg_up);
    down = std::max(down, e.agg_down);
    max_params = std::max(max_params, e.params);
    sum_params += e.params;
    homogeneous = homogeneous && cuts[i] == cuts[0];
  }
  const double noncommon =
      homogeneous ? 0.0 : std::max(0.0, num_devices_ * max_params - sum_params);
  up = std::max(up, noncommon / server_up_rate_);
  down = std::max(down, noncommon / server_down_rate_);
  return num_scale_ * (fp_up + server + down_bp + (up + down) * inv_interval_);
}

double SplitProblem::denominator(const std::vector<int>& cuts) const {
  double moment = 0.0;
  for (int i = 0; i < num_devices_; ++i) {
    moment = std::max(moment, entry(i, cuts[i]).moment);
  }
  return lr_ * (den_base_ - drift_coef_ * moment);
}

double SplitProblem::ratio(const std::vector<int>& cuts) const {
  return numerator(cuts) / denominator(cuts);
}

double SplitProblem::parametric_value(const std::vector<int>& cuts,
                                      double lambda) const {
  return numerator(cuts) - lambda * denominator(cuts);
}

std::vector<int> SplitProblem::greedy_cuts() const {
  std::vector<int> out(num_devices_, 0);
  for (int i = 0; i < num_devices_; ++i) {
    double best = kInf;
    for (int c : devices_[i].cuts) {
      const CutEntry& e = entry(i, c);
      const double standalone =
          e.server + e.fp_up + e.down_bp + (e.agg_up + e.agg_down) * inv_interval_;
      if (standalone < best) {
        best = standalone;
        out[i] = c;
      }
    }
  }
  return out;
}

// Depth-first branch and bound over devices in index order. The state holds
// the running maxima of the assigned prefix; every max term of the objective
// can only grow as more devices are assigned.
class SplitSearch {
 public:
  SplitSearch(const SplitProblem& p, double lambda)
      : p_(p), lambda_(lambda), cuts_(p.num_devices_, 0) {
    const int n = p.num_devices_;
    suffix_min_server_.assign(n + 1, 0.0);
    for (int i = n - 1; i >= 0; --i) {
      suffix_min_server_[i] = suffix_min_server_[i + 1] + p.devices_[i].min_server;
    }
  }

  double bound_of(const std::vector<int>& partial) {
    reset();
    for (int c : partial) push(c);
    return bound();
  }

  // Smallest parametric value, improving on `best` (value at `best_cuts`).
  void minimize(double& best, std::vector<int>& best_cuts) {
    reset();
    best_ = best;
    best_cuts_ = best_cuts;
    descend_best_first();
    best = best_;
    best_cuts = best_cuts_;
  }

  // First assignment in lexicographic order whose value is at most
  // `threshold`; false when none exists.
  bool first_within(double threshold, std::vector<int>& out) {
    reset();
    threshold_ = threshold;
    found_ = false;
    descend_lexicographic();
    if (found_) out = found_cuts_;
    return found_;
  }

  std::int64_t nodes() const { return nodes_; }

 private:
  struct Frame {
    double server, fp_up, down_bp, up, down, moment, max_params, sum_params;
  };

  void reset() {
    depth_ = 0;
    cur_ = Frame{0, 0, 0, 0, 0, 0, 0, 0};
    stack_.clear();
  }

  void push(int cut) {
    stack_.push_back(cur_);
    const auto& e = p_.entry(depth_, cut);
    cur_.server += e.server;
    cur_.fp_up = std::max(cur_.fp_up, e.fp_up);
    cur_.down_bp = std::max(cur_.down_bp, e.down_bp);
    cur_.up = std::max(cur_.up, e.agg_up);
    cur_.down = std::max(cur_.down, e.agg_down);
    cur_.moment = std::max(cur_.moment, e.moment);
    cur_.max_params = std::max(cur_.max_params, e.params);
    cur_.sum_params += e.params;
    cuts_[depth_] = cut;
    ++depth_;
  }

  void pop() {
    --depth_;
    cur_ = stack_.back();
    stack_.pop_back();
  }

  double bound() const {
    const double num_scale = p_.num_scale_;
    const double den_scale = lambda_ * p_.lr_;
    // Server non-common bits of the prefix alone: sum_i (max - delta_i).
    const double noncommon = std::max(0.0, depth_ * cur_.max_params - cur_.sum_params);
    const double up = std::max(cur_.up, noncommon / p_.server_up_rate_);
    const double down = std::max(cur_.down, noncommon / p_.server_down_rate_);
    double value = num_scale * (cur_.server + suffix_min_server_[depth_] +
                                cur_.fp_up + cur_.down_bp +
                                (up + down) * p_.inv_interval_) -
                   den_scale * (p_.den_base_ - p_.drift_coef_ * cur_.moment);
    // One unassigned device at a time can raise the maxima; the worst of
    // their cheapest individual increments is admissible.
    double extra = 0.0;
    for (int j = depth_; j < p_.num_devices_; ++j) {
      const auto& table = p_.devices_[j];
      double cheapest = kInf;
      for (int c : table.cuts) {
        const auto& e = table.entries[c - 1];
        const double inc =
            num_scale * (e.server - table.min_server + excess(e.fp_up, cur_.fp_up) +
                         excess(e.down_bp, cur_.down_bp) +
                         (excess(e.agg_up, up) + excess(e.agg_down, down)) *
                             p_.inv_interval_) +
            den_scale * p_.drift_coef_ * excess(e.moment, cur_.moment);
        cheapest = std::min(cheapest, inc);
        if (cheapest <= extra) break;
      }
      extra = std::max(extra, cheapest);
    }
    return value + extra;
  }

  double child_bound(int cut) {
    push(cut);
    const double b = depth_ == p_.num_devices_ ? leaf_value() : bound();
    pop();
    return b;
  }

  double leaf_value() const { return p_.parametric_value(cuts_, lambda_); }

  void descend_best_first() {
    ++nodes_;
    if (depth_ == p_.num_devices_) {
      const double v = leaf_value();
      if (v < best_) {
        best_ = v;
        best_cuts_ = cuts_;
      }
      return;
    }
    const auto& allowed = p_.devices_[depth_].cuts;
    std::vector<std::pair<double, int>> order;
    order.reserve(allowed.size());
    for (int c : allowed) order.emplace_back(child_bound(c), c);
    std::sort(order.begin(), order.end());
    for (const auto& [b, c] : order) {
      if (b >= best_) break;
      push(c);
      descend_best_first();
      pop();
    }
  }

  void descend_lexicographic() {
    ++nodes_;
    if (depth_ == p_.num_devices_) {
      if (leaf_value() <= threshold_) {
        found_ = true;
        found_cuts_ = cuts_;
      }
      return;
    }
    for (int c : p_.devices_[depth_].cuts) {
      push(c);
      const bool leaf = depth_ == p_.num_devices_;
      if (leaf || bound() <= threshold_) descend_lexicographic();
      pop();
      if (found_) return;
    }
  }

  const SplitProblem& p_;
  double lambda_;
  std::vector<int> cuts_;
  std::vector<double> suffix_min_server_;
  std::vector<Frame> stack_;
  Frame cur_{};
  int depth_ = 0;
  std::int64_t nodes_ = 0;
  double best_ = kInf;
  std::vector<int> best_cuts_;
  double threshold_ = 0.0;
  bool found_ = false;
  std::vector<int> found_cuts_;
};

double SplitProblem::lower_bound(const std::vector<int>& partial,
                                 double lambda) const {
  if (static_cast<int>(partial.size()) > num_devices_) {
    throw Error(ErrorKind::kInvalidArgument, "lower_bound: partial too long");
  }
  SplitSearch search(*this, lambda);
  return search.bound_of(partial);
}

namespace {

void require_feasible(const SplitProblem& problem) {
  for (int i = 0; i < problem.num_devices(); ++i) {
    if (problem.allowed_cuts(i).empty()) {
      throw Error(ErrorKind::kInfeasible,
                  "cut block: device " + std::to_string(i) +
                      " has no cut that fits memory with a positive bound "
                      "denominator at its batch size");
    }
  }
}

// Best of the greedy assignment, the homogeneous assignments and `hint`.
std::vector<int> seed_incumbent(const SplitProblem& problem, double lambda,
                                const std::vector<int>& hint) {
  std::vector<int> best = problem.greedy_cuts();
  double best_value = problem.parametric_value(best, lambda);
  auto consider = [&](const std::vector<int>& cuts) {
    if (!problem.allowed(cuts)) return;
    const double v = problem.parametric_value(cuts, lambda);
    if (v < best_value) {
      best_value = v;
      best = cuts;
    }
  };
  for (int c = 1; c <= problem.num_layers(); ++c) {
    consider(std::vector<int>(problem.num_devices(), c));
  }
  if (!hint.empty()) consider(hint);
  return best;
}

double value_scale(const SplitProblem& problem, const std::vector<int>& cuts,
                   double lambda) {
  return std::max(std::abs(problem.numerator(cuts)) +
                      std::abs(lambda * problem.denominator(cuts)),
                  std::numeric_limits<double>::min());
}

}  // namespace

InnerSolution inner_parametric_solve(const SplitProblem& problem, double lambda,
                                     bool lexicographic,
                                     const std::vector<int>& incumbent) {
  if (!(lambda >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "inner_parametric_solve: lambda must be >= 0");
  }
  require_feasible(problem);
  InnerSolution out;
  out.cuts = seed_incumbent(problem, lambda, incumbent);
  out.value = problem.parametric_value(out.cuts, lambda);
  SplitSearch search(problem, lambda);
  search.minimize(out.value, out.cuts);
  if (lexicographic) {
    const double tie = kTieRelTol * value_scale(problem, out.cuts, lambda);
    std::vector<int> first;
    if (search.first_within(out.value + tie, first)) {
      out.cuts = first;
      out.value = problem.parametric_value(first, lambda);
    }
  }
  out.nodes = search.nodes();
  return out;
}

MsSolution solve_ms_dinkelbach(const Scenario& scenario,
                               const std::vector<int>& batch,
                               const DinkelbachOptions& options,
                               const std::vector<int>& warm_cuts) {
  const SplitProblem problem(scenario, batch);
  require_feasible(problem);

  std::vector<int> current = problem.allowed(warm_cuts)
                                 ? warm_cuts
                                 : seed_incumbent(problem, 0.0, {});
  double lambda = problem.ratio(current);
  MsSolution out;
  for (int iter = 0;; ++iter) {
    if (iter >= options.max_iters) {
      throw Error(ErrorKind::kNonConvergence,
                  "Dinkelbach: no convergence within " +
                      std::to_string(options.max_iters) + " iterations");
    }
    const InnerSolution inner =
        inner_parametric_solve(problem, lambda, /*lexicographic=*/false, current);
    DinkelbachStep step;
    step.lambda = lambda;
    step.f_value = inner.value;
    step.f_relative = inner.value / value_scale(problem, current, lambda);
    step.nodes = inner.nodes;
    out.trace.push_back(step);
    if (step.f_relative >= -options.tol) break;
    const double next = problem.ratio(inner.cuts);
    current = inner.cuts;
    if (!(next < lambda)) break;  // rounding floor reached
    lambda = next;
  }

  // Lexicographically first assignment whose ratio ties the best one.
  SplitSearch search(problem, lambda * (1.0 + kTieRelTol));
  std::vector<int> first;
  if (search.first_within(0.0, first)) current = first;
  out.cuts = current;
  out.lambda = problem.ratio(current);
  out.aux = tight_auxiliary(scenario, Decision{batch, current});
  return out;
}

}  // namespace sfl
