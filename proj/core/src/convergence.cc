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

#include "sfl/convergence.h"

#include <algorithm>
#include <cstdio>

#include "sfl/error.h"

namespace sfl {
namespace {

long double drift_coefficient(double smoothness, double lr, int agg_interval) {
  if (agg_interval <= 1) return 0.0L;
  const long double i = agg_interval;
  const long double b = smoothness;
  const long double g = lr;
  return 4.0L * b * b * g * g * i * i;
}

long double variance_ld(double smoothness, double lr,
                        const std::vector<double>& grad_var,
                        const std::vector<int>& batch) {
  long double var_sum = 0.0L;
  for (double v : grad_var) var_sum += v;
  long double inv_batch = 0.0L;
  for (int b : batch) inv_batch += 1.0L / b;
  const long double n = static_cast<long double>(batch.size());
  return static_cast<long double>(smoothness) * lr / (n * n) * var_sum *
         inv_batch;
}

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

}  // namespace

BoundInputs make_bound_inputs(const Scenario& scenario,
                              const Decision& decision) {
  validate(decision, scenario);
  BoundInputs in;
  in.smoothness = scenario.training.smoothness;
  in.lr = scenario.training.lr;
  in.agg_interval = scenario.training.agg_interval;
  in.target_eps = scenario.training.target_eps;
  in.loss_gap = scenario.training.loss_gap;
  in.grad_var = scenario.layers.grad_var;
  in.batch = decision.batch;
  in.split_depth = decision.split_depth();
  const CumulativeStats stats = cumulative_stats(scenario.layers);
  in.moment_at_split = stats.moment(in.split_depth);
  return in;
}

double drift_bound(double lr, int agg_interval, double moment_cum) {
  if (agg_interval <= 1) return 0.0;
  const double i = agg_interval;
  return 4.0 * lr * lr * i * i * moment_cum;
}

double variance_term(const BoundInputs& inputs) {
  return static_cast<double>(
      variance_ld(inputs.smoothness, inputs.lr, inputs.grad_var, inputs.batch));
}

double drift_term(const BoundInputs& inputs) {
  return static_cast<double>(
      drift_coefficient(inputs.smoothness, inputs.lr, inputs.agg_interval) *
      inputs.moment_at_split);
}

double convergence_bound(const BoundInputs& inputs, double rounds) {
  if (!(rounds >= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "convergence_bound: rounds must be >= 1");
  }
  return 2.0 * inputs.loss_gap / (inputs.lr * rounds) + variance_term(inputs) +
         drift_term(inputs);
}

long double rounds_denominator(const BoundInputs& inputs) {
  return static_cast<long double>(inputs.target_eps) -
         variance_ld(inputs.smoothness, inputs.lr, inputs.grad_var,
                     inputs.batch) -
         drift_coefficient(inputs.smoothness, inputs.lr, inputs.agg_interval) *
             inputs.moment_at_split;
}

std::string describe_infeasibility(double target_eps, double variance,
                                   double drift) {
  std::string dominant = variance >= drift ? "gradient-variance term"
                                           : "client-drift term";
  return "target_eps=" + format_double(target_eps) +
         " is not reachable: variance term=" + format_double(variance) +
         ", drift term=" + format_double(drift) + " (binding: " + dominant +
         ")";
}

RoundsEstimate min_rounds(const BoundInputs& inputs) {
  const long double den = rounds_denominator(inputs);
  if (!(den > 0.0L)) {
    throw Error(ErrorKind::kInfeasible,
                describe_infeasibility(inputs.target_eps, variance_term(inputs),
                                       drift_term(inputs)));
  }
  RoundsEstimate out;
  out.denominator = den;
  out.rounds = static_cast<double>(2.0L * inputs.loss_gap /
                                   (static_cast<long double>(inputs.lr) * den));
  out.ill_conditioned = den < 1e-6L * inputs.target_eps;
  return out;
}

double objective_theta(const Scenario& scenario, const Decision& decision) {
  const RoundsEstimate rounds = min_rounds(make_bound_inputs(scenario, decision));
  const LatencyBreakdown lat = round_latency(scenario, decision);
  return rounds.rounds *
         (lat.split_training + lat.aggregation / scenario.training.agg_interval);
}

AuxiliaryT tight_auxiliary(const Scenario& scenario, const Decision& decision) {
  const LatencyBreakdown lat = round_latency(scenario, decision);
  const CumulativeStats stats = cumulative_stats(scenario.layers);
  AuxiliaryT t;
  for (int i = 0; i < decision.num_devices(); ++i) {
    const int c = decision.cut[i];
    const DeviceLatency& d = lat.devices[i];
    t.max_moment = std::max(t.max_moment, stats.moment(c));
    t.max_params = std::max(t.max_params, scenario.layers.params(c));
    t.max_fp_up = std::max(t.max_fp_up, d.fp + d.act_up);
    t.max_down_bp = std::max(t.max_down_bp, d.grad_down + d.bp);
  }
  const AggregationLatency agg = aggregation_latencies(scenario, decision);
  t.max_agg_up = agg.up;
  t.max_agg_down = agg.down;
  return t;
}

long double aux_denominator(const Scenario& scenario,
                            const std::vector<int>& batch,
                            const AuxiliaryT& aux) {
  const TrainingParams& tr = scenario.training;
  return static_cast<long double>(tr.target_eps) -
         variance_ld(tr.smoothness, tr.lr, scenario.layers.grad_var, batch) -
         drift_coefficient(tr.smoothness, tr.lr, tr.agg_interval) *
             aux.max_moment;
}

double objective_theta_prime(const Scenario& scenario,
                             const std::vector<int>& batch,
                             const AuxiliaryT& aux,
                             const ServerCompute& server_terms) {
  const TrainingParams& tr = scenario.training;
  const long double den = aux_denominator(scenario, batch, aux);
  if (!(den > 0.0L)) {
    BoundInputs in;
    in.smoothness = tr.smoothness;
    in.lr = tr.lr;
    in.agg_interval = tr.agg_interval;
    in.grad_var = scenario.layers.grad_var;
    in.batch = batch;
    in.moment_at_split = aux.max_moment;
    throw Error(ErrorKind::kInfeasible,
                describe_infeasibility(tr.target_eps, variance_term(in),
                                       drift_term(in)));
  }
  const double per_round = aux.max_fp_up + server_terms.fp + server_terms.bp +
                           aux.max_down_bp +
                           (aux.max_agg_up + aux.max_agg_down) / tr.agg_interval;
  return static_cast<double>(2.0L * tr.loss_gap * per_round /
                             (static_cast<long double>(tr.lr) * den));
}

double objective_theta_prime(const Scenario& scenario,
                             const Decision& decision) {
  return objective_theta_prime(scenario, decision.batch,
                               tight_auxiliary(scenario, decision),
                               server_fp_bp_latency(scenario, decision));
}

}  // namespace sfl
