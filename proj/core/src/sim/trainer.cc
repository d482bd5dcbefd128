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

#include "sfl/sim/trainer.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "sfl/error.h"
#include "sfl/random.h"

namespace sfl::sim {
namespace {

void refresh_clock(const SimContext& ctx, TrainState& state) {
  // Same expression as total_time(), so the two agree bit for bit.
  state.clock = static_cast<double>(state.round) * ctx.latency.split_training +
                static_cast<double>(state.aggregations) * ctx.latency.aggregation;
}

// True when the eval-loss window mean ending at t improved by less than rel
// over the window mean ending at t - window.
bool plateau_at(const std::vector<double>& eval, std::size_t t, int window,
                double rel) {
  const std::size_t w = static_cast<std::size_t>(window);
  if (t + 1 < 2 * w) return false;
  double recent = 0.0, earlier = 0.0;
  for (std::size_t k = 0; k < w; ++k) {
    recent += eval[t - k];
    earlier += eval[t - w - k];
  }
  recent /= w;
  earlier /= w;
  return earlier - recent < rel * std::abs(earlier);
}

// Mean of layer l over replicas, taken as an offset from replica 0 so that
// identical copies come back bit for bit.
Layer replica_mean(const TrainState& state, int l) {
  const int n = static_cast<int>(state.replicas.size());
  const Layer& base = state.replicas[0][l];
  Eigen::MatrixXd dw = Eigen::MatrixXd::Zero(base.weight.rows(), base.weight.cols());
  Eigen::VectorXd db = Eigen::VectorXd::Zero(base.bias.size());
  for (int i = 1; i < n; ++i) {
    dw += state.replicas[i][l].weight - base.weight;
    db += state.replicas[i][l].bias - base.bias;
  }
  return Layer{base.weight + dw / n, base.bias + db / n};
}

}  // namespace

SimContext::SimContext(const Scenario& scenario_in, const Decision& decision_in,
                       ModelSpec spec_in, const Dataset& data_in,
                       DataPartition partition_in)
    : scenario(&scenario_in),
      decision(decision_in),
      spec(std::move(spec_in)),
      data(&data_in),
      partition(std::move(partition_in)) {
  validate(spec);
  validate(decision, scenario_in);
  if (spec.num_layers() != scenario_in.num_layers()) {
    throw Error(ErrorKind::kInvalidArgument,
                "simulation: model has " + std::to_string(spec.num_layers()) +
                    " layers but the scenario profiles " +
                    std::to_string(scenario_in.num_layers()));
  }
  if (partition.num_devices() != scenario_in.num_devices()) {
    throw Error(ErrorKind::kInvalidArgument,
                "simulation: partition and scenario disagree on device count");
  }
  for (int i = 0; i < partition.num_devices(); ++i) {
    if (decision.batch[i] > static_cast<int>(partition.device_samples[i].size())) {
      throw Error(ErrorKind::kInvalidArgument,
                  "simulation: batch of device " + std::to_string(i) +
                      " exceeds its local dataset");
    }
  }
  if (data->features.cols() != data->size() ||
      data->features.rows() != spec.widths.front()) {
    throw Error(ErrorKind::kInvalidArgument,
                "simulation: dataset shape does not match the model input");
  }
  latency = round_latency(scenario_in, decision);
  split_depth = decision.split_depth();
}

TrainState init_state(const SimContext& ctx, const Params& init,
                      std::uint64_t seed) {
  if (static_cast<int>(init.size()) != ctx.spec.num_layers()) {
    throw Error(ErrorKind::kInvalidArgument, "init_state: parameter depth mismatch");
  }
  TrainState state;
  state.replicas.assign(ctx.scenario->num_devices(), init);
  state.seed = seed;
  return state;
}

std::vector<int> sample_device_batch(const DataPartition& partition, int device,
                                     int batch, std::uint64_t seed, long round) {
  const std::vector<int>& local = partition.device_samples.at(device);
  Rng rng = make_rng({seed, static_cast<std::uint64_t>(round),
                      static_cast<std::uint64_t>(device)});
  std::vector<int> picks =
      sample_without_replacement(static_cast<int>(local.size()), batch, rng);
  for (int& p : picks) p = local[p];
  return picks;
}

RoundStats run_round(const SimContext& ctx, TrainState& state) {
  const int n = ctx.scenario->num_devices();
  const int depth = ctx.split_depth;
  const int layers = ctx.spec.num_layers();
  const double lr = ctx.scenario->training.lr;
  const long t = state.round + 1;

  RoundStats stats;
  stats.client_grad_sq.assign(n, 0.0);
  std::vector<Layer> common_grad(layers);
  for (int l = depth; l < layers; ++l) {
    common_grad[l].weight = Eigen::MatrixXd::Zero(state.replicas[0][l].weight.rows(),
                                                 state.replicas[0][l].weight.cols());
    common_grad[l].bias = Eigen::VectorXd::Zero(state.replicas[0][l].bias.size());
  }
  for (int i = 0; i < n; ++i) {
    const Batch batch = mean_batch(
        ctx.data->features, ctx.data->labels,
        sample_device_batch(ctx.partition, i, ctx.decision.batch[i], state.seed, t));
    const LossAndGrad lg = loss_and_grad(ctx.spec, state.replicas[i], batch);
    stats.loss += lg.loss / n;
    Params& p = state.replicas[i];
    for (int l = 0; l < depth; ++l) {
      stats.client_grad_sq[i] += squared_norm(lg.grad[l]);
      p[l].weight -= lr * lg.grad[l].weight;
      p[l].bias -= lr * lg.grad[l].bias;
    }
    for (int l = depth; l < layers; ++l) {
      common_grad[l].weight += lg.grad[l].weight;
      common_grad[l].bias += lg.grad[l].bias;
    }
  }
  // Common layers are identical on every replica, so averaging the updated
  // copies is one step along the mean gradient.
  for (int l = depth; l < layers; ++l) {
    Layer next = state.replicas[0][l];
    next.weight -= (lr / n) * common_grad[l].weight;
    next.bias -= (lr / n) * common_grad[l].bias;
    for (int i = 0; i < n; ++i) state.replicas[i][l] = next;
  }
  if (!std::isfinite(stats.loss)) {
    throw Error(ErrorKind::kDivergence,
                "loss became non-finite at round " + std::to_string(t));
  }
  state.round = t;
  state.loss_history.push_back(stats.loss);
  refresh_clock(ctx, state);
  return stats;
}

void aggregate_clients(const SimContext& ctx, TrainState& state) {
  const int interval = ctx.scenario->training.agg_interval;
  if (state.round < 1 || state.round % interval != 0) {
    throw Error(ErrorKind::kInvalidArgument,
                "aggregate_clients: round " + std::to_string(state.round) +
                    " is not a multiple of the aggregation interval " +
                    std::to_string(interval));
  }
  const int n = static_cast<int>(state.replicas.size());
  for (int l = 0; l < ctx.split_depth; ++l) {
    const Layer mean = replica_mean(state, l);
    for (int i = 0; i < n; ++i) state.replicas[i][l] = mean;
  }
  ++state.aggregations;
  refresh_clock(ctx, state);
}

Params averaged_model(const TrainState& state) {
  Params mean = state.replicas[0];
  const int n = static_cast<int>(state.replicas.size());
  for (int i = 1; i < n; ++i) axpy(1.0, state.replicas[i], mean);
  for (Layer& layer : mean) {
    layer.weight /= n;
    layer.bias /= n;
  }
  return mean;
}

double client_divergence(const SimContext& ctx, const TrainState& state) {
  const int n = static_cast<int>(state.replicas.size());
  double worst = 0.0;
  std::vector<Layer> mean(ctx.split_depth);
  for (int l = 0; l < ctx.split_depth; ++l) mean[l] = replica_mean(state, l);
  for (int i = 0; i < n; ++i) {
    double d = 0.0;
    for (int l = 0; l < ctx.split_depth; ++l) {
      d += (mean[l].weight - state.replicas[i][l].weight).squaredNorm() +
           (mean[l].bias - state.replicas[i][l].bias).squaredNorm();
    }
    worst = std::max(worst, d);
  }
  return worst;
}

long find_plateau(const std::vector<double>& eval_loss, int window, double rel) {
  if (window < 1) {
    throw Error(ErrorKind::kInvalidArgument, "plateau window must be >= 1");
  }
  for (std::size_t t = 0; t < eval_loss.size(); ++t) {
    if (plateau_at(eval_loss, t, window, rel)) return static_cast<long>(t) + 1;
  }
  return -1;
}

RunReport train(const SimContext& ctx, const Params& init,
                const TrainConfig& config) {
  if (config.max_rounds < 1) {
    throw Error(ErrorKind::kInvalidArgument, "train: max_rounds must be >= 1");
  }
  if (config.plateau_window < 1) {
    throw Error(ErrorKind::kInvalidArgument, "train: plateau window must be >= 1");
  }
  const TrainingParams& tr = ctx.scenario->training;
  const double drift_scale = 4.0 * tr.lr * tr.lr * tr.agg_interval * tr.agg_interval;
  RunReport report;
  TrainState state = init_state(ctx, init, config.seed);
  std::vector<double> eval;
  std::vector<int> all(ctx.data->size());
  for (int k = 0; k < ctx.data->size(); ++k) all[k] = k;
  const Batch full = mean_batch(ctx.data->features, ctx.data->labels, all);

  double first_loss = 0.0;
  double window_grad = 0.0;
  while (state.round < config.max_rounds) {
    const RoundStats stats = run_round(ctx, state);
    if (state.round == 1) first_loss = stats.loss;
    if (first_loss > 0.0 && stats.loss > config.divergence_factor * first_loss) {
      throw Error(ErrorKind::kDivergence,
                  "loss diverged at round " + std::to_string(state.round) +
                      " (" + std::to_string(stats.loss) + " vs initial " +
                      std::to_string(first_loss) + ")");
    }
    if (ctx.split_depth > 0) {
      for (double g : stats.client_grad_sq) window_grad = std::max(window_grad, g);
      DriftCheck check;
      check.round = state.round;
      check.measured = client_divergence(ctx, state);
      check.bound = drift_scale * window_grad;
      if (check.measured > check.bound * (1.0 + 1e-12)) ++report.drift_violations;
      report.drift.push_back(check);
    }
    if (state.round % tr.agg_interval == 0) {
      aggregate_clients(ctx, state);
      window_grad = 0.0;
    }
    const Params model = averaged_model(state);
    RoundRecord rec;
    rec.round = state.round;
    rec.sim_time = state.clock;
    rec.loss = stats.loss;
    const Evaluation ev = evaluate(ctx.spec, model, full);
    rec.eval_loss = ev.loss;
    rec.accuracy = ev.accuracy;
    report.series.push_back(rec);
    eval.push_back(rec.eval_loss);
    if (report.plateau_round < 0 &&
        plateau_at(eval, eval.size() - 1, config.plateau_window, config.plateau_rel)) {
      report.plateau_round = state.round;
      report.plateau_time = state.clock;
      if (config.stop_at_plateau) break;
    }
  }
  report.rounds_run = state.round;
  report.final_state = std::move(state);
  return report;
}

}  // namespace sfl::sim
