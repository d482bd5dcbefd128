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

#include "sfl/sim/estimate.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sfl/error.h"
#include "sfl/random.h"

namespace sfl::sim {

ConstantEstimates estimate_constants(const ModelSpec& spec, const Params& base,
                                     const Dataset& data,
                                     const ProbeConfig& config) {
  if (config.probes < 2) {
    throw Error(ErrorKind::kInvalidArgument,
                "estimate_constants: need at least 2 probe points");
  }
  if (config.draws < 1 || config.batch < 1 || config.batch > data.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                "estimate_constants: need draws >= 1 and 1 <= batch <= dataset size");
  }
  const int layers = spec.num_layers();
  Rng rng = make_rng({config.seed, 0xE57ULL});
  std::vector<int> all(data.size());
  std::iota(all.begin(), all.end(), 0);
  const Batch full = mean_batch(data.features, data.labels, all);

  std::vector<Eigen::VectorXd> points;
  std::vector<Eigen::VectorXd> full_grads;
  ConstantEstimates est;
  est.grad_var.assign(layers, 0.0);
  est.grad_moment.assign(layers, 0.0);
  const Eigen::VectorXd base_flat = flatten(base);
  for (int p = 0; p < config.probes; ++p) {
    Eigen::VectorXd w = base_flat;
    for (Eigen::Index k = 0; k < w.size(); ++k) w(k) += config.perturb * standard_normal(rng);
    const Params params = unflatten(w, base);
    const LossAndGrad g_full = loss_and_grad(spec, params, full);
    points.push_back(w);
    full_grads.push_back(flatten(g_full.grad));
    for (int d = 0; d < config.draws; ++d) {
      const Batch mb = mean_batch(
          data.features, data.labels,
          sample_without_replacement(data.size(), config.batch, rng));
      const LossAndGrad g = loss_and_grad(spec, params, mb);
      for (int l = 0; l < layers; ++l) {
        const double dev = (g.grad[l].weight - g_full.grad[l].weight).squaredNorm() +
                           (g.grad[l].bias - g_full.grad[l].bias).squaredNorm();
        est.grad_var[l] += dev;
        est.grad_moment[l] = std::max(est.grad_moment[l], squared_norm(g.grad[l]));
      }
    }
  }
  const double samples = static_cast<double>(config.probes) * config.draws;
  for (double& v : est.grad_var) v *= config.batch / samples;
  for (int a = 0; a < config.probes; ++a) {
    for (int b = a + 1; b < config.probes; ++b) {
      const double dw = (points[a] - points[b]).norm();
      if (dw > 0.0) {
        est.smoothness =
            std::max(est.smoothness, (full_grads[a] - full_grads[b]).norm() / dw);
      }
    }
  }
  return est;
}

void apply_estimates(const ConstantEstimates& est, Scenario& scenario) {
  if (static_cast<int>(est.grad_var.size()) != scenario.num_layers()) {
    throw Error(ErrorKind::kInvalidArgument,
                "apply_estimates: layer count differs from the scenario");
  }
  scenario.training.smoothness = est.smoothness;
  scenario.layers.grad_var = est.grad_var;
  scenario.layers.grad_moment = est.grad_moment;
}

}  // namespace sfl::sim
