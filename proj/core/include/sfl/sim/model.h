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

// Small fully connected network with hand-written backpropagation. Samples
// are stored column-wise.

#ifndef SFL_SIM_MODEL_H_
#define SFL_SIM_MODEL_H_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sfl::sim {

enum class Activation { kIdentity, kTanh, kRelu };
enum class LossKind { kCrossEntropy, kSquared };

const char* activation_name(Activation a);
Activation parse_activation(const std::string& name);

struct ModelSpec {
  // widths[0] is the input dimension, widths[L] the number of outputs.
  std::vector<int> widths;
  // One per hidden layer (L - 1 entries); the last layer is affine and feeds
  // the loss directly.
  std::vector<Activation> hidden;
  LossKind loss = LossKind::kCrossEntropy;

  int num_layers() const { return static_cast<int>(widths.size()) - 1; }
};

// Throws Error(kInvalidArgument) on inconsistent widths or activations.
void validate(const ModelSpec& spec);

struct Layer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

using Params = std::vector<Layer>;

// Gaussian weights scaled by init_scale / sqrt(fan_in), zero biases.
Params init_params(const ModelSpec& spec, std::uint64_t seed,
                   double init_scale = 1.0);
Params zeros_like(const Params& params);

// Flattened view (layer order, weights column-major then bias).
Eigen::VectorXd flatten(const Params& params);
Params unflatten(const Eigen::VectorXd& flat, const Params& shape);
// Parameter count of layers [first, last) (0-based).
std::int64_t param_count(const Params& params, int first, int last);

// p += scale * q
void axpy(double scale, const Params& q, Params& p);
double squared_norm(const Layer& layer);
double max_abs_diff(const Params& a, const Params& b);

struct Batch {
  const Eigen::MatrixXd* features = nullptr;  // dim x n_total
  const std::vector<int>* labels = nullptr;
  std::vector<int> index;       // columns used
  std::vector<double> weights;  // one per index; loss = sum_k w_k loss_k
};

// Uniform weights 1 / index.size().
Batch mean_batch(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                 std::vector<int> index);

struct LossAndGrad {
  double loss = 0.0;
  Params grad;
};

double evaluate_loss(const ModelSpec& spec, const Params& params,
                     const Batch& batch);
LossAndGrad loss_and_grad(const ModelSpec& spec, const Params& params,
                          const Batch& batch);
struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;  // weighted share of argmax hits
};
Evaluation evaluate(const ModelSpec& spec, const Params& params,
                    const Batch& batch);

double accuracy(const ModelSpec& spec, const Params& params,
                const Eigen::MatrixXd& features, const std::vector<int>& labels);

// Max over parameters of |analytic - numeric| / max(|analytic|, |numeric|,
// floor), with central differences of step h.
double gradient_check(const ModelSpec& spec, const Params& params,
                      const Batch& batch, double h = 1e-5,
                      double floor = 1e-3);

}  // namespace sfl::sim

#endif  // SFL_SIM_MODEL_H_
