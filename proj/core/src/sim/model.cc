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

#include "sfl/sim/model.h"

#include <algorithm>
#include <cmath>

#include "sfl/error.h"
#include "sfl/random.h"

namespace sfl::sim {
namespace {

Eigen::MatrixXd apply(Activation a, const Eigen::MatrixXd& z) {
  switch (a) {
    case Activation::kIdentity: return z;
    case Activation::kTanh: return z.array().tanh().matrix();
    case Activation::kRelu: return z.cwiseMax(0.0);
  }
  return z;
}

// d act / d z evaluated at z; relu uses 0 at the kink.
Eigen::MatrixXd derivative(Activation a, const Eigen::MatrixXd& z) {
  switch (a) {
    case Activation::kIdentity:
      return Eigen::MatrixXd::Ones(z.rows(), z.cols());
    case Activation::kTanh:
      return (1.0 - z.array().tanh().square()).matrix();
    case Activation::kRelu:
      return (z.array() > 0.0).cast<double>().matrix();
  }
  return z;
}

Eigen::MatrixXd gather(const Batch& batch) {
  const Eigen::MatrixXd& f = *batch.features;
  Eigen::MatrixXd x(f.rows(), static_cast<Eigen::Index>(batch.index.size()));
  for (std::size_t k = 0; k < batch.index.size(); ++k) x.col(k) = f.col(batch.index[k]);
  return x;
}

struct Forward {
  std::vector<Eigen::MatrixXd> pre;   // z_l, l = 1..L
  std::vector<Eigen::MatrixXd> post;  // a_l, a_0 = input
};

Forward forward(const ModelSpec& spec, const Params& params,
                const Eigen::MatrixXd& x) {
  Forward fw;
  fw.post.push_back(x);
  for (int l = 0; l < spec.num_layers(); ++l) {
    Eigen::MatrixXd z = params[l].weight * fw.post.back();
    z.colwise() += params[l].bias;
    fw.pre.push_back(z);
    if (l + 1 < spec.num_layers()) {
      fw.post.push_back(apply(spec.hidden[l], fw.pre.back()));
    }
  }
  return fw;
}

// Weighted loss and dLoss/dOutput for the final affine output.
double output_loss(const ModelSpec& spec, const Eigen::MatrixXd& out,
                   const Batch& batch, Eigen::MatrixXd* grad) {
  const Eigen::Index n = out.cols();
  const Eigen::Map<const Eigen::RowVectorXd> w(batch.weights.data(), n);
  Eigen::MatrixXd residual;
  Eigen::RowVectorXd per_sample(n);
  if (spec.loss == LossKind::kCrossEntropy) {
    const Eigen::RowVectorXd m = out.colwise().maxCoeff();
    residual = (out.rowwise() - m).array().exp().matrix();
    const Eigen::RowVectorXd s = residual.colwise().sum();
    for (Eigen::Index k = 0; k < n; ++k) {
      const int y = (*batch.labels)[batch.index[k]];
      per_sample(k) = std::log(s(k)) + m(k) - out(y, k);
      residual.col(k) /= s(k);
      residual(y, k) -= 1.0;
    }
  } else {
    residual = out;
    for (Eigen::Index k = 0; k < n; ++k) residual((*batch.labels)[batch.index[k]], k) -= 1.0;
    per_sample = 0.5 * residual.colwise().squaredNorm();
  }
  if (grad) *grad = residual * w.asDiagonal();
  return per_sample.dot(w);
}

}  // namespace

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kTanh: return "tanh";
    case Activation::kRelu: return "relu";
  }
  return "?";
}

Activation parse_activation(const std::string& name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  throw Error(ErrorKind::kInvalidArgument, "unknown activation \"" + name + "\"");
}

void validate(const ModelSpec& spec) {
  if (spec.widths.size() < 2) {
    throw Error(ErrorKind::kInvalidArgument, "model: need at least one layer");
  }
  if (static_cast<int>(spec.hidden.size()) != spec.num_layers() - 1) {
    throw Error(ErrorKind::kInvalidArgument,
                "model: need one activation per hidden layer");
  }
  for (int w : spec.widths) {
    if (w < 1) throw Error(ErrorKind::kInvalidArgument, "model: widths must be >= 1");
  }
}

Params init_params(const ModelSpec& spec, std::uint64_t seed, double init_scale) {
  validate(spec);
  Rng rng = make_rng({seed, 0x1417ULL});
  Params params(spec.num_layers());
  for (int l = 0; l < spec.num_layers(); ++l) {
    const int in = spec.widths[l];
    const int out = spec.widths[l + 1];
    const double s = init_scale / std::sqrt(static_cast<double>(in));
    params[l].weight.resize(out, in);
    for (int c = 0; c < in; ++c) {
      for (int r = 0; r < out; ++r) params[l].weight(r, c) = s * standard_normal(rng);
    }
    params[l].bias = Eigen::VectorXd::Zero(out);
  }
  return params;
}

Params zeros_like(const Params& params) {
  Params out(params.size());
  for (std::size_t l = 0; l < params.size(); ++l) {
    out[l].weight = Eigen::MatrixXd::Zero(params[l].weight.rows(), params[l].weight.cols());
    out[l].bias = Eigen::VectorXd::Zero(params[l].bias.size());
  }
  return out;
}

std::int64_t param_count(const Params& params, int first, int last) {
  std::int64_t n = 0;
  for (int l = first; l < last; ++l) n += params[l].weight.size() + params[l].bias.size();
  return n;
}

Eigen::VectorXd flatten(const Params& params) {
  Eigen::VectorXd flat(param_count(params, 0, static_cast<int>(params.size())));
  Eigen::Index pos = 0;
  for (const Layer& layer : params) {
    flat.segment(pos, layer.weight.size()) =
        Eigen::Map<const Eigen::VectorXd>(layer.weight.data(), layer.weight.size());
    pos += layer.weight.size();
    flat.segment(pos, layer.bias.size()) = layer.bias;
    pos += layer.bias.size();
  }
  return flat;
}

Params unflatten(const Eigen::VectorXd& flat, const Params& shape) {
  Params out = zeros_like(shape);
  Eigen::Index pos = 0;
  for (Layer& layer : out) {
    Eigen::Map<Eigen::VectorXd>(layer.weight.data(), layer.weight.size()) =
        flat.segment(pos, layer.weight.size());
    pos += layer.weight.size();
    layer.bias = flat.segment(pos, layer.bias.size());
    pos += layer.bias.size();
  }
  return out;
}

void axpy(double scale, const Params& q, Params& p) {
  for (std::size_t l = 0; l < p.size(); ++l) {
    p[l].weight += scale * q[l].weight;
    p[l].bias += scale * q[l].bias;
  }
}

double squared_norm(const Layer& layer) {
  return layer.weight.squaredNorm() + layer.bias.squaredNorm();
}

double max_abs_diff(const Params& a, const Params& b) {
  double out = 0.0;
  for (std::size_t l = 0; l < a.size(); ++l) {
    out = std::max(out, (a[l].weight - b[l].weight).cwiseAbs().maxCoeff());
    out = std::max(out, (a[l].bias - b[l].bias).cwiseAbs().maxCoeff());
  }
  return out;
}

Batch mean_batch(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                 std::vector<int> index) {
  Batch b;
  b.features = &features;
  b.labels = &labels;
  b.weights.assign(index.size(), index.empty() ? 0.0 : 1.0 / index.size());
  b.index = std::move(index);
  return b;
}

double evaluate_loss(const ModelSpec& spec, const Params& params,
                     const Batch& batch) {
  const Forward fw = forward(spec, params, gather(batch));
  return output_loss(spec, fw.pre.back(), batch, nullptr);
}

LossAndGrad loss_and_grad(const ModelSpec& spec, const Params& params,
                          const Batch& batch) {
  const Forward fw = forward(spec, params, gather(batch));
  LossAndGrad out;
  out.grad.resize(params.size());
  Eigen::MatrixXd delta;
  out.loss = output_loss(spec, fw.pre.back(), batch, &delta);
  for (int l = spec.num_layers() - 1; l >= 0; --l) {
    out.grad[l].weight = delta * fw.post[l].transpose();
    out.grad[l].bias = delta.rowwise().sum();
    if (l > 0) {
      delta = params[l].weight.transpose() * delta;
      if (spec.hidden[l - 1] == Activation::kTanh) {
        delta.array() *= 1.0 - fw.post[l].array().square();
      } else {
        delta = delta.cwiseProduct(derivative(spec.hidden[l - 1], fw.pre[l - 1]));
      }
    }
  }
  return out;
}

Evaluation evaluate(const ModelSpec& spec, const Params& params,
                    const Batch& batch) {
  const Forward fw = forward(spec, params, gather(batch));
  Evaluation out;
  out.loss = output_loss(spec, fw.pre.back(), batch, nullptr);
  double hits = 0.0;
  for (Eigen::Index k = 0; k < fw.pre.back().cols(); ++k) {
    Eigen::Index arg = 0;
    fw.pre.back().col(k).maxCoeff(&arg);
    if (arg == (*batch.labels)[batch.index[k]]) hits += batch.weights[k];
  }
  out.accuracy = hits;
  return out;
}

double accuracy(const ModelSpec& spec, const Params& params,
                const Eigen::MatrixXd& features, const std::vector<int>& labels) {
  std::vector<int> all(labels.size());
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = static_cast<int>(k);
  return evaluate(spec, params, mean_batch(features, labels, all)).accuracy;
}

double gradient_check(const ModelSpec& spec, const Params& params,
                      const Batch& batch, double h, double floor) {
  const Eigen::VectorXd analytic = flatten(loss_and_grad(spec, params, batch).grad);
  Eigen::VectorXd flat = flatten(params);
  double worst = 0.0;
  for (Eigen::Index k = 0; k < flat.size(); ++k) {
    const double saved = flat(k);
    flat(k) = saved + h;
    const double plus = evaluate_loss(spec, unflatten(flat, params), batch);
    flat(k) = saved - h;
    const double minus = evaluate_loss(spec, unflatten(flat, params), batch);
    flat(k) = saved;
    const double numeric = (plus - minus) / (2.0 * h);
    const double scale = std::max({std::abs(analytic(k)), std::abs(numeric), floor});
    worst = std::max(worst, std::abs(analytic(k) - numeric) / scale);
  }
  return worst;
}

}  // namespace sfl::sim
