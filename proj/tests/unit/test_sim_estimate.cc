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

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include "sfl/sim/estimate.h"
#include "support/test_support.h"

namespace sfl::sim {
namespace {

using test::capture_error;

Dataset blobs() {
  BlobConfig cfg;
  cfg.samples = 64;
  cfg.dim = 4;
  cfg.classes = 3;
  return make_blobs(12, cfg);
}

TEST(Estimate, SmoothnessOfALinearLeastSquaresModel) {
  // One affine layer with squared loss: the Hessian is the second moment of
  // [x; 1] repeated per output, so secant slopes cannot exceed its top
  // eigenvalue.
  const Dataset d = blobs();
  const ModelSpec spec{{4, 3}, {}, LossKind::kSquared};
  Eigen::MatrixXd aug(5, d.size());
  aug.topRows(4) = d.features;
  aug.row(4).setOnes();
  const Eigen::MatrixXd second = aug * aug.transpose() / d.size();
  const double top = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(second).eigenvalues().maxCoeff();
  ProbeConfig cfg;
  cfg.probes = 6;
  const ConstantEstimates est = estimate_constants(spec, init_params(spec, 1), d, cfg);
  EXPECT_LE(est.smoothness, top * 1.05);
  EXPECT_GT(est.smoothness, 0.0);
}

TEST(Estimate, FullBatchHasNoVariance) {
  const Dataset d = blobs();
  const ModelSpec spec{{4, 6, 3}, {Activation::kTanh}};
  ProbeConfig cfg;
  cfg.batch = d.size();
  cfg.draws = 3;
  const ConstantEstimates est = estimate_constants(spec, init_params(spec, 2), d, cfg);
  for (double v : est.grad_var) EXPECT_LE(v, 1e-20);
}

TEST(Estimate, MomentDominatesPerSampleVariance) {
  const Dataset d = blobs();
  const ModelSpec spec{{4, 6, 5, 3}, {Activation::kTanh, Activation::kRelu}};
  ProbeConfig cfg;
  const ConstantEstimates est = estimate_constants(spec, init_params(spec, 3), d, cfg);
  ASSERT_EQ(est.grad_var.size(), 3u);
  for (int l = 0; l < 3; ++l) {
    EXPECT_GT(est.grad_var[l], 0.0);
    EXPECT_GE(est.grad_moment[l], est.grad_var[l] / cfg.batch);
  }
}

TEST(Estimate, ApplyAndArgumentChecks) {
  const Dataset d = blobs();
  const ModelSpec spec{{4, 6, 3}, {Activation::kTanh}};
  const Params p = init_params(spec, 0);
  ProbeConfig cfg;
  cfg.probes = 1;
  EXPECT_EQ(capture_error([&] { estimate_constants(spec, p, d, cfg); }).kind(),
            ErrorKind::kInvalidArgument);
  cfg = ProbeConfig{};
  cfg.batch = d.size() + 1;
  EXPECT_EQ(capture_error([&] { estimate_constants(spec, p, d, cfg); }).kind(),
            ErrorKind::kInvalidArgument);

  const ConstantEstimates est = estimate_constants(spec, p, d, ProbeConfig{});
  Scenario s = generate_small_instance(1, 2, 2);
  apply_estimates(est, s);
  EXPECT_EQ(s.training.smoothness, est.smoothness);
  EXPECT_EQ(s.layers.grad_var, est.grad_var);
  Scenario deep = generate_small_instance(1, 2, 3);
  EXPECT_EQ(capture_error([&] { apply_estimates(est, deep); }).kind(),
            ErrorKind::kInvalidArgument);
}

}  // namespace
}  // namespace sfl::sim
