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

#include "sfl/oracle.h"
#include "sfl/random.h"
#include "sfl/split_point.h"
#include "support/test_support.h"

namespace sfl {
namespace {

using test::capture_error;
using test::rel_diff;

TEST(Oracle, GridGuard) {
  const Scenario s = generate_small_instance(1, 6, 4);
  // 16^6 * 4^6 points.
  EXPECT_EQ(capture_error([&] { brute_force_joint(s, 16); }).kind(),
            ErrorKind::kGridTooLarge);
  EXPECT_EQ(capture_error([&] { brute_force_joint(s, 0); }).kind(),
            ErrorKind::kInvalidArgument);
  EXPECT_EQ(capture_error([&] {
              enumerate_batches(1, 1, 0.1, std::vector<double>(8, 1.0), 1,
                                std::vector<int>(8, 64));
            }).kind(),
            ErrorKind::kGridTooLarge);
}

TEST(Oracle, MonotoneInBatchLimit) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Scenario s = generate_small_instance(seed, 2, 3);
    double prev = 0.0;
    bool have = false;
    for (int bmax : {2, 4, 8, 16}) {
      JointOptimum r;
      try {
        r = brute_force_joint(s, bmax);
      } catch (const Error& e) {
        ASSERT_EQ(e.kind(), ErrorKind::kInfeasible);
        continue;
      }
      EXPECT_EQ(r.evaluated, static_cast<std::int64_t>(bmax) * bmax * 9);
      if (have) {
        EXPECT_LE(r.theta, prev);
      }
      prev = r.theta;
      have = true;
    }
  }
}

TEST(Oracle, OptimumIsFeasibleAndLexicographicallyFirst) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Scenario s = generate_small_instance(seed, 2, 3);
    JointOptimum r;
    try {
      r = brute_force_joint(s, 6);
    } catch (const Error&) {
      continue;
    }
    EXPECT_TRUE(fits_memory(s, r.decision));
    EXPECT_LE(rel_diff(r.theta, objective_theta(s, r.decision)), 0.0);
  }
}

TEST(Oracle, CutEnumerationAgreesWithDinkelbach) {
  Rng rng = make_rng({5});
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Scenario s = generate_small_instance(seed, 3, 3);
    std::vector<int> batch;
    for (int i = 0; i < 3; ++i) batch.push_back(static_cast<int>(uniform_int(rng, 1, 10)));
    CutOptimum brute;
    try {
      brute = enumerate_cuts(s, batch);
    } catch (const Error&) {
      continue;
    }
    EXPECT_EQ(brute.evaluated, 27);
    EXPECT_EQ(solve_ms_dinkelbach(s, batch).cuts, brute.cuts);
  }
}

TEST(Oracle, BatchEnumerationTieBreakAndInfeasibility) {
  // Symmetric devices: the first optimum in lexicographic order is returned.
  const BatchOptimum r = enumerate_batches(1.0, 1.0, 0.1, {0.1, 0.1}, 1.0, {6, 6});
  EXPECT_EQ(r.batch[0], r.batch[1]);
  EXPECT_EQ(capture_error([&] { enumerate_batches(1.0, 0.1, 1.0, {0.1}, 1.0, {3}); }).kind(),
            ErrorKind::kInfeasible);
  EXPECT_EQ(capture_error([&] { enumerate_batches(1.0, 1.0, 0.1, {0.1}, 1.0, {0}); }).kind(),
            ErrorKind::kInfeasible);
}

}  // namespace
}  // namespace sfl
