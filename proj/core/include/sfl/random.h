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

#ifndef SFL_RANDOM_H_
#define SFL_RANDOM_H_

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace sfl {

// mt19937_64 is fully specified by the standard, but the std distributions
// are not. These helpers keep every seeded draw identical across toolchains.
using Rng = std::mt19937_64;

// Derives an independent stream from a list of integers (seed, round, ...).
Rng make_rng(std::initializer_list<std::uint64_t> keys);

// Uniform in [0, 1) with 53 random bits.
double uniform01(Rng& rng);

// Uniform in [lo, hi]; returns lo exactly when lo == hi.
double uniform_real(Rng& rng, double lo, double hi);

// Uniform integer in [lo, hi] by rejection sampling.
std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi);

// Standard normal via Box-Muller.
double standard_normal(Rng& rng);

// In-place Fisher-Yates shuffle.
template <typename T>
void shuffle(std::vector<T>& values, Rng& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(
        uniform_int(rng, 0, static_cast<std::int64_t>(i) - 1));
    std::swap(values[i - 1], values[j]);
  }
}

// k distinct indices from [0, n) (partial Fisher-Yates), in draw order.
std::vector<int> sample_without_replacement(int n, int k, Rng& rng);

}  // namespace sfl

#endif  // SFL_RANDOM_H_
