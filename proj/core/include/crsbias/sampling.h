// Copyright 2026 The crsbias Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CRSBIAS_SAMPLING_H_
#define CRSBIAS_SAMPLING_H_

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

#include "crsbias/errors.h"

namespace crsbias {

// 64-bit Mersenne Twister; its output sequence is fixed by the standard, so
// seeded runs reproduce across toolchains as long as the helpers below are
// used instead of the std distributions.
using Rng = std::mt19937_64;

// Derives an independent generator from a root seed and a path of stream
// coordinates (e.g. batch index, anchor position) by SplitMix64 mixing.
Rng DeriveStream(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

// Uniform double in [0, 1) built from the top 53 bits of one draw.
double UniformUnit(Rng& rng);
// Uniform integer in [0, bound). `bound` must be positive.
std::size_t UniformIndex(Rng& rng, std::size_t bound);

// Draws min(k, n) distinct indices into `weights` as if by successive draws,
// each proportional to the weights of the not-yet-drawn indices. Once the
// remaining weight mass is zero, the remaining draws are uniform. Indices
// are returned in draw order. Weights must be finite and non-negative.
std::vector<std::size_t> WeightedSampleWithoutReplacement(
    std::span<const double> weights, std::size_t k, Rng& rng);

template <typename T>
std::vector<T> WeightedSampleWithoutReplacement(std::span<const T> candidates,
                                                std::span<const double> weights,
                                                std::size_t k, Rng& rng) {
  if (candidates.size() != weights.size()) {
    throw InvariantError("weighted sampling: candidates/weights mismatch");
  }
  std::vector<T> out;
  for (std::size_t index : WeightedSampleWithoutReplacement(weights, k, rng)) {
    out.push_back(candidates[index]);
  }
  return out;
}

// Seeded Fisher-Yates shuffle using UniformIndex.
template <typename T>
void Shuffle(std::vector<T>& values, Rng& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    std::swap(values[i - 1], values[UniformIndex(rng, i)]);
  }
}

}  // namespace crsbias

#endif  // CRSBIAS_SAMPLING_H_
