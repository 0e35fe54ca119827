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

#include "crsbias/sampling.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace crsbias {

namespace {

std::uint64_t SplitMix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

Rng DeriveStream(std::uint64_t seed,
                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t state = seed;
  std::uint64_t mixed = SplitMix64(state);
  for (std::uint64_t coordinate : path) {
    state = mixed ^ (coordinate + 0x632be59bd9b4e019ULL);
    mixed = SplitMix64(state);
  }
  return Rng(mixed);
}

double UniformUnit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t UniformIndex(Rng& rng, std::size_t bound) {
  if (bound == 0) throw InvariantError("UniformIndex: empty range");
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t range = static_cast<std::uint64_t>(bound);
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t draw;
  do {
    draw = rng();
  } while (draw >= limit);
  return static_cast<std::size_t>(draw % range);
}

// Efraimidis-Spirakis: key_i = log(u_i) / w_i, keep the k largest. The
// descending key order has the same law as successive proportional draws.
// Zero-weight indices follow in uniformly random order.
std::vector<std::size_t> WeightedSampleWithoutReplacement(
    std::span<const double> weights, std::size_t k, Rng& rng) {
  const std::size_t n = weights.size();
  k = std::min(k, n);
  std::vector<std::pair<double, std::size_t>> keyed;
  std::vector<std::size_t> weightless;
  keyed.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights[i];
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw InvariantError("weighted sampling: weights must be finite and >= 0");
    }
    // One draw per index regardless of weight keeps streams aligned.
    double u = UniformUnit(rng);
    if (w == 0.0) {
      weightless.push_back(i);
      continue;
    }
    if (u == 0.0) u = std::numeric_limits<double>::min();
    keyed.emplace_back(std::log(u) / w, i);
  }
  auto by_key = [](const auto& a, const auto& b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  };
  const std::size_t from_keyed = std::min(k, keyed.size());
  std::partial_sort(keyed.begin(), keyed.begin() + from_keyed, keyed.end(),
                    by_key);
  std::vector<std::size_t> out;
  out.reserve(k);
  for (std::size_t i = 0; i < from_keyed; ++i) out.push_back(keyed[i].second);
  if (out.size() < k) {
    // Partial Fisher-Yates over the zero-weight indices.
    for (std::size_t i = 0; out.size() < k; ++i) {
      const std::size_t j = i + UniformIndex(rng, weightless.size() - i);
      std::swap(weightless[i], weightless[j]);
      out.push_back(weightless[i]);
    }
  }
  return out;
}

}  // namespace crsbias
