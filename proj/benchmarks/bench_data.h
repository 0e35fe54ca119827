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

#ifndef CRSBIAS_BENCHMARKS_BENCH_DATA_H_
#define CRSBIAS_BENCHMARKS_BENCH_DATA_H_

#include <cstddef>
#include <cstdint>

#include "crsbias/augment.h"
#include "crsbias/corpus.h"
#include "crsbias/metrics.h"

namespace crsbias::bench {

// Training-only corpus with Zipf-distributed item mentions, two episodes
// per dialogue (seeker turn, recommender turn each).
Corpus ZipfCorpus(std::size_t dialogues, std::size_t items,
                  std::uint64_t seed = 1);

// One single-item synthetic dialogue per catalog item.
SyntheticPool CoveringPool(const ItemCatalog& catalog);

// A random ranked list of `length` items for every recommender turn.
RankedRun RandomRun(const Corpus& corpus, std::size_t length,
                    std::uint64_t seed = 2);

}  // namespace crsbias::bench

#endif  // CRSBIAS_BENCHMARKS_BENCH_DATA_H_
