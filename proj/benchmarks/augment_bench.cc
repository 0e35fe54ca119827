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

#include "bench_data.h"
#include "benchmark/benchmark.h"
#include "crsbias/augment.h"
#include "crsbias/popularity.h"

namespace crsbias {
namespace {

void BM_PopNudge(benchmark::State& state) {
  const Corpus corpus = bench::ZipfCorpus(5000, 3000);
  const SyntheticPool pool = bench::CoveringPool(corpus.catalog());
  const PopularityTable table =
      BuildPopularity(corpus, ThresholdPolicy::CountThreshold(5));
  const PopNudgeOptions options{.k = static_cast<std::size_t>(state.range(0)),
                                .batch_size = 32,
                                .seed = 7};
  for (auto _ : state) {
    AugmentationPlan plan = PopNudge(corpus, pool, table, options);
    benchmark::DoNotOptimize(plan.batches.size());
  }
  state.SetItemsProcessed(state.iterations() * corpus.dialogues().size());
}
BENCHMARK(BM_PopNudge)->Arg(1)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_MaterializeFlat(benchmark::State& state) {
  const Corpus corpus = bench::ZipfCorpus(5000, 3000);
  const SyntheticPool pool = bench::CoveringPool(corpus.catalog());
  const PopularityTable table =
      BuildPopularity(corpus, ThresholdPolicy::CountThreshold(5));
  const AugmentationPlan plan =
      PopNudge(corpus, pool, table, {.k = 10, .batch_size = 32, .seed = 7});
  for (auto _ : state) {
    Corpus flat = MaterializeFlat(plan, corpus, pool);
    benchmark::DoNotOptimize(flat.dialogues().size());
  }
}
BENCHMARK(BM_MaterializeFlat)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace crsbias
