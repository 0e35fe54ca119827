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

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace crsbias::bench {
namespace {

std::string ItemIdAt(std::size_t index) { return "i" + std::to_string(index); }

}  // namespace

Corpus ZipfCorpus(std::size_t dialogues, std::size_t items,
                  std::uint64_t seed) {
  ItemCatalog catalog;
  std::vector<double> weights;
  for (std::size_t i = 0; i < items; ++i) {
    catalog.Add(ItemIdAt(i), "Item " + std::to_string(i));
    weights.push_back(1.0 / static_cast<double>(i + 1));
  }
  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> zipf(weights.begin(), weights.end());
  Corpus corpus(catalog);
  for (std::size_t d = 0; d < dialogues; ++d) {
    Dialogue dialogue;
    dialogue.dialogue_id = "d" + std::to_string(d);
    for (int episode = 0; episode < 2; ++episode) {
      const ItemId liked = ItemIdAt(zipf(rng));
      const ItemId target = ItemIdAt(zipf(rng));
      dialogue.turns.push_back(
          {Speaker::kSeeker, "I liked @" + liked, {liked}, {}});
      dialogue.turns.push_back(
          {Speaker::kRecommender, "Try @" + target, {target}, {target}});
      dialogue.episode_index_per_turn.insert(
          dialogue.episode_index_per_turn.end(), {episode, episode});
    }
    corpus.AddDialogue(std::move(dialogue));
  }
  return corpus;
}

SyntheticPool CoveringPool(const ItemCatalog& catalog) {
  SyntheticPool pool;
  for (const auto& [id, name] : catalog.items()) {
    Dialogue dialogue;
    dialogue.dialogue_id = "syn_" + id;
    dialogue.turns = {{Speaker::kSeeker, "Any ideas?", {}, {}},
                      {Speaker::kRecommender, "Try @" + id, {id}, {id}}};
    dialogue.episode_index_per_turn = {0, 0};
    pool.Add(std::move(dialogue), id);
  }
  return pool;
}

RankedRun RandomRun(const Corpus& corpus, std::size_t length,
                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<ItemId> items;
  for (const auto& [id, name] : corpus.catalog().items()) items.push_back(id);
  length = std::min(length, items.size());
  RankedRun run;
  run.model_name = "random";
  for (const Dialogue& d : corpus.dialogues()) {
    for (std::size_t t = 0; t < d.turns.size(); ++t) {
      if (d.turns[t].speaker != Speaker::kRecommender) continue;
      std::shuffle(items.begin(), items.end(), rng);
      run.entries.push_back({d.dialogue_id, t, d.episode_index_per_turn[t],
                             {items.begin(), items.begin() + length},
                             d.turns[t].target_item_ids});
    }
  }
  return run;
}

}  // namespace crsbias::bench
