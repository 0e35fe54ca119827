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

#include "fixtures.h"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

#include <unistd.h>

namespace crsbias::testing {

namespace fs = std::filesystem;

std::string FixtureItemId(std::size_t index) {
  char buffer[16];
  std::snprintf(buffer, sizeof(buffer), "m%03zu", index);
  return buffer;
}

std::string FixtureItemName(std::size_t index) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "Movie %03zu", index);
  return buffer;
}

Corpus MakeStandardCorpus(const FixtureShape& shape) {
  ItemCatalog catalog;
  std::vector<double> weights;
  for (std::size_t i = 0; i < shape.items; ++i) {
    catalog.Add(FixtureItemId(i), FixtureItemName(i));
    weights.push_back(1.0 / std::pow(static_cast<double>(i + 1),
                                      shape.zipf_exponent));
  }
  Corpus corpus(std::move(catalog));
  std::mt19937_64 rng(shape.seed);
  std::discrete_distribution<std::size_t> zipf(weights.begin(), weights.end());
  std::uniform_int_distribution<int> episodes_per_dialogue(1, 3);
  std::bernoulli_distribution names_liked_item(0.5);
  std::bernoulli_distribution says_thanks(0.3);

  const std::size_t train_end = shape.dialogues * 8 / 10;
  const std::size_t valid_end = shape.dialogues * 9 / 10;
  for (std::size_t d = 0; d < shape.dialogues; ++d) {
    Dialogue dialogue;
    dialogue.dialogue_id = "d" + std::to_string(d);
    dialogue.split = d < train_end   ? Split::kTrain
                     : d < valid_end ? Split::kValid
                                     : Split::kTest;
    const int episodes = episodes_per_dialogue(rng);
    for (int e = 0; e < episodes; ++e) {
      Turn ask;
      ask.speaker = Speaker::kSeeker;
      ask.text = "Can you recommend a movie?";
      if (names_liked_item(rng)) {
        const std::string liked = FixtureItemId(zipf(rng));
        ask.text = "I liked @" + liked + ", what else?";
        ask.mentioned_item_ids.push_back(liked);
      }
      dialogue.turns.push_back(std::move(ask));
      dialogue.episode_index_per_turn.push_back(e);

      const std::string target = FixtureItemId(zipf(rng));
      Turn answer;
      answer.speaker = Speaker::kRecommender;
      answer.text = "You might enjoy @" + target + ".";
      answer.mentioned_item_ids.push_back(target);
      answer.target_item_ids.push_back(target);
      dialogue.turns.push_back(std::move(answer));
      dialogue.episode_index_per_turn.push_back(e);
    }
    if (says_thanks(rng)) {
      Turn thanks;
      thanks.speaker = Speaker::kSeeker;
      thanks.text = "Thanks!";
      dialogue.turns.push_back(std::move(thanks));
      dialogue.episode_index_per_turn.push_back(episodes - 1);
    }
    corpus.AddDialogue(std::move(dialogue));
  }
  return corpus;
}

PromptTemplate FixtureTemplate() {
  PromptTemplate prompt;
  prompt.template_id = "fixture_en";
  prompt.language = Language::kEn;
  prompt.system_preamble = "You write movie recommendation dialogues.";
  prompt.body = "Write a dialogue recommending {item_name}.";
  return prompt;
}

SyntheticPool MakeCoveringPool(const ItemCatalog& catalog, std::uint64_t seed) {
  std::vector<ItemRef> items;
  for (const auto& [id, name] : catalog.items()) items.push_back({id, name});
  OfflineTemplateBackend backend;
  return BuildPool(backend, FixtureTemplate(), items, seed).pool;
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("crsbias_" + tag + "_" + std::to_string(::getpid()) + "_" +
           std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ignored;
  fs::remove_all(path_, ignored);
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void WriteFile(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

fs::path TestDataDir() { return CRSBIAS_TEST_DATA_DIR; }

}  // namespace crsbias::testing
