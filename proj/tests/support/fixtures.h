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

#ifndef CRSBIAS_TESTS_SUPPORT_FIXTURES_H_
#define CRSBIAS_TESTS_SUPPORT_FIXTURES_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include "crsbias/augment.h"
#include "crsbias/corpus.h"
#include "crsbias/synthgen.h"

namespace crsbias::testing {

struct FixtureShape {
  std::size_t dialogues = 500;
  std::size_t items = 300;
  // Exponent of the Zipf law item mentions are drawn from.
  double zipf_exponent = 1.0;
  std::uint64_t seed = 2023;
};

// ReDial-shaped corpus: 80/10/10 train/valid/test split, 1-3 episodes per
// dialogue, each episode a seeker turn (sometimes naming a liked item) and
// a recommender turn whose recommended item is the episode target. Item
// mentions follow a Zipf law, so the catalog tail is never mentioned.
// Episode indices are explicit.
Corpus MakeStandardCorpus(const FixtureShape& shape = {});

// Catalog id / name of the i-th fixture item.
std::string FixtureItemId(std::size_t index);
std::string FixtureItemName(std::size_t index);

PromptTemplate FixtureTemplate();

// One offline-generated dialogue per catalog item.
SyntheticPool MakeCoveringPool(const ItemCatalog& catalog,
                               std::uint64_t seed = 7);

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

std::string ReadFile(const std::filesystem::path& path);
void WriteFile(const std::filesystem::path& path, const std::string& content);

// Directory with the checked-in test data files.
std::filesystem::path TestDataDir();

}  // namespace crsbias::testing

#endif  // CRSBIAS_TESTS_SUPPORT_FIXTURES_H_
