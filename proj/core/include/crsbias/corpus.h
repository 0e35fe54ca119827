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

#ifndef CRSBIAS_CORPUS_H_
#define CRSBIAS_CORPUS_H_

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace crsbias {

// Opaque item identifier, e.g. a ReDial movie id.
using ItemId = std::string;

enum class Speaker { kSeeker, kRecommender };
enum class Split { kTrain, kValid, kTest };
enum class Provenance { kOriginal, kSynthetic };

std::string_view ToString(Speaker speaker);
std::string_view ToString(Split split);
std::string_view ToString(Provenance provenance);
std::optional<Speaker> ParseSpeaker(std::string_view text);
std::optional<Split> ParseSplit(std::string_view text);
std::optional<Provenance> ParseProvenance(std::string_view text);

// The full item universe. Ids are unique and non-empty.
class ItemCatalog {
 public:
  ItemCatalog() = default;

  // Throws InputError on an empty or duplicate id.
  void Add(ItemId id, std::string name);

  bool Contains(std::string_view id) const;
  // Display name, or nullptr for an unknown id.
  const std::string* Name(std::string_view id) const;

  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }

  // Sorted by id.
  const std::map<ItemId, std::string, std::less<>>& items() const {
    return items_;
  }

 private:
  std::map<ItemId, std::string, std::less<>> items_;
};

struct Turn {
  Speaker speaker = Speaker::kSeeker;
  std::string text;
  std::vector<ItemId> mentioned_item_ids;
  // Accepted or ground-truth items for this turn; may be empty.
  std::vector<ItemId> target_item_ids;

  friend bool operator==(const Turn&, const Turn&) = default;
};

struct Dialogue {
  std::string dialogue_id;
  std::vector<Turn> turns;
  // Either empty (not yet segmented) or one entry per turn.
  std::vector<int> episode_index_per_turn;
  Split split = Split::kTrain;
  Provenance provenance = Provenance::kOriginal;

  bool segmented() const { return !episode_index_per_turn.empty(); }
  int episode_count() const {
    return segmented() ? episode_index_per_turn.back() + 1 : 0;
  }

  friend bool operator==(const Dialogue&, const Dialogue&) = default;
};

// An item reference that does not resolve against the catalog. Such
// references stay in the dialogue and are reported here.
struct UnknownMention {
  std::string dialogue_id;
  std::size_t turn_index = 0;
  ItemId item_id;

  friend bool operator==(const UnknownMention&,
                         const UnknownMention&) = default;
};

struct LoadSummary {
  std::size_t dialogue_count = 0;
  std::vector<UnknownMention> unknown_mentions;

  std::size_t unknown_mention_count() const { return unknown_mentions.size(); }
};

// An immutable-after-construction set of dialogues over one catalog.
class Corpus {
 public:
  explicit Corpus(ItemCatalog catalog);

  const ItemCatalog& catalog() const { return catalog_; }
  const std::vector<Dialogue>& dialogues() const { return dialogues_; }
  const LoadSummary& summary() const { return summary_; }

  // Validates the dialogue (non-empty, well-formed episode indices, unique
  // id) and records any unknown item references. Throws InputError.
  void AddDialogue(Dialogue dialogue);

  const Dialogue* Find(std::string_view dialogue_id) const;
  std::size_t CountSplit(Split split) const;

  friend bool operator==(const Corpus& a, const Corpus& b) {
    return a.catalog_.items() == b.catalog_.items() &&
           a.dialogues_ == b.dialogues_;
  }

 private:
  ItemCatalog catalog_;
  std::vector<Dialogue> dialogues_;
  std::unordered_map<std::string, std::size_t> index_;
  LoadSummary summary_;
};

enum class EpisodePolicy {
  // Keep the indices supplied by the data file.
  kExplicit,
  // Start a new episode after every turn that carries targets.
  kAcceptBoundary,
};

std::optional<EpisodePolicy> ParseEpisodePolicy(std::string_view text);
std::string_view ToString(EpisodePolicy policy);

// Throws InputError under kExplicit when the dialogue has no indices.
Dialogue SegmentEpisodes(const Dialogue& dialogue, EpisodePolicy policy);

// Applies SegmentEpisodes to every dialogue of the corpus.
Corpus SegmentCorpus(const Corpus& corpus, EpisodePolicy policy);

// Checks the episode index invariant: starts at 0, non-decreasing, steps of
// at most one. Empty input is considered valid (unsegmented).
bool ValidEpisodeIndices(const std::vector<int>& indices,
                         std::size_t turn_count);

// `@<item_id>` tokens in utterance text, in order of appearance.
std::vector<ItemId> ExtractMentionTokens(std::string_view text);

ItemCatalog LoadCatalog(const std::filesystem::path& catalog_path);
Corpus LoadCorpus(const std::filesystem::path& corpus_path,
                  const std::filesystem::path& catalog_path);
// Parses corpus records against an existing catalog.
Corpus LoadCorpus(const std::filesystem::path& corpus_path,
                  ItemCatalog catalog);

void WriteCatalog(const ItemCatalog& catalog, std::ostream& out);
// One JSON record per dialogue, in corpus order. Records always carry
// `provenance`; `episodes` is written for segmented dialogues.
void WriteDialogue(const Dialogue& dialogue, std::ostream& out);
void WriteCorpus(const Corpus& corpus, std::ostream& out);
void WriteCorpusFile(const Corpus& corpus, const std::filesystem::path& path);

// Unique catalog items referenced (mentioned or targeted) by one turn.
std::vector<ItemId> TurnItems(const Turn& turn, const ItemCatalog& catalog);

}  // namespace crsbias

#endif  // CRSBIAS_CORPUS_H_
