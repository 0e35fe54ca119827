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

#include "crsbias/corpus.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <utility>

#include "crsbias/errors.h"
#include "jsonl.h"

namespace crsbias {

using internal::json;

std::string_view ToString(Speaker speaker) {
  return speaker == Speaker::kSeeker ? "seeker" : "recommender";
}

std::string_view ToString(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kValid:
      return "valid";
    case Split::kTest:
      return "test";
  }
  return "train";
}

std::string_view ToString(Provenance provenance) {
  return provenance == Provenance::kOriginal ? "original" : "synthetic";
}

std::optional<Speaker> ParseSpeaker(std::string_view text) {
  if (text == "seeker") return Speaker::kSeeker;
  if (text == "recommender") return Speaker::kRecommender;
  return std::nullopt;
}

std::optional<Split> ParseSplit(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "valid" || text == "validation") return Split::kValid;
  if (text == "test") return Split::kTest;
  return std::nullopt;
}

std::optional<Provenance> ParseProvenance(std::string_view text) {
  if (text == "original") return Provenance::kOriginal;
  if (text == "synthetic") return Provenance::kSynthetic;
  return std::nullopt;
}

std::optional<EpisodePolicy> ParseEpisodePolicy(std::string_view text) {
  if (text == "explicit") return EpisodePolicy::kExplicit;
  if (text == "accept_boundary") return EpisodePolicy::kAcceptBoundary;
  return std::nullopt;
}

std::string_view ToString(EpisodePolicy policy) {
  return policy == EpisodePolicy::kExplicit ? "explicit" : "accept_boundary";
}

void ItemCatalog::Add(ItemId id, std::string name) {
  if (id.empty()) throw InputError("catalog item with empty item_id");
  auto [it, inserted] = items_.emplace(std::move(id), std::move(name));
  if (!inserted) throw InputError("duplicate item_id '" + it->first + "'");
}

bool ItemCatalog::Contains(std::string_view id) const {
  return items_.find(id) != items_.end();
}

const std::string* ItemCatalog::Name(std::string_view id) const {
  auto it = items_.find(id);
  return it == items_.end() ? nullptr : &it->second;
}

bool ValidEpisodeIndices(const std::vector<int>& indices,
                         std::size_t turn_count) {
  if (indices.empty()) return true;
  if (indices.size() != turn_count || indices.front() != 0) return false;
  for (std::size_t i = 1; i < indices.size(); ++i) {
    const int step = indices[i] - indices[i - 1];
    if (step != 0 && step != 1) return false;
  }
  return true;
}

Corpus::Corpus(ItemCatalog catalog) : catalog_(std::move(catalog)) {
  if (catalog_.empty()) throw InputError("item catalog is empty");
}

void Corpus::AddDialogue(Dialogue dialogue) {
  if (dialogue.dialogue_id.empty()) {
    throw InputError("dialogue with empty dialogue_id");
  }
  if (dialogue.turns.empty()) {
    throw InputError("dialogue '" + dialogue.dialogue_id + "' has no turns");
  }
  if (!ValidEpisodeIndices(dialogue.episode_index_per_turn,
                           dialogue.turns.size())) {
    throw InputError("dialogue '" + dialogue.dialogue_id +
                     "' has malformed episode indices");
  }
  if (index_.contains(dialogue.dialogue_id)) {
    throw InputError("duplicate dialogue_id '" + dialogue.dialogue_id + "'");
  }
  for (std::size_t t = 0; t < dialogue.turns.size(); ++t) {
    const Turn& turn = dialogue.turns[t];
    for (const auto* ids : {&turn.mentioned_item_ids, &turn.target_item_ids}) {
      for (const ItemId& id : *ids) {
        if (!catalog_.Contains(id)) {
          summary_.unknown_mentions.push_back({dialogue.dialogue_id, t, id});
        }
      }
    }
  }
  index_.emplace(dialogue.dialogue_id, dialogues_.size());
  dialogues_.push_back(std::move(dialogue));
  summary_.dialogue_count = dialogues_.size();
}

const Dialogue* Corpus::Find(std::string_view dialogue_id) const {
  auto it = index_.find(std::string(dialogue_id));
  return it == index_.end() ? nullptr : &dialogues_[it->second];
}

std::size_t Corpus::CountSplit(Split split) const {
  return static_cast<std::size_t>(
      std::count_if(dialogues_.begin(), dialogues_.end(),
                    [split](const Dialogue& d) { return d.split == split; }));
}

Dialogue SegmentEpisodes(const Dialogue& dialogue, EpisodePolicy policy) {
  if (policy == EpisodePolicy::kExplicit) {
    if (!dialogue.segmented()) {
      throw InputError("dialogue '" + dialogue.dialogue_id +
                       "' has no explicit episode indices");
    }
    return dialogue;
  }
  Dialogue out = dialogue;
  out.episode_index_per_turn.assign(dialogue.turns.size(), 0);
  int episode = 0;
  for (std::size_t t = 0; t < dialogue.turns.size(); ++t) {
    out.episode_index_per_turn[t] = episode;
    if (!dialogue.turns[t].target_item_ids.empty()) ++episode;
  }
  return out;
}

Corpus SegmentCorpus(const Corpus& corpus, EpisodePolicy policy) {
  Corpus out(corpus.catalog());
  for (const Dialogue& dialogue : corpus.dialogues()) {
    out.AddDialogue(SegmentEpisodes(dialogue, policy));
  }
  return out;
}

namespace {

bool IsTokenChar(unsigned char c) {
  return std::isalnum(c) || c == '_' || c == '-';
}

}  // namespace

std::vector<ItemId> ExtractMentionTokens(std::string_view text) {
  std::vector<ItemId> tokens;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '@') continue;
    if (i > 0 && std::isalnum(static_cast<unsigned char>(text[i - 1]))) {
      continue;
    }
    std::size_t end = i + 1;
    while (end < text.size() &&
           IsTokenChar(static_cast<unsigned char>(text[end]))) {
      ++end;
    }
    if (end > i + 1) tokens.emplace_back(text.substr(i + 1, end - i - 1));
    i = end - 1;
  }
  return tokens;
}

std::vector<ItemId> TurnItems(const Turn& turn, const ItemCatalog& catalog) {
  std::vector<ItemId> items;
  for (const auto* ids : {&turn.mentioned_item_ids, &turn.target_item_ids}) {
    for (const ItemId& id : *ids) {
      if (catalog.Contains(id) &&
          std::find(items.begin(), items.end(), id) == items.end()) {
        items.push_back(id);
      }
    }
  }
  return items;
}

ItemCatalog LoadCatalog(const std::filesystem::path& catalog_path) {
  ItemCatalog catalog;
  internal::ForEachRecord(catalog_path, [&](const json& record, std::size_t) {
    catalog.Add(internal::RequireString(record, "item_id"),
                internal::RequireString(record, "name"));
  });
  if (catalog.empty()) {
    throw InputError(catalog_path.string() + ": item catalog is empty");
  }
  return catalog;
}

namespace {

Turn ParseTurn(const json& record) {
  Turn turn;
  const std::string speaker = internal::RequireString(record, "speaker");
  auto parsed = ParseSpeaker(speaker);
  if (!parsed) throw InputError("unknown speaker '" + speaker + "'");
  turn.speaker = *parsed;
  turn.text = internal::RequireString(record, "text");
  turn.mentioned_item_ids = internal::OptionalStringArray(record, "items");
  turn.target_item_ids = internal::OptionalStringArray(record, "targets");
  for (ItemId& token : ExtractMentionTokens(turn.text)) {
    if (std::find(turn.mentioned_item_ids.begin(),
                  turn.mentioned_item_ids.end(),
                  token) == turn.mentioned_item_ids.end()) {
      turn.mentioned_item_ids.push_back(std::move(token));
    }
  }
  return turn;
}

Dialogue ParseDialogue(const json& record) {
  Dialogue dialogue;
  dialogue.dialogue_id = internal::RequireString(record, "dialogue_id");
  const std::string split = internal::RequireString(record, "split");
  auto parsed_split = ParseSplit(split);
  if (!parsed_split) throw InputError("unknown split '" + split + "'");
  dialogue.split = *parsed_split;

  const json& turns = internal::RequireField(record, "turns");
  if (!turns.is_array()) throw InputError("field 'turns' must be an array");
  for (const json& turn : turns) {
    if (!turn.is_object()) throw InputError("turn is not a JSON object");
    dialogue.turns.push_back(ParseTurn(turn));
  }

  if (auto it = record.find("episodes"); it != record.end() && !it->is_null()) {
    if (!it->is_array()) throw InputError("field 'episodes' must be an array");
    for (const json& e : *it) {
      if (!e.is_number_integer() || e.get<long long>() < 0) {
        throw InputError("field 'episodes' must hold non-negative integers");
      }
      dialogue.episode_index_per_turn.push_back(e.get<int>());
    }
  }
  if (auto it = record.find("provenance"); it != record.end()) {
    const std::string text = it->get<std::string>();
    auto provenance = ParseProvenance(text);
    if (!provenance) throw InputError("unknown provenance '" + text + "'");
    dialogue.provenance = *provenance;
  }
  return dialogue;
}

}  // namespace

Corpus LoadCorpus(const std::filesystem::path& corpus_path,
                  ItemCatalog catalog) {
  Corpus corpus(std::move(catalog));
  internal::ForEachRecord(corpus_path, [&](const json& record, std::size_t) {
    corpus.AddDialogue(ParseDialogue(record));
  });
  return corpus;
}

Corpus LoadCorpus(const std::filesystem::path& corpus_path,
                  const std::filesystem::path& catalog_path) {
  return LoadCorpus(corpus_path, LoadCatalog(catalog_path));
}

void WriteCatalog(const ItemCatalog& catalog, std::ostream& out) {
  for (const auto& [id, name] : catalog.items()) {
    out << internal::DumpLine(json{{"item_id", id}, {"name", name}}) << '\n';
  }
}

void WriteDialogue(const Dialogue& dialogue, std::ostream& out) {
  json turns = json::array();
  for (const Turn& turn : dialogue.turns) {
    turns.push_back({{"speaker", ToString(turn.speaker)},
                     {"text", turn.text},
                     {"items", turn.mentioned_item_ids},
                     {"targets", turn.target_item_ids}});
  }
  json record = {{"dialogue_id", dialogue.dialogue_id},
                 {"split", ToString(dialogue.split)},
                 {"provenance", ToString(dialogue.provenance)},
                 {"turns", std::move(turns)}};
  if (dialogue.segmented()) record["episodes"] = dialogue.episode_index_per_turn;
  out << internal::DumpLine(record) << '\n';
}

void WriteCorpus(const Corpus& corpus, std::ostream& out) {
  for (const Dialogue& dialogue : corpus.dialogues()) {
    WriteDialogue(dialogue, out);
  }
}

void WriteCorpusFile(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  WriteCorpus(corpus, out);
}

}  // namespace crsbias
