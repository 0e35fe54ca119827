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

#include "crsbias/popularity.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>
#include <vector>

#include "crsbias/errors.h"
#include "jsonl.h"

namespace crsbias {

ThresholdPolicy ThresholdPolicy::CountThreshold(std::int64_t min_count) {
  if (min_count < 1) throw InputError("count_threshold min_count must be >= 1");
  return ThresholdPolicy(Kind::kCountThreshold, min_count, 0.0);
}

ThresholdPolicy ThresholdPolicy::Quantile(double top_fraction) {
  if (!(top_fraction > 0.0 && top_fraction <= 1.0)) {
    throw InputError("quantile top_fraction must lie in (0, 1]");
  }
  return ThresholdPolicy(Kind::kQuantile, 0, top_fraction);
}

std::string ThresholdPolicy::Describe() const {
  std::ostringstream out;
  if (kind_ == Kind::kCountThreshold) {
    out << "count_threshold(" << min_count_ << ")";
  } else {
    out << "quantile(" << top_fraction_ << ")";
  }
  return out.str();
}

PopularityTable::PopularityTable(std::unordered_map<ItemId, std::int64_t> freq,
                                 ItemSet popular_set, ThresholdPolicy policy)
    : freq_(std::move(freq)),
      popular_set_(std::move(popular_set)),
      policy_(policy) {
  for (const auto& [item, count] : freq_) {
    if (count < 0) throw InvariantError("negative frequency for " + item);
    max_frequency_ = std::max(max_frequency_, count);
  }
}

std::int64_t PopularityTable::Frequency(std::string_view item) const {
  auto it = freq_.find(std::string(item));
  return it == freq_.end() ? 0 : it->second;
}

double PopularityTable::Popularity(std::string_view item) const {
  if (max_frequency_ == 0) return 0.0;
  return static_cast<double>(Frequency(item)) /
         static_cast<double>(max_frequency_);
}

bool PopularityTable::IsPopular(std::string_view item) const {
  return popular_set_.contains(std::string(item));
}

std::unordered_map<ItemId, std::int64_t> CountTrainingFrequencies(
    const Corpus& corpus) {
  std::unordered_map<ItemId, std::int64_t> freq;
  for (const Dialogue& dialogue : corpus.dialogues()) {
    if (dialogue.split != Split::kTrain) continue;
    for (const Turn& turn : dialogue.turns) {
      for (ItemId& item : TurnItems(turn, corpus.catalog())) {
        ++freq[std::move(item)];
      }
    }
  }
  return freq;
}

ItemSet SelectPopular(const std::unordered_map<ItemId, std::int64_t>& freq,
                      const ItemCatalog& catalog,
                      const ThresholdPolicy& policy) {
  ItemSet popular;
  if (policy.kind() == ThresholdPolicy::Kind::kCountThreshold) {
    for (const auto& [item, count] : freq) {
      if (count > policy.min_count() && catalog.Contains(item)) {
        popular.insert(item);
      }
    }
    return popular;
  }

  std::vector<std::int64_t> counts;
  counts.reserve(catalog.size());
  for (const auto& [item, name] : catalog.items()) {
    auto it = freq.find(item);
    counts.push_back(it == freq.end() ? 0 : it->second);
  }
  std::sort(counts.begin(), counts.end(), std::greater<>());
  // Guard against 0.25 * 4 landing a hair above 1.
  const double target = policy.top_fraction() * static_cast<double>(counts.size());
  std::size_t take = static_cast<std::size_t>(std::ceil(target - 1e-9));
  take = std::clamp<std::size_t>(take, 1, counts.size());
  const std::int64_t boundary = counts[take - 1];
  for (const auto& [item, count] : freq) {
    if (count > 0 && count >= boundary && catalog.Contains(item)) {
      popular.insert(item);
    }
  }
  return popular;
}

PopularityTable BuildPopularity(const Corpus& corpus,
                                const ThresholdPolicy& policy) {
  auto freq = CountTrainingFrequencies(corpus);
  ItemSet popular = SelectPopular(freq, corpus.catalog(), policy);
  return PopularityTable(std::move(freq), std::move(popular), policy);
}

double PopularItemRatio(const PopularityTable& table,
                        const ItemCatalog& catalog) {
  if (catalog.empty()) return 0.0;
  return static_cast<double>(table.popular_set().size()) /
         static_cast<double>(catalog.size());
}

void WritePopularityTable(const PopularityTable& table,
                          const ItemCatalog& catalog, std::ostream& out) {
  for (const auto& [item, name] : catalog.items()) {
    internal::json record = {{"item_id", item},
                             {"freq", table.Frequency(item)},
                             {"pop", table.Popularity(item)},
                             {"is_popular", table.IsPopular(item)}};
    out << internal::DumpLine(record) << '\n';
  }
}

}  // namespace crsbias
