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

#ifndef CRSBIAS_POPULARITY_H_
#define CRSBIAS_POPULARITY_H_

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

#include "crsbias/corpus.h"

namespace crsbias {

using ItemSet = std::unordered_set<ItemId>;

// Decides which items count as popular.
class ThresholdPolicy {
 public:
  enum class Kind { kCountThreshold, kQuantile };

  // Items with strictly more than `min_count` training interactions.
  static ThresholdPolicy CountThreshold(std::int64_t min_count);
  // The top `top_fraction` of the catalog by frequency. Items tied with the
  // boundary frequency are all included; never-seen items never are.
  static ThresholdPolicy Quantile(double top_fraction);

  Kind kind() const { return kind_; }
  std::int64_t min_count() const { return min_count_; }
  double top_fraction() const { return top_fraction_; }

  std::string Describe() const;

 private:
  ThresholdPolicy(Kind kind, std::int64_t min_count, double top_fraction)
      : kind_(kind), min_count_(min_count), top_fraction_(top_fraction) {}

  Kind kind_;
  std::int64_t min_count_;
  double top_fraction_;
};

// Item frequencies over the training split, max-normalized popularity, and
// the popular set. Only catalog items appear; unknown references are
// ignored here (they are reported by the loader).
class PopularityTable {
 public:
  PopularityTable(std::unordered_map<ItemId, std::int64_t> freq,
                  ItemSet popular_set, ThresholdPolicy policy);

  // 0 for items never seen in training.
  std::int64_t Frequency(std::string_view item) const;
  // freq / max freq, in [0, 1]; 0 for items never seen in training.
  double Popularity(std::string_view item) const;
  bool IsPopular(std::string_view item) const;

  std::int64_t max_frequency() const { return max_frequency_; }
  const std::unordered_map<ItemId, std::int64_t>& frequencies() const {
    return freq_;
  }
  const ItemSet& popular_set() const { return popular_set_; }
  const ThresholdPolicy& policy() const { return policy_; }

 private:
  std::unordered_map<ItemId, std::int64_t> freq_;
  ItemSet popular_set_;
  ThresholdPolicy policy_;
  std::int64_t max_frequency_ = 0;
};

// Per-item interaction counts over training-split turns of `corpus`. An item
// counts at most once per turn, whether mentioned, targeted, or both.
std::unordered_map<ItemId, std::int64_t> CountTrainingFrequencies(
    const Corpus& corpus);

// Applies `policy` to precomputed frequencies over `catalog`.
ItemSet SelectPopular(const std::unordered_map<ItemId, std::int64_t>& freq,
                      const ItemCatalog& catalog,
                      const ThresholdPolicy& policy);

PopularityTable BuildPopularity(const Corpus& corpus,
                                const ThresholdPolicy& policy);

// |popular set| / |catalog|.
double PopularItemRatio(const PopularityTable& table,
                        const ItemCatalog& catalog);

// One record per catalog item: item_id, freq, pop, is_popular.
void WritePopularityTable(const PopularityTable& table,
                          const ItemCatalog& catalog, std::ostream& out);

}  // namespace crsbias

#endif  // CRSBIAS_POPULARITY_H_
