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

#ifndef CRSBIAS_AUGMENT_H_
#define CRSBIAS_AUGMENT_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "crsbias/corpus.h"
#include "crsbias/popularity.h"

namespace crsbias {

// Generated single-item recommendation dialogues.
class SyntheticPool {
 public:
  SyntheticPool() = default;

  // Every dialogue must recommend exactly one distinct catalog item (see
  // RecommendedItem). Throws InputError otherwise.
  static SyntheticPool FromCorpus(const Corpus& corpus);

  // Marks the dialogue synthetic and records its item. Throws InputError on
  // a duplicate id.
  void Add(Dialogue dialogue, ItemId item);

  const std::vector<Dialogue>& dialogues() const { return dialogues_; }
  const Dialogue* Find(std::string_view dialogue_id) const;
  const ItemId& ItemOf(std::string_view dialogue_id) const;
  const ItemId& ItemAt(std::size_t index) const { return items_[index]; }

  std::size_t size() const { return dialogues_.size(); }
  bool empty() const { return dialogues_.empty(); }

  // SHA-256 over the serialized dialogues in pool order.
  std::string Digest() const;

 private:
  std::vector<Dialogue> dialogues_;
  std::vector<ItemId> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

// The one item a synthetic dialogue recommends: its unique target item, or
// its unique mentioned item when no turn carries a target. nullopt when
// the dialogue references zero or several distinct items.
std::optional<ItemId> RecommendedItem(const Dialogue& dialogue);

// Popularity of a training dialogue: the maximum popularity among the
// catalog items it references; 0 when it references none.
double AnchorPopularity(const Dialogue& dialogue, const PopularityTable& table,
                        const ItemCatalog& catalog);

enum class Strategy { kOnceAug, kPopNudge };

std::string_view ToString(Strategy strategy);
std::optional<Strategy> ParseStrategy(std::string_view text);

// How PopNudge weighs the candidates of an anchor.
enum class SamplingWeights {
  // Training frequency plus the number of pool dialogues recommending the
  // item: popularity over the training data extended by the pool. Items
  // unseen in training keep a small positive weight.
  kPoolInclusive,
  // Training-split popularity only. Unseen items weigh 0 and are drawn only
  // once every positive-weight candidate has been taken.
  kTrainPopularity,
};

std::string_view ToString(SamplingWeights weights);
std::optional<SamplingWeights> ParseSamplingWeights(std::string_view text);

struct AnchorDraw {
  std::string anchor_id;
  double anchor_popularity = 0.0;
  // Pool dialogues no more popular than the anchor.
  std::size_t candidate_count = 0;
  std::vector<std::string> appended;

  friend bool operator==(const AnchorDraw&, const AnchorDraw&) = default;
};

struct PlanBatch {
  std::vector<AnchorDraw> anchors;
  // Union of the anchors' draws, first-drawn order, no duplicates.
  std::vector<std::string> appended;

  friend bool operator==(const PlanBatch&, const PlanBatch&) = default;
};

struct AugmentationPlan {
  Strategy strategy = Strategy::kPopNudge;
  SamplingWeights weights = SamplingWeights::kPoolInclusive;
  std::uint64_t seed = 0;
  std::size_t batch_size = 0;
  std::size_t k = 0;
  std::string pool_digest;
  std::vector<PlanBatch> batches;
  // Anchors whose candidate set was empty.
  std::size_t empty_candidate_anchors = 0;
  // Anchors with fewer candidates than k; all candidates were taken.
  std::size_t short_candidate_anchors = 0;

  // Every appended id once, in order of first appearance.
  std::vector<std::string> AppendedIds() const;

  friend bool operator==(const AugmentationPlan&,
                         const AugmentationPlan&) = default;
};

// Training split extended with every pool dialogue. Validation and test
// dialogues are copied unchanged. Throws InputError on an id collision.
Corpus OnceAug(const Corpus& train, const SyntheticPool& pool);

// The equivalent plan: a single batch over all training dialogues that
// appends the whole pool.
AugmentationPlan OnceAugPlan(const Corpus& train, const SyntheticPool& pool,
                             std::uint64_t seed);

struct PopNudgeOptions {
  std::size_t k = 1;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  SamplingWeights weights = SamplingWeights::kPoolInclusive;
  // Batches are planned independently; any thread count yields the same
  // plan.
  int threads = 1;
};

// Plans one pass over the training split. Training dialogues are shuffled
// with the seed and cut into batches. For every anchor dialogue, up to k
// pool dialogues whose item popularity does not exceed the anchor's are
// drawn without replacement with probability proportional to their weight
// (see SamplingWeights). Randomness for anchor a of batch b comes from the
// stream (seed, b, a), so plans do not depend on the thread count. Throws
// InputError on an empty pool or k/batch_size of zero.
AugmentationPlan PopNudge(const Corpus& train, const SyntheticPool& pool,
                          const PopularityTable& table,
                          const PopNudgeOptions& options);

struct MaterializedBatch {
  std::vector<Dialogue> originals;
  std::vector<Dialogue> appended;
};

// Replays the plan batch by batch. Throws InputError when the plan names a
// dialogue missing from `train` or `pool`.
std::vector<MaterializedBatch> MaterializeBatches(const AugmentationPlan& plan,
                                                  const Corpus& train,
                                                  const SyntheticPool& pool);

// `train` plus every appended pool dialogue exactly once, as training data.
Corpus MaterializeFlat(const AugmentationPlan& plan, const Corpus& train,
                       const SyntheticPool& pool);

struct PlanAudit {
  std::size_t appended_checked = 0;
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

// Re-checks the popularity filter and pool membership of every draw.
PlanAudit AuditPlan(const AugmentationPlan& plan, const Corpus& train,
                    const SyntheticPool& pool, const PopularityTable& table);

// Header record followed by one record per batch.
void WritePlan(const AugmentationPlan& plan, std::ostream& out);
AugmentationPlan ReadPlan(const std::filesystem::path& path);
// SHA-256 of the serialized plan.
std::string PlanDigest(const AugmentationPlan& plan);

struct ItemFrequencyRow {
  ItemId item;
  std::int64_t before = 0;
  std::int64_t after = 0;
};

struct LongTailReport {
  // One row per catalog item, sorted by descending `before` then id.
  std::vector<ItemFrequencyRow> rows;
  // Spearman correlation of per-item frequencies (average ranks for ties).
  double rank_correlation = 1.0;
  double coverage_before = 0.0;
  double coverage_after = 0.0;
  std::size_t items_decreased = 0;
  // Frequencies sorted in descending order, ready to plot.
  std::vector<std::int64_t> curve_before;
  std::vector<std::int64_t> curve_after;
};

// Compares training-split item frequencies of two corpora over one catalog.
LongTailReport CompareLongTail(const Corpus& before, const Corpus& after);

void WriteLongTailReport(const LongTailReport& report, std::ostream& out);

// 1-based ranks in descending order of value; tied values share the mean of
// their positions.
std::vector<double> DescendingAverageRanks(std::span<const double> values);

// Pearson correlation of average ranks. Two constant inputs that are equal
// give 1; otherwise a constant input gives 0.
double SpearmanCorrelation(std::span<const double> x,
                           std::span<const double> y);

}  // namespace crsbias

#endif  // CRSBIAS_AUGMENT_H_
