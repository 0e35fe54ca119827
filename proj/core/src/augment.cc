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

#include "crsbias/augment.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>
#include <unordered_set>
#include <utility>

#include "crsbias/digest.h"
#include "crsbias/errors.h"
#include "crsbias/metrics.h"
#include "crsbias/sampling.h"
#include "jsonl.h"

namespace crsbias {

using internal::json;

namespace {

constexpr std::uint64_t kShuffleStream = 0;
constexpr std::uint64_t kAnchorStream = 1;

}  // namespace

std::optional<ItemId> RecommendedItem(const Dialogue& dialogue) {
  std::vector<ItemId> targets;
  std::vector<ItemId> mentions;
  for (const Turn& turn : dialogue.turns) {
    for (const ItemId& id : turn.target_item_ids) {
      if (std::find(targets.begin(), targets.end(), id) == targets.end()) {
        targets.push_back(id);
      }
    }
    for (const ItemId& id : turn.mentioned_item_ids) {
      if (std::find(mentions.begin(), mentions.end(), id) == mentions.end()) {
        mentions.push_back(id);
      }
    }
  }
  if (targets.size() == 1) return targets.front();
  if (targets.empty() && mentions.size() == 1) return mentions.front();
  return std::nullopt;
}

SyntheticPool SyntheticPool::FromCorpus(const Corpus& corpus) {
  SyntheticPool pool;
  for (const Dialogue& dialogue : corpus.dialogues()) {
    std::optional<ItemId> item = RecommendedItem(dialogue);
    if (!item) {
      throw InputError("synthetic dialogue '" + dialogue.dialogue_id +
                       "' does not recommend exactly one item");
    }
    if (!corpus.catalog().Contains(*item)) {
      throw InputError("synthetic dialogue '" + dialogue.dialogue_id +
                       "' recommends unknown item '" + *item + "'");
    }
    pool.Add(dialogue, *item);
  }
  return pool;
}

void SyntheticPool::Add(Dialogue dialogue, ItemId item) {
  if (index_.contains(dialogue.dialogue_id)) {
    throw InputError("duplicate synthetic dialogue_id '" +
                     dialogue.dialogue_id + "'");
  }
  dialogue.provenance = Provenance::kSynthetic;
  index_.emplace(dialogue.dialogue_id, dialogues_.size());
  dialogues_.push_back(std::move(dialogue));
  items_.push_back(std::move(item));
}

const Dialogue* SyntheticPool::Find(std::string_view dialogue_id) const {
  auto it = index_.find(std::string(dialogue_id));
  return it == index_.end() ? nullptr : &dialogues_[it->second];
}

const ItemId& SyntheticPool::ItemOf(std::string_view dialogue_id) const {
  auto it = index_.find(std::string(dialogue_id));
  if (it == index_.end()) {
    throw InputError("unknown synthetic dialogue '" + std::string(dialogue_id) +
                     "'");
  }
  return items_[it->second];
}

std::string SyntheticPool::Digest() const {
  std::ostringstream out;
  for (const Dialogue& dialogue : dialogues_) WriteDialogue(dialogue, out);
  return Sha256Hex(out.str());
}

double AnchorPopularity(const Dialogue& dialogue, const PopularityTable& table,
                        const ItemCatalog& catalog) {
  double best = 0.0;
  for (const Turn& turn : dialogue.turns) {
    for (const ItemId& item : TurnItems(turn, catalog)) {
      best = std::max(best, table.Popularity(item));
    }
  }
  return best;
}

std::string_view ToString(Strategy strategy) {
  return strategy == Strategy::kOnceAug ? "once_aug" : "pop_nudge";
}

std::optional<Strategy> ParseStrategy(std::string_view text) {
  if (text == "once_aug") return Strategy::kOnceAug;
  if (text == "pop_nudge") return Strategy::kPopNudge;
  return std::nullopt;
}

std::string_view ToString(SamplingWeights weights) {
  return weights == SamplingWeights::kPoolInclusive ? "pool_inclusive"
                                                    : "train_popularity";
}

std::optional<SamplingWeights> ParseSamplingWeights(std::string_view text) {
  if (text == "pool_inclusive") return SamplingWeights::kPoolInclusive;
  if (text == "train_popularity") return SamplingWeights::kTrainPopularity;
  return std::nullopt;
}

std::vector<std::string> AugmentationPlan::AppendedIds() const {
  std::vector<std::string> ids;
  std::unordered_set<std::string> seen;
  for (const PlanBatch& batch : batches) {
    for (const std::string& id : batch.appended) {
      if (seen.insert(id).second) ids.push_back(id);
    }
  }
  return ids;
}

namespace {

Dialogue AsTraining(const Dialogue& dialogue) {
  Dialogue out = dialogue;
  out.split = Split::kTrain;
  out.provenance = Provenance::kSynthetic;
  return out;
}

std::vector<const Dialogue*> TrainingDialogues(const Corpus& corpus) {
  std::vector<const Dialogue*> out;
  for (const Dialogue& dialogue : corpus.dialogues()) {
    if (dialogue.split == Split::kTrain) out.push_back(&dialogue);
  }
  return out;
}

}  // namespace

Corpus OnceAug(const Corpus& train, const SyntheticPool& pool) {
  Corpus out = train;
  for (const Dialogue& dialogue : pool.dialogues()) {
    if (train.Find(dialogue.dialogue_id) != nullptr) {
      throw InputError("synthetic dialogue_id '" + dialogue.dialogue_id +
                       "' collides with the training corpus");
    }
    out.AddDialogue(AsTraining(dialogue));
  }
  return out;
}

AugmentationPlan OnceAugPlan(const Corpus& train, const SyntheticPool& pool,
                             std::uint64_t seed) {
  AugmentationPlan plan;
  plan.strategy = Strategy::kOnceAug;
  plan.seed = seed;
  plan.pool_digest = pool.Digest();
  PlanBatch batch;
  for (const Dialogue* dialogue : TrainingDialogues(train)) {
    batch.anchors.push_back({dialogue->dialogue_id, 0.0, 0, {}});
  }
  for (const Dialogue& dialogue : pool.dialogues()) {
    batch.appended.push_back(dialogue.dialogue_id);
  }
  plan.batch_size = batch.anchors.size();
  plan.k = pool.size();
  plan.batches.push_back(std::move(batch));
  return plan;
}

AugmentationPlan PopNudge(const Corpus& train, const SyntheticPool& pool,
                          const PopularityTable& table,
                          const PopNudgeOptions& options) {
  if (pool.empty()) throw InputError("pop_nudge: synthetic pool is empty");
  if (options.k == 0) throw InputError("pop_nudge: k must be >= 1");
  if (options.batch_size == 0) {
    throw InputError("pop_nudge: batch_size must be >= 1");
  }

  // Pool ordered by (item popularity, pool position) so the candidates of
  // any anchor form a prefix.
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> pool_pop(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    pool_pop[i] = table.Popularity(pool.ItemAt(i));
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return pool_pop[a] < pool_pop[b];
                   });
  std::vector<double> sorted_pop;
  sorted_pop.reserve(order.size());
  for (std::size_t i : order) sorted_pop.push_back(pool_pop[i]);

  std::vector<double> sorted_weight;
  sorted_weight.reserve(order.size());
  if (options.weights == SamplingWeights::kTrainPopularity) {
    sorted_weight = sorted_pop;
  } else {
    std::unordered_map<ItemId, double> pool_count;
    for (std::size_t i = 0; i < pool.size(); ++i) ++pool_count[pool.ItemAt(i)];
    for (std::size_t i : order) {
      const ItemId& item = pool.ItemAt(i);
      sorted_weight.push_back(static_cast<double>(table.Frequency(item)) +
                              pool_count[item]);
    }
  }

  std::vector<const Dialogue*> anchors = TrainingDialogues(train);
  Rng shuffle_rng = DeriveStream(options.seed, {kShuffleStream});
  Shuffle(anchors, shuffle_rng);

  AugmentationPlan plan;
  plan.strategy = Strategy::kPopNudge;
  plan.weights = options.weights;
  plan.seed = options.seed;
  plan.batch_size = options.batch_size;
  plan.k = options.k;
  plan.pool_digest = pool.Digest();
  const std::size_t batch_count =
      (anchors.size() + options.batch_size - 1) / options.batch_size;
  plan.batches.resize(batch_count);

  auto plan_batch = [&](std::size_t b) {
    PlanBatch& batch = plan.batches[b];
    std::unordered_set<std::string> seen;
    const std::size_t begin = b * options.batch_size;
    const std::size_t end = std::min(anchors.size(), begin + options.batch_size);
    for (std::size_t a = begin; a < end; ++a) {
      const Dialogue& anchor = *anchors[a];
      AnchorDraw draw;
      draw.anchor_id = anchor.dialogue_id;
      draw.anchor_popularity =
          AnchorPopularity(anchor, table, train.catalog());
      draw.candidate_count = static_cast<std::size_t>(
          std::upper_bound(sorted_pop.begin(), sorted_pop.end(),
                           draw.anchor_popularity) -
          sorted_pop.begin());
      Rng rng = DeriveStream(options.seed, {kAnchorStream, b, a - begin});
      std::span<const double> weights(sorted_weight.data(),
                                      draw.candidate_count);
      for (std::size_t pick :
           WeightedSampleWithoutReplacement(weights, options.k, rng)) {
        const std::string& id = pool.dialogues()[order[pick]].dialogue_id;
        draw.appended.push_back(id);
        if (seen.insert(id).second) batch.appended.push_back(id);
      }
      batch.anchors.push_back(std::move(draw));
    }
  };

  const std::size_t threads = static_cast<std::size_t>(
      std::clamp<int>(options.threads, 1, 64));
  if (threads == 1 || batch_count < 2) {
    for (std::size_t b = 0; b < batch_count; ++b) plan_batch(b);
  } else {
    std::vector<std::thread> workers;
    for (std::size_t t = 0; t < threads; ++t) {
      workers.emplace_back([&, t] {
        for (std::size_t b = t; b < batch_count; b += threads) plan_batch(b);
      });
    }
    for (std::thread& worker : workers) worker.join();
  }

  for (const PlanBatch& batch : plan.batches) {
    for (const AnchorDraw& draw : batch.anchors) {
      if (draw.candidate_count == 0) {
        ++plan.empty_candidate_anchors;
      } else if (draw.candidate_count < options.k) {
        ++plan.short_candidate_anchors;
      }
    }
  }
  return plan;
}

namespace {

const Dialogue& RequireTrain(const Corpus& train, const std::string& id) {
  const Dialogue* dialogue = train.Find(id);
  if (dialogue == nullptr) {
    throw InputError("plan references unknown training dialogue '" + id + "'");
  }
  return *dialogue;
}

const Dialogue& RequirePool(const SyntheticPool& pool, const std::string& id) {
  const Dialogue* dialogue = pool.Find(id);
  if (dialogue == nullptr) {
    throw InputError("plan references unknown synthetic dialogue '" + id + "'");
  }
  return *dialogue;
}

}  // namespace

std::vector<MaterializedBatch> MaterializeBatches(const AugmentationPlan& plan,
                                                  const Corpus& train,
                                                  const SyntheticPool& pool) {
  std::vector<MaterializedBatch> out;
  out.reserve(plan.batches.size());
  for (const PlanBatch& batch : plan.batches) {
    MaterializedBatch materialized;
    for (const AnchorDraw& draw : batch.anchors) {
      materialized.originals.push_back(RequireTrain(train, draw.anchor_id));
    }
    for (const std::string& id : batch.appended) {
      materialized.appended.push_back(AsTraining(RequirePool(pool, id)));
    }
    out.push_back(std::move(materialized));
  }
  return out;
}

Corpus MaterializeFlat(const AugmentationPlan& plan, const Corpus& train,
                       const SyntheticPool& pool) {
  for (const PlanBatch& batch : plan.batches) {
    for (const AnchorDraw& draw : batch.anchors) {
      RequireTrain(train, draw.anchor_id);
    }
  }
  Corpus out = train;
  for (const std::string& id : plan.AppendedIds()) {
    if (train.Find(id) != nullptr) {
      throw InputError("synthetic dialogue_id '" + id +
                       "' collides with the training corpus");
    }
    out.AddDialogue(AsTraining(RequirePool(pool, id)));
  }
  return out;
}

PlanAudit AuditPlan(const AugmentationPlan& plan, const Corpus& train,
                    const SyntheticPool& pool, const PopularityTable& table) {
  PlanAudit audit;
  for (const PlanBatch& batch : plan.batches) {
    std::unordered_set<std::string> union_ids;
    for (const AnchorDraw& draw : batch.anchors) {
      const Dialogue* anchor = train.Find(draw.anchor_id);
      if (anchor == nullptr) {
        audit.violations.push_back("unknown anchor " + draw.anchor_id);
        continue;
      }
      const double anchor_pop =
          AnchorPopularity(*anchor, table, train.catalog());
      if (plan.strategy == Strategy::kPopNudge && draw.appended.size() > plan.k) {
        audit.violations.push_back(draw.anchor_id + ": more than k draws");
      }
      std::unordered_set<std::string> distinct;
      for (const std::string& id : draw.appended) {
        ++audit.appended_checked;
        union_ids.insert(id);
        if (!distinct.insert(id).second) {
          audit.violations.push_back(draw.anchor_id + ": repeated draw " + id);
        }
        if (pool.Find(id) == nullptr) {
          audit.violations.push_back(draw.anchor_id + ": unknown pool id " +
                                     id);
          continue;
        }
        const double pop = table.Popularity(pool.ItemOf(id));
        if (pop > anchor_pop) {
          std::ostringstream message;
          message << draw.anchor_id << ": appended " << id << " has pop "
                  << pop << " > anchor pop " << anchor_pop;
          audit.violations.push_back(message.str());
        }
      }
    }
    if (plan.strategy == Strategy::kPopNudge) {
      std::unordered_set<std::string> listed(batch.appended.begin(),
                                             batch.appended.end());
      if (listed.size() != batch.appended.size() || listed != union_ids) {
        audit.violations.push_back(
            "batch appended list is not the deduplicated union of its draws");
      }
    }
  }
  return audit;
}

void WritePlan(const AugmentationPlan& plan, std::ostream& out) {
  json header = {{"record", "header"},
                 {"strategy", ToString(plan.strategy)},
                 {"sampling_weights", ToString(plan.weights)},
                 {"seed", plan.seed},
                 {"k", plan.k},
                 {"batch_size", plan.batch_size},
                 {"pool_digest", plan.pool_digest},
                 {"batches", plan.batches.size()},
                 {"empty_candidate_anchors", plan.empty_candidate_anchors},
                 {"short_candidate_anchors", plan.short_candidate_anchors}};
  out << internal::DumpLine(header) << '\n';
  for (std::size_t b = 0; b < plan.batches.size(); ++b) {
    const PlanBatch& batch = plan.batches[b];
    json anchors = json::array();
    for (const AnchorDraw& draw : batch.anchors) {
      anchors.push_back({{"id", draw.anchor_id},
                         {"pop", draw.anchor_popularity},
                         {"candidates", draw.candidate_count},
                         {"appended", draw.appended}});
    }
    json record = {{"record", "batch"},
                   {"index", b},
                   {"anchors", std::move(anchors)},
                   {"appended", batch.appended}};
    out << internal::DumpLine(record) << '\n';
  }
}

AugmentationPlan ReadPlan(const std::filesystem::path& path) {
  AugmentationPlan plan;
  bool have_header = false;
  internal::ForEachRecord(path, [&](const json& record, std::size_t) {
    const std::string kind = internal::RequireString(record, "record");
    if (kind == "header") {
      if (have_header) throw InputError("duplicate plan header");
      have_header = true;
      const std::string strategy = internal::RequireString(record, "strategy");
      auto parsed = ParseStrategy(strategy);
      if (!parsed) throw InputError("unknown strategy '" + strategy + "'");
      plan.strategy = *parsed;
      if (auto it = record.find("sampling_weights"); it != record.end()) {
        auto weights = ParseSamplingWeights(it->get<std::string>());
        if (!weights) throw InputError("unknown sampling_weights");
        plan.weights = *weights;
      }
      plan.seed = internal::RequireField(record, "seed").get<std::uint64_t>();
      plan.k = internal::RequireField(record, "k").get<std::size_t>();
      plan.batch_size =
          internal::RequireField(record, "batch_size").get<std::size_t>();
      plan.pool_digest = internal::RequireString(record, "pool_digest");
      plan.empty_candidate_anchors =
          record.value("empty_candidate_anchors", std::size_t{0});
      plan.short_candidate_anchors =
          record.value("short_candidate_anchors", std::size_t{0});
      return;
    }
    if (kind != "batch") throw InputError("unknown plan record '" + kind + "'");
    if (!have_header) throw InputError("plan batch before header");
    PlanBatch batch;
    for (const json& anchor : internal::RequireField(record, "anchors")) {
      AnchorDraw draw;
      draw.anchor_id = internal::RequireString(anchor, "id");
      draw.anchor_popularity = internal::RequireField(anchor, "pop").get<double>();
      draw.candidate_count =
          internal::RequireField(anchor, "candidates").get<std::size_t>();
      draw.appended = internal::RequireStringArray(anchor, "appended");
      batch.anchors.push_back(std::move(draw));
    }
    batch.appended = internal::RequireStringArray(record, "appended");
    plan.batches.push_back(std::move(batch));
  });
  if (!have_header) throw InputError(path.string() + ": plan has no header");
  return plan;
}

std::string PlanDigest(const AugmentationPlan& plan) {
  std::ostringstream out;
  WritePlan(plan, out);
  return Sha256Hex(out.str());
}

std::vector<double> DescendingAverageRanks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] > values[b];
  });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) {
      ++j;
    }
    // Positions i..j (0-based) share rank mean(i+1 .. j+1).
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t p = i; p <= j; ++p) ranks[order[p]] = rank;
    i = j + 1;
  }
  return ranks;
}

double SpearmanCorrelation(std::span<const double> x,
                           std::span<const double> y) {
  const std::vector<double> rx = DescendingAverageRanks(x);
  const std::vector<double> ry = DescendingAverageRanks(y);
  std::optional<double> rho = PearsonCorrelation(rx, ry);
  if (rho) return *rho;
  return rx == ry ? 1.0 : 0.0;
}

LongTailReport CompareLongTail(const Corpus& before, const Corpus& after) {
  if (before.catalog().items() != after.catalog().items()) {
    throw InputError("long-tail comparison needs both corpora on one catalog");
  }
  const auto freq_before = CountTrainingFrequencies(before);
  const auto freq_after = CountTrainingFrequencies(after);
  auto lookup = [](const auto& freq, const ItemId& item) -> std::int64_t {
    auto it = freq.find(item);
    return it == freq.end() ? 0 : it->second;
  };

  LongTailReport report;
  for (const auto& [item, name] : before.catalog().items()) {
    report.rows.push_back(
        {item, lookup(freq_before, item), lookup(freq_after, item)});
  }
  std::stable_sort(report.rows.begin(), report.rows.end(),
                   [](const ItemFrequencyRow& a, const ItemFrequencyRow& b) {
                     return a.before > b.before;
                   });
  std::vector<double> x;
  std::vector<double> y;
  for (const ItemFrequencyRow& row : report.rows) {
    x.push_back(static_cast<double>(row.before));
    y.push_back(static_cast<double>(row.after));
    report.curve_before.push_back(row.before);
    report.curve_after.push_back(row.after);
    if (row.after < row.before) ++report.items_decreased;
  }
  std::sort(report.curve_before.begin(), report.curve_before.end(),
            std::greater<>());
  std::sort(report.curve_after.begin(), report.curve_after.end(),
            std::greater<>());
  report.rank_correlation = SpearmanCorrelation(x, y);
  report.coverage_before = InitialItemCoverage(before);
  report.coverage_after = InitialItemCoverage(after);
  return report;
}

void WriteLongTailReport(const LongTailReport& report, std::ostream& out) {
  json items = json::array();
  for (const ItemFrequencyRow& row : report.rows) {
    items.push_back(
        {{"item_id", row.item}, {"before", row.before}, {"after", row.after}});
  }
  json record = {{"rank_correlation", report.rank_correlation},
                 {"coverage_before", report.coverage_before},
                 {"coverage_after", report.coverage_after},
                 {"coverage_delta",
                  report.coverage_after - report.coverage_before},
                 {"items_decreased", report.items_decreased},
                 {"curve_before", report.curve_before},
                 {"curve_after", report.curve_after},
                 {"items", std::move(items)}};
  out << record.dump(2) << '\n';
}

}  // namespace crsbias
