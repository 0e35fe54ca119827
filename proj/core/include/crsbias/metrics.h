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

#ifndef CRSBIAS_METRICS_H_
#define CRSBIAS_METRICS_H_

#include <cstddef>
#include <filesystem>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crsbias/corpus.h"
#include "crsbias/popularity.h"

namespace crsbias {

inline constexpr double kNaturalLogBase = std::numbers::e;

// Fraction of catalog items referenced by at least one training-split
// dialogue. References outside the catalog do not count.
double InitialItemCoverage(const Corpus& corpus);

enum class SkipReason {
  kEmptyRanking,
  kFirstEpisode,
  kNoPreviousEpisode,
  kInsufficientOverlap,
  kNoTargets,
};

std::string_view ToString(SkipReason reason);

// A metric score for one entry, or the reason the entry was excluded.
class MetricValue {
 public:
  static MetricValue Of(double value) { return MetricValue(value, {}); }
  static MetricValue Skipped(SkipReason reason) {
    return MetricValue(0.0, reason);
  }

  bool has_value() const { return !skip_.has_value(); }
  double value() const { return value_; }
  SkipReason skip_reason() const { return *skip_; }

 private:
  MetricValue(double value, std::optional<SkipReason> skip)
      : value_(value), skip_(skip) {}

  double value_;
  std::optional<SkipReason> skip_;
};

// Position-discounted count of popular items:
//   sum over ranked items of [item is popular] / (log_b(rank) + 1)
// with 1-based ranks. Empty lists score 0.
double RankingUtility(std::span<const ItemId> ranked, const ItemSet& popular,
                      double log_base = kNaturalLogBase);

// Fraction of the ranked list that is popular. Skipped for empty lists.
MetricValue PopularityCoverage(std::span<const ItemId> ranked,
                               const ItemSet& popular);

// RankingUtility * PopularityCoverage.
MetricValue PopularityBias(std::span<const ItemId> ranked,
                           const ItemSet& popular,
                           double log_base = kNaturalLogBase);

// Pearson correlation; nullopt when either input has zero variance or the
// inputs are shorter than two elements. Inputs must have equal length.
std::optional<double> PearsonCorrelation(std::span<const double> x,
                                         std::span<const double> y);

struct RunEntry {
  std::string dialogue_id;
  std::size_t turn_index = 0;
  int episode_index = 0;
  std::vector<ItemId> ranked_item_ids;
  std::vector<ItemId> target_item_ids;
};

struct RankedRun {
  std::string model_name;
  std::vector<RunEntry> entries;
  std::vector<int> cutoffs = {10, 50};
};

// Reads a run file: one record per line with dialogue_id, turn_index,
// episode_index, ranked, targets. Duplicate items inside a ranked list are
// rejected with InputError.
RankedRun LoadRun(const std::filesystem::path& path, std::string model_name,
                  std::vector<int> cutoffs = {10, 50});
void WriteRun(const RankedRun& run, std::ostream& out);

struct CepResult {
  MetricValue value = MetricValue::Skipped(SkipReason::kFirstEpisode);
  // Set when the correlation was defined as 0 because a popularity vector
  // was constant.
  bool zero_variance = false;
};

// Cross-episode popularity of `current` against the previous episode of the
// same dialogue. `previous_episode_entries` are the run entries of episode
// current.episode_index - 1; the comparator is the last of them (by turn)
// with a non-empty ranking. Popularity vectors are aligned by rank and
// truncated to the shorter list.
CepResult CrossEpisodePopularity(
    const RunEntry& current, std::span<const RunEntry> previous_episode_entries,
    const PopularityTable& table, double log_base = kNaturalLogBase);

// Mean over targets of |pop(target) - PopularityBias(ranked)|.
MetricValue UserIntentPopularity(const RunEntry& entry,
                                 const PopularityTable& table,
                                 double log_base = kNaturalLogBase);

struct RankScores {
  int cutoff = 0;
  double hit = 0.0;
  double ndcg = 0.0;
  double mrr = 0.0;
};

// Hit@k, NDCG@k (binary relevance, log2 discount) and MRR@k per cutoff.
// The NDCG normalizer is the DCG of all distinct targets ranked first,
// whatever the cutoff. nullopt when the entry has no targets.
std::optional<std::vector<RankScores>> RankMetrics(
    const RunEntry& entry, std::span<const int> cutoffs);

struct EvalConfig {
  double log_base = kNaturalLogBase;
  // Worker threads for per-entry scoring; aggregation is always serial.
  int threads = 1;
};

struct MetricSummary {
  std::string name;
  // Absent when no entry was eligible.
  std::optional<double> mean;
  std::optional<double> stddev;
  std::size_t n = 0;
  std::size_t n_skipped = 0;
  std::map<std::string, std::size_t> skip_reasons;
};

struct BiasReport {
  std::string model_name;
  std::size_t entry_count = 0;
  // CEP entries whose correlation was defined as 0 (constant vector).
  std::size_t cep_zero_variance = 0;
  std::vector<MetricSummary> metrics;

  const MetricSummary* Find(std::string_view name) const;
};

// Scores every entry of `run` and aggregates mean and population standard
// deviation per metric. Throws InputError listing entries that do not join
// against `corpus`.
BiasReport EvaluateRun(const RankedRun& run, const Corpus& corpus,
                       const PopularityTable& table,
                       const EvalConfig& config = {});

// Machine-readable report: one record per metric.
void WriteReportRecords(const BiasReport& report, std::ostream& out);
BiasReport ReadReportRecords(const std::filesystem::path& path);
// Aligned-column comparison with one row per model.
void WriteReportTable(std::span<const BiasReport> reports, std::ostream& out);

}  // namespace crsbias

#endif  // CRSBIAS_METRICS_H_
