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

#include "crsbias/metrics.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "crsbias/errors.h"
#include "jsonl.h"

namespace crsbias {

using internal::json;

std::string_view ToString(SkipReason reason) {
  switch (reason) {
    case SkipReason::kEmptyRanking:
      return "empty ranking";
    case SkipReason::kFirstEpisode:
      return "first episode";
    case SkipReason::kNoPreviousEpisode:
      return "no previous episode recommendation";
    case SkipReason::kInsufficientOverlap:
      return "insufficient overlap";
    case SkipReason::kNoTargets:
      return "no targets";
  }
  return "unknown";
}

double InitialItemCoverage(const Corpus& corpus) {
  const ItemCatalog& catalog = corpus.catalog();
  if (catalog.empty()) return 0.0;
  std::unordered_set<std::string_view> seen;
  for (const Dialogue& dialogue : corpus.dialogues()) {
    if (dialogue.split != Split::kTrain) continue;
    for (const Turn& turn : dialogue.turns) {
      for (const auto* ids :
           {&turn.mentioned_item_ids, &turn.target_item_ids}) {
        for (const ItemId& id : *ids) {
          if (catalog.Contains(id)) seen.insert(id);
        }
      }
    }
  }
  return static_cast<double>(seen.size()) /
         static_cast<double>(catalog.size());
}

double RankingUtility(std::span<const ItemId> ranked, const ItemSet& popular,
                      double log_base) {
  const double log_of_base = std::log(log_base);
  double utility = 0.0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (!popular.contains(ranked[i])) continue;
    const double rank = static_cast<double>(i + 1);
    utility += 1.0 / (std::log(rank) / log_of_base + 1.0);
  }
  return utility;
}

MetricValue PopularityCoverage(std::span<const ItemId> ranked,
                               const ItemSet& popular) {
  if (ranked.empty()) return MetricValue::Skipped(SkipReason::kEmptyRanking);
  const auto hits = std::count_if(
      ranked.begin(), ranked.end(),
      [&](const ItemId& item) { return popular.contains(item); });
  return MetricValue::Of(static_cast<double>(hits) /
                         static_cast<double>(ranked.size()));
}

MetricValue PopularityBias(std::span<const ItemId> ranked,
                           const ItemSet& popular, double log_base) {
  MetricValue coverage = PopularityCoverage(ranked, popular);
  if (!coverage.has_value()) return coverage;
  return MetricValue::Of(RankingUtility(ranked, popular, log_base) *
                         coverage.value());
}

std::optional<double> PearsonCorrelation(std::span<const double> x,
                                         std::span<const double> y) {
  if (x.size() != y.size()) {
    throw InvariantError("PearsonCorrelation: length mismatch");
  }
  const std::size_t n = x.size();
  if (n < 2) return std::nullopt;
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_x += x[i];
    mean_y += y[i];
  }
  mean_x /= static_cast<double>(n);
  mean_y /= static_cast<double>(n);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mean_x;
    const double dy = y[i] - mean_y;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  // Rounding can push |rho| a hair past 1.
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace {

std::vector<double> PopularityVector(std::span<const ItemId> ranked,
                                     std::size_t length,
                                     const PopularityTable& table) {
  std::vector<double> out;
  out.reserve(length);
  for (std::size_t i = 0; i < length; ++i) {
    out.push_back(table.Popularity(ranked[i]));
  }
  return out;
}

}  // namespace

CepResult CrossEpisodePopularity(
    const RunEntry& current, std::span<const RunEntry> previous_episode_entries,
    const PopularityTable& table, double log_base) {
  CepResult result;
  if (current.episode_index < 1) {
    result.value = MetricValue::Skipped(SkipReason::kFirstEpisode);
    return result;
  }
  MetricValue bias =
      PopularityBias(current.ranked_item_ids, table.popular_set(), log_base);
  if (!bias.has_value()) {
    result.value = bias;
    return result;
  }
  const RunEntry* comparator = nullptr;
  for (const RunEntry& entry : previous_episode_entries) {
    if (entry.ranked_item_ids.empty()) continue;
    if (comparator == nullptr || entry.turn_index > comparator->turn_index) {
      comparator = &entry;
    }
  }
  if (comparator == nullptr) {
    result.value = MetricValue::Skipped(SkipReason::kNoPreviousEpisode);
    return result;
  }
  const std::size_t length = std::min(current.ranked_item_ids.size(),
                                      comparator->ranked_item_ids.size());
  if (length < 2) {
    result.value = MetricValue::Skipped(SkipReason::kInsufficientOverlap);
    return result;
  }
  const std::vector<double> now =
      PopularityVector(current.ranked_item_ids, length, table);
  const std::vector<double> before =
      PopularityVector(comparator->ranked_item_ids, length, table);
  std::optional<double> rho = PearsonCorrelation(now, before);
  result.zero_variance = !rho.has_value();
  result.value = MetricValue::Of(bias.value() * std::abs(rho.value_or(0.0)));
  return result;
}

MetricValue UserIntentPopularity(const RunEntry& entry,
                                 const PopularityTable& table,
                                 double log_base) {
  if (entry.target_item_ids.empty()) {
    return MetricValue::Skipped(SkipReason::kNoTargets);
  }
  MetricValue bias =
      PopularityBias(entry.ranked_item_ids, table.popular_set(), log_base);
  if (!bias.has_value()) return bias;
  double total = 0.0;
  for (const ItemId& target : entry.target_item_ids) {
    total += std::abs(table.Popularity(target) - bias.value());
  }
  return MetricValue::Of(total /
                         static_cast<double>(entry.target_item_ids.size()));
}

std::optional<std::vector<RankScores>> RankMetrics(
    const RunEntry& entry, std::span<const int> cutoffs) {
  std::unordered_set<ItemId> targets(entry.target_item_ids.begin(),
                                     entry.target_item_ids.end());
  if (targets.empty()) return std::nullopt;
  // The ideal list puts every target on top, independent of the cutoff, so
  // NDCG@k never decreases as k grows.
  double ideal = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    ideal += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  std::vector<RankScores> out;
  out.reserve(cutoffs.size());
  for (const int cutoff : cutoffs) {
    RankScores scores;
    scores.cutoff = cutoff;
    const std::size_t depth =
        std::min(entry.ranked_item_ids.size(), static_cast<std::size_t>(cutoff));
    double dcg = 0.0;
    for (std::size_t i = 0; i < depth; ++i) {
      if (!targets.contains(entry.ranked_item_ids[i])) continue;
      const double rank = static_cast<double>(i + 1);
      if (scores.hit == 0.0) {
        scores.hit = 1.0;
        scores.mrr = 1.0 / rank;
      }
      dcg += 1.0 / std::log2(rank + 1.0);
    }
    scores.ndcg = dcg / ideal;
    out.push_back(scores);
  }
  return out;
}

namespace {

RunEntry ParseRunEntry(const json& record) {
  RunEntry entry;
  entry.dialogue_id = internal::RequireString(record, "dialogue_id");
  const long long turn = internal::RequireInt(record, "turn_index");
  const long long episode = internal::RequireInt(record, "episode_index");
  if (turn < 0 || episode < 0) {
    throw InputError("turn_index and episode_index must be non-negative");
  }
  entry.turn_index = static_cast<std::size_t>(turn);
  entry.episode_index = static_cast<int>(episode);
  entry.ranked_item_ids = internal::RequireStringArray(record, "ranked");
  entry.target_item_ids = internal::OptionalStringArray(record, "targets");
  std::unordered_set<ItemId> seen;
  for (const ItemId& item : entry.ranked_item_ids) {
    if (!seen.insert(item).second) {
      throw InputError("ranked list repeats item '" + item + "'");
    }
  }
  return entry;
}

}  // namespace

RankedRun LoadRun(const std::filesystem::path& path, std::string model_name,
                  std::vector<int> cutoffs) {
  for (const int cutoff : cutoffs) {
    if (cutoff < 1) throw InputError("cutoffs must be >= 1");
  }
  RankedRun run;
  run.model_name = std::move(model_name);
  run.cutoffs = std::move(cutoffs);
  internal::ForEachRecord(path, [&](const json& record, std::size_t) {
    run.entries.push_back(ParseRunEntry(record));
  });
  return run;
}

void WriteRun(const RankedRun& run, std::ostream& out) {
  for (const RunEntry& entry : run.entries) {
    json record = {{"dialogue_id", entry.dialogue_id},
                   {"turn_index", entry.turn_index},
                   {"episode_index", entry.episode_index},
                   {"ranked", entry.ranked_item_ids},
                   {"targets", entry.target_item_ids}};
    out << internal::DumpLine(record) << '\n';
  }
}

const MetricSummary* BiasReport::Find(std::string_view name) const {
  for (const MetricSummary& metric : metrics) {
    if (metric.name == name) return &metric;
  }
  return nullptr;
}

namespace {

// Neumaier compensated summation.
class CompensatedSum {
 public:
  void Add(double value) {
    const double t = sum_ + value;
    if (std::abs(sum_) >= std::abs(value)) {
      compensation_ += (sum_ - t) + value;
    } else {
      compensation_ += (value - t) + sum_;
    }
    sum_ = t;
  }
  double Total() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

struct EntryScores {
  MetricValue utility = MetricValue::Skipped(SkipReason::kEmptyRanking);
  MetricValue coverage = MetricValue::Skipped(SkipReason::kEmptyRanking);
  MetricValue pop_bias = MetricValue::Skipped(SkipReason::kEmptyRanking);
  CepResult cep;
  MetricValue uiop = MetricValue::Skipped(SkipReason::kNoTargets);
  std::optional<std::vector<RankScores>> rank;
};

MetricSummary Summarize(std::string name,
                        const std::vector<MetricValue>& values) {
  MetricSummary summary;
  summary.name = std::move(name);
  CompensatedSum sum;
  for (const MetricValue& value : values) {
    if (value.has_value()) {
      sum.Add(value.value());
      ++summary.n;
    } else {
      ++summary.n_skipped;
      ++summary.skip_reasons[std::string(ToString(value.skip_reason()))];
    }
  }
  if (summary.n == 0) return summary;
  const double mean = sum.Total() / static_cast<double>(summary.n);
  CompensatedSum squares;
  for (const MetricValue& value : values) {
    if (!value.has_value()) continue;
    const double d = value.value() - mean;
    squares.Add(d * d);
  }
  summary.mean = mean;
  summary.stddev = std::sqrt(squares.Total() / static_cast<double>(summary.n));
  return summary;
}

void ValidateJoin(const RankedRun& run, const Corpus& corpus) {
  std::vector<std::string> problems;
  for (const RunEntry& entry : run.entries) {
    const Dialogue* dialogue = corpus.Find(entry.dialogue_id);
    std::string problem;
    if (dialogue == nullptr) {
      problem = entry.dialogue_id + " (unknown dialogue)";
    } else if (entry.turn_index >= dialogue->turns.size()) {
      problem = entry.dialogue_id + "#" + std::to_string(entry.turn_index) +
                " (turn out of range)";
    } else if (dialogue->segmented() &&
               dialogue->episode_index_per_turn[entry.turn_index] !=
                   entry.episode_index) {
      problem = entry.dialogue_id + "#" + std::to_string(entry.turn_index) +
                " (episode " + std::to_string(entry.episode_index) +
                " != corpus episode " +
                std::to_string(
                    dialogue->episode_index_per_turn[entry.turn_index]) +
                ")";
    }
    if (!problem.empty()) problems.push_back(std::move(problem));
  }
  if (problems.empty()) return;
  std::ostringstream message;
  message << "run '" << run.model_name << "' has " << problems.size()
          << " entries that do not join against the corpus:";
  constexpr std::size_t kMaxListed = 20;
  for (std::size_t i = 0; i < problems.size() && i < kMaxListed; ++i) {
    message << ' ' << problems[i];
  }
  if (problems.size() > kMaxListed) message << " ...";
  throw InputError(message.str());
}

using EpisodeKey = std::pair<std::string, int>;

struct EpisodeKeyHash {
  std::size_t operator()(const EpisodeKey& key) const {
    return std::hash<std::string>()(key.first) * 31u +
           std::hash<int>()(key.second);
  }
};

}  // namespace

BiasReport EvaluateRun(const RankedRun& run, const Corpus& corpus,
                       const PopularityTable& table, const EvalConfig& config) {
  if (!(config.log_base > 1.0)) throw InputError("log_base must be > 1");
  for (const int cutoff : run.cutoffs) {
    if (cutoff < 1) throw InputError("cutoffs must be >= 1");
  }
  ValidateJoin(run, corpus);

  std::unordered_map<EpisodeKey, std::vector<RunEntry>, EpisodeKeyHash>
      episodes;
  for (const RunEntry& entry : run.entries) {
    episodes[{entry.dialogue_id, entry.episode_index}].push_back(entry);
  }

  const std::size_t count = run.entries.size();
  std::vector<EntryScores> scores(count);
  auto score_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const RunEntry& entry = run.entries[i];
      EntryScores& out = scores[i];
      const ItemSet& popular = table.popular_set();
      out.coverage = PopularityCoverage(entry.ranked_item_ids, popular);
      if (out.coverage.has_value()) {
        out.utility = MetricValue::Of(
            RankingUtility(entry.ranked_item_ids, popular, config.log_base));
      }
      out.pop_bias =
          PopularityBias(entry.ranked_item_ids, popular, config.log_base);
      std::span<const RunEntry> previous;
      if (entry.episode_index >= 1) {
        auto it = episodes.find({entry.dialogue_id, entry.episode_index - 1});
        if (it != episodes.end()) previous = it->second;
      }
      out.cep = CrossEpisodePopularity(entry, previous, table, config.log_base);
      out.uiop = UserIntentPopularity(entry, table, config.log_base);
      out.rank = RankMetrics(entry, run.cutoffs);
    }
  };

  const std::size_t threads = static_cast<std::size_t>(
      std::clamp<int>(config.threads, 1, 64));
  if (threads == 1 || count < 2 * threads) {
    score_range(0, count);
  } else {
    std::vector<std::thread> workers;
    const std::size_t chunk = (count + threads - 1) / threads;
    for (std::size_t begin = 0; begin < count; begin += chunk) {
      workers.emplace_back(score_range, begin, std::min(count, begin + chunk));
    }
    for (std::thread& worker : workers) worker.join();
  }

  BiasReport report;
  report.model_name = run.model_name;
  report.entry_count = count;

  auto collect = [&](auto&& get) {
    std::vector<MetricValue> values;
    values.reserve(count);
    for (const EntryScores& s : scores) values.push_back(get(s));
    return values;
  };
  report.metrics.push_back(Summarize(
      "pop_bias", collect([](const EntryScores& s) { return s.pop_bias; })));
  report.metrics.push_back(Summarize(
      "ranking_utility",
      collect([](const EntryScores& s) { return s.utility; })));
  report.metrics.push_back(Summarize(
      "pop_coverage",
      collect([](const EntryScores& s) { return s.coverage; })));
  report.metrics.push_back(Summarize(
      "cep", collect([](const EntryScores& s) { return s.cep.value; })));
  report.metrics.push_back(
      Summarize("uiop", collect([](const EntryScores& s) { return s.uiop; })));
  for (std::size_t c = 0; c < run.cutoffs.size(); ++c) {
    const std::string suffix = "@" + std::to_string(run.cutoffs[c]);
    auto rank_value = [c](const EntryScores& s, auto field) {
      if (!s.rank) return MetricValue::Skipped(SkipReason::kNoTargets);
      return MetricValue::Of((*s.rank)[c].*field);
    };
    report.metrics.push_back(Summarize(
        "hit" + suffix, collect([&](const EntryScores& s) {
          return rank_value(s, &RankScores::hit);
        })));
    report.metrics.push_back(Summarize(
        "ndcg" + suffix, collect([&](const EntryScores& s) {
          return rank_value(s, &RankScores::ndcg);
        })));
    report.metrics.push_back(Summarize(
        "mrr" + suffix, collect([&](const EntryScores& s) {
          return rank_value(s, &RankScores::mrr);
        })));
  }
  for (const EntryScores& s : scores) {
    if (s.cep.zero_variance) ++report.cep_zero_variance;
  }
  return report;
}

void WriteReportRecords(const BiasReport& report, std::ostream& out) {
  for (const MetricSummary& metric : report.metrics) {
    json record = {{"model", report.model_name},
                   {"metric", metric.name},
                   {"mean", nullptr},
                   {"std", nullptr},
                   {"n", metric.n},
                   {"n_skipped", metric.n_skipped},
                   {"skip_reasons", metric.skip_reasons}};
    if (metric.mean) record["mean"] = *metric.mean;
    if (metric.stddev) record["std"] = *metric.stddev;
    if (metric.name == "cep") {
      record["zero_variance_rho"] = report.cep_zero_variance;
    }
    out << internal::DumpLine(record) << '\n';
  }
}

BiasReport ReadReportRecords(const std::filesystem::path& path) {
  BiasReport report;
  internal::ForEachRecord(path, [&](const json& record, std::size_t) {
    report.model_name = internal::RequireString(record, "model");
    MetricSummary metric;
    metric.name = internal::RequireString(record, "metric");
    if (const json& mean = internal::RequireField(record, "mean");
        !mean.is_null()) {
      metric.mean = mean.get<double>();
    }
    if (const json& stddev = internal::RequireField(record, "std");
        !stddev.is_null()) {
      metric.stddev = stddev.get<double>();
    }
    metric.n = internal::RequireField(record, "n").get<std::size_t>();
    metric.n_skipped =
        internal::RequireField(record, "n_skipped").get<std::size_t>();
    metric.skip_reasons = internal::RequireField(record, "skip_reasons")
                              .get<std::map<std::string, std::size_t>>();
    if (auto it = record.find("zero_variance_rho"); it != record.end()) {
      report.cep_zero_variance = it->get<std::size_t>();
    }
    report.entry_count = std::max(report.entry_count, metric.n + metric.n_skipped);
    report.metrics.push_back(std::move(metric));
  });
  return report;
}

void WriteReportTable(std::span<const BiasReport> reports, std::ostream& out) {
  if (reports.empty()) return;
  std::vector<std::string> names;
  for (const BiasReport& report : reports) {
    for (const MetricSummary& metric : report.metrics) {
      if (std::find(names.begin(), names.end(), metric.name) == names.end()) {
        names.push_back(metric.name);
      }
    }
  }
  std::size_t model_width = 5;
  for (const BiasReport& report : reports) {
    model_width = std::max(model_width, report.model_name.size());
  }
  constexpr int kColumn = 17;
  out << std::left << std::setw(static_cast<int>(model_width)) << "model";
  for (const std::string& name : names) {
    out << "  " << std::right << std::setw(kColumn) << name;
  }
  out << '\n';
  for (const BiasReport& report : reports) {
    out << std::left << std::setw(static_cast<int>(model_width))
        << report.model_name;
    for (const std::string& name : names) {
      const MetricSummary* metric = report.Find(name);
      std::ostringstream cell;
      if (metric == nullptr || !metric->mean) {
        cell << "-";
      } else {
        cell << std::fixed << std::setprecision(4) << *metric->mean << " ("
             << std::setprecision(4) << metric->stddev.value_or(0.0) << ")";
      }
      out << "  " << std::right << std::setw(kColumn) << cell.str();
    }
    out << '\n';
  }
  out << "\nskipped entries (metric: n_skipped [reasons])\n";
  for (const BiasReport& report : reports) {
    out << report.model_name << ":";
    bool any = false;
    for (const MetricSummary& metric : report.metrics) {
      if (metric.n_skipped == 0) continue;
      any = true;
      out << "\n  " << metric.name << ": " << metric.n_skipped << " [";
      bool first = true;
      for (const auto& [reason, n] : metric.skip_reasons) {
        out << (first ? "" : ", ") << reason << "=" << n;
        first = false;
      }
      out << "]";
    }
    if (report.cep_zero_variance > 0) {
      out << "\n  cep rho defined as 0 (constant popularity vector): "
          << report.cep_zero_variance;
      any = true;
    }
    out << (any ? "\n" : " none\n");
  }
}

}  // namespace crsbias
