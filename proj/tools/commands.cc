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

#include "commands.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <memory>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_set>
#include <vector>

#include "CLI11.hpp"
#include "crsbias/augment.h"
#include "crsbias/corpus.h"
#include "crsbias/errors.h"
#include "crsbias/metrics.h"
#include "crsbias/popularity.h"
#include "crsbias/synthgen.h"

namespace crsbias::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::ofstream OpenOutput(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

void EchoConfig(const RunConfig& config, const fs::path& output_dir) {
  OpenOutput(output_dir / "config.json") << RedactedConfig(config).dump(2)
                                         << '\n';
}

std::string Percent(double ratio) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2) << 100.0 * ratio << '%';
  return out.str();
}

void PrintUnknownMentions(const Corpus& corpus, std::ostream& out) {
  const LoadSummary& summary = corpus.summary();
  if (summary.unknown_mention_count() == 0) return;
  out << "warning: " << summary.unknown_mention_count()
      << " item references not in the catalog (kept, flagged)\n";
}

std::string FileSafe(std::string_view name) {
  std::string out;
  for (char c : name) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
                      c == '_' || c == '.';
    out.push_back(keep ? c : '_');
  }
  return out.empty() ? "run" : out;
}

}  // namespace

void CmdStats(const RunConfig& config, std::ostream& out) {
  const fs::path& corpus_path = RequireInputPath(config.corpus, "corpus");
  const fs::path& catalog_path = RequireInputPath(config.catalog, "catalog");
  const fs::path& output_dir = RequireOutputDir(config);
  EchoConfig(config, output_dir);

  const Corpus corpus = LoadCorpus(corpus_path, catalog_path);
  const PopularityTable table = BuildPopularity(corpus, config.eta);
  const double iic = InitialItemCoverage(corpus);
  const double popular = PopularItemRatio(table, corpus.catalog());

  json stats = {{"train", corpus.CountSplit(Split::kTrain)},
                {"valid", corpus.CountSplit(Split::kValid)},
                {"test", corpus.CountSplit(Split::kTest)},
                {"items", corpus.catalog().size()},
                {"iic", iic},
                {"popular_item_ratio", popular},
                {"eta", config.eta.Describe()},
                {"unknown_mentions",
                 corpus.summary().unknown_mention_count()}};
  OpenOutput(output_dir / "stats.json") << stats.dump(2) << '\n';
  {
    std::ofstream popularity = OpenOutput(output_dir / "popularity.jsonl");
    WritePopularityTable(table, corpus.catalog(), popularity);
  }

  PrintUnknownMentions(corpus, out);
  out << std::left << std::setw(10) << "train" << std::setw(10) << "valid"
      << std::setw(10) << "test" << std::setw(10) << "items" << std::setw(10)
      << "IIC" << "popular items (" << config.eta.Describe() << ")\n";
  out << std::setw(10) << corpus.CountSplit(Split::kTrain) << std::setw(10)
      << corpus.CountSplit(Split::kValid) << std::setw(10)
      << corpus.CountSplit(Split::kTest) << std::setw(10)
      << corpus.catalog().size() << std::setw(10) << Percent(iic)
      << Percent(popular) << '\n';
}

namespace {

std::unique_ptr<GenerationBackend> MakeBackend(const BackendSettings& settings) {
  if (settings.kind == BackendKind::kHttpChat) {
    return std::make_unique<HttpChatBackend>(settings.http);
  }
  return std::make_unique<OfflineTemplateBackend>();
}

}  // namespace

void CmdGenerate(const RunConfig& config, std::ostream& out) {
  const fs::path& catalog_path = RequireInputPath(config.catalog, "catalog");
  if (config.backend.template_path.empty()) {
    throw InputError("config field 'backend.template': is required for this command");
  }
  RequireInputPath(config.backend.template_path, "backend.template");
  if (!config.pool) {
    throw InputError("config field 'pool': is required for this command");
  }
  const bool needs_corpus = config.backend.item_selection == "unmentioned";
  if (needs_corpus) RequireInputPath(config.corpus, "corpus");
  const std::uint64_t seed = RequireSeed(config);
  const fs::path& output_dir = RequireOutputDir(config);

  const PromptTemplate prompt = LoadTemplate(config.backend.template_path);
  const ItemCatalog catalog = LoadCatalog(catalog_path);
  std::vector<ItemRef> items;
  if (config.backend.item_selection == "explicit") {
    for (const ItemId& id : config.backend.item_ids) {
      const std::string* name = catalog.Name(id);
      if (name == nullptr) {
        throw InputError("config field 'backend.items': unknown item '" + id +
                         "'");
      }
      items.push_back({id, *name});
    }
  } else {
    std::unordered_set<ItemId> skip;
    if (needs_corpus) {
      const Corpus corpus = LoadCorpus(*config.corpus, catalog);
      for (const auto& [item, count] : CountTrainingFrequencies(corpus)) {
        skip.insert(item);
      }
    }
    for (const auto& [id, name] : catalog.items()) {
      if (!skip.contains(id)) items.push_back({id, name});
    }
  }
  if (items.empty()) throw InputError("no items selected for generation");

  std::unique_ptr<GenerationBackend> backend = MakeBackend(config.backend);
  EchoConfig(config, output_dir);
  const PoolBuildResult result =
      BuildPool(*backend, prompt, items, seed, config.backend.pool);
  if (config.pool->has_parent_path()) {
    fs::create_directories(config.pool->parent_path());
  }
  WritePoolFiles(result, *config.pool, output_dir / "generation_log.jsonl");

  std::size_t skipped = 0;
  for (const GenerationLogEntry& entry : result.log) {
    if (!entry.accepted) {
      ++skipped;
      out << "skipped item " << entry.item_id << " after " << entry.attempts
          << " attempts";
      if (!entry.rejections.empty()) out << " (" << entry.rejections.back() << ")";
      out << '\n';
    }
  }
  out << "generated " << result.pool.size() << " dialogues for "
      << items.size() << " items (" << skipped << " skipped) -> "
      << config.pool->string() << '\n';
  out << "pool digest " << result.pool.Digest() << '\n';
}

void CmdAugment(const RunConfig& config, std::ostream& out) {
  const fs::path& corpus_path = RequireInputPath(config.corpus, "corpus");
  const fs::path& catalog_path = RequireInputPath(config.catalog, "catalog");
  const fs::path& pool_path = RequireInputPath(config.pool, "pool");
  const std::uint64_t seed = RequireSeed(config);
  const fs::path& output_dir = RequireOutputDir(config);
  EchoConfig(config, output_dir);

  const Corpus corpus = LoadCorpus(corpus_path, catalog_path);
  const SyntheticPool pool =
      SyntheticPool::FromCorpus(LoadCorpus(pool_path, corpus.catalog()));
  const PopularityTable table = BuildPopularity(corpus, config.eta);
  PrintUnknownMentions(corpus, out);

  AugmentationPlan plan;
  if (config.strategy == Strategy::kOnceAug) {
    plan = OnceAugPlan(corpus, pool, seed);
  } else {
    PopNudgeOptions options;
    options.k = config.k;
    options.batch_size = config.batch_size;
    options.seed = seed;
    options.threads = config.threads;
    options.weights = config.sampling_weights;
    plan = PopNudge(corpus, pool, table, options);
    const PlanAudit audit = AuditPlan(plan, corpus, pool, table);
    if (!audit.ok()) {
      throw InvariantError("plan failed its popularity-filter audit: " +
                           audit.violations.front());
    }
  }
  {
    std::ofstream plan_out = OpenOutput(output_dir / "plan.jsonl");
    WritePlan(plan, plan_out);
  }

  const Corpus augmented = config.strategy == Strategy::kOnceAug
                               ? OnceAug(corpus, pool)
                               : MaterializeFlat(plan, corpus, pool);
  if (config.materialize == MaterializeMode::kFlatCorpus) {
    WriteCorpusFile(augmented, output_dir / "augmented_corpus.jsonl");
  } else {
    std::ofstream stream = OpenOutput(output_dir / "batch_stream.jsonl");
    const std::vector<MaterializedBatch> batches =
        MaterializeBatches(plan, corpus, pool);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      for (const auto* group : {&batches[b].originals, &batches[b].appended}) {
        for (const Dialogue& dialogue : *group) {
          std::ostringstream line;
          WriteDialogue(dialogue, line);
          json record = json::parse(line.str());
          record["batch"] = b;
          stream << record.dump() << '\n';
        }
      }
    }
  }

  const LongTailReport longtail = CompareLongTail(corpus, augmented);
  {
    std::ofstream longtail_out = OpenOutput(output_dir / "longtail.json");
    WriteLongTailReport(longtail, longtail_out);
  }

  out << "strategy            " << ToString(plan.strategy) << '\n';
  if (plan.strategy == Strategy::kPopNudge) {
    out << "k / batch_size      " << plan.k << " / " << plan.batch_size << '\n';
  }
  out << "seed                " << plan.seed << '\n';
  out << "appended dialogues  " << plan.AppendedIds().size() << " of "
      << pool.size() << '\n';
  out << "IIC before          " << Percent(longtail.coverage_before) << '\n';
  out << "IIC after           " << Percent(longtail.coverage_after) << '\n';
  out << "rank correlation    " << std::fixed << std::setprecision(4)
      << longtail.rank_correlation << '\n';
  out << "items decreased     " << longtail.items_decreased << '\n';
  if (plan.strategy == Strategy::kPopNudge) {
    out << "anchors w/o cands   " << plan.empty_candidate_anchors << '\n';
    out << "anchors < k cands   " << plan.short_candidate_anchors << '\n';
  }
  out << "plan digest         " << PlanDigest(plan) << '\n';
}

void CmdEvaluate(const RunConfig& config, std::ostream& out) {
  const fs::path& corpus_path = RequireInputPath(config.corpus, "corpus");
  const fs::path& catalog_path = RequireInputPath(config.catalog, "catalog");
  if (config.runs.empty()) {
    throw InputError("config field 'runs': is required for this command");
  }
  std::set<std::string> models;
  for (const RunFile& run : config.runs) {
    RequireInputPath(run.path, "runs");
    if (!models.insert(FileSafe(run.model)).second) {
      throw InputError("config field 'runs': duplicate model '" + run.model +
                       "'");
    }
  }
  const fs::path& output_dir = RequireOutputDir(config);
  EchoConfig(config, output_dir);

  const Corpus corpus = SegmentCorpus(LoadCorpus(corpus_path, catalog_path),
                                      config.episode_policy);
  const PopularityTable table = BuildPopularity(corpus, config.eta);
  PrintUnknownMentions(corpus, out);
  EvalConfig eval;
  eval.log_base = config.log_base;
  eval.threads = config.threads;

  std::vector<BiasReport> reports;
  for (const RunFile& file : config.runs) {
    const RankedRun run = LoadRun(file.path, file.model, config.cutoffs);
    BiasReport report = EvaluateRun(run, corpus, table, eval);
    const std::string stem = "report_" + FileSafe(file.model);
    {
      std::ofstream records = OpenOutput(output_dir / (stem + ".jsonl"));
      WriteReportRecords(report, records);
    }
    {
      std::ofstream text = OpenOutput(output_dir / (stem + ".txt"));
      WriteReportTable(std::span<const BiasReport>(&report, 1), text);
    }
    reports.push_back(std::move(report));
  }
  std::ostringstream table_text;
  WriteReportTable(reports, table_text);
  OpenOutput(output_dir / "comparison.txt") << table_text.str();
  out << table_text.str();
}

void CmdReport(const RunConfig& config, std::ostream& out) {
  if (!config.output_dir) {
    throw InputError("config field 'output_dir': is required for this command");
  }
  const fs::path& output_dir = *config.output_dir;
  if (!fs::is_directory(output_dir)) {
    throw InputError("config field 'output_dir': not a directory: " +
                     output_dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(output_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.starts_with("report_") && name.ends_with(".jsonl")) {
      files.push_back(entry.path());
    }
  }
  if (files.empty()) {
    throw InputError("no report_*.jsonl files in " + output_dir.string() +
                     "; run `crs-bias evaluate` first");
  }
  std::sort(files.begin(), files.end());
  std::vector<BiasReport> reports;
  for (const fs::path& file : files) reports.push_back(ReadReportRecords(file));
  std::ostringstream table_text;
  WriteReportTable(reports, table_text);
  OpenOutput(output_dir / "comparison.txt") << table_text.str();
  out << table_text.str();
}

int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Selection and popularity bias toolkit for conversational "
               "recommendation corpora",
               "crs-bias"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> k;
  std::optional<std::string> strategy;

  using Command = void (*)(const RunConfig&, std::ostream&);
  const std::vector<std::tuple<std::string, std::string, Command>> commands = {
      {"stats", "Dataset statistics (counts, IIC, popular-item ratio)",
       &CmdStats},
      {"generate", "Generate a synthetic dialogue pool", &CmdGenerate},
      {"augment", "Augment the training split (once_aug or pop_nudge)",
       &CmdAugment},
      {"evaluate", "Score run files for bias and rank metrics", &CmdEvaluate},
      {"report", "Print the comparison table of evaluated runs", &CmdReport},
  };
  std::vector<std::pair<CLI::App*, Command>> handlers;
  for (const auto& [name, description, handler] : commands) {
    CLI::App* sub = app.add_subcommand(name, description);
    sub->add_option("--config", config_path, "Run config (JSON)")->required();
    sub->add_option("--seed", seed, "Override the config seed");
    sub->add_option("--k", k, "Override k (dialogues sampled per anchor)");
    sub->add_option("--strategy", strategy, "once_aug or pop_nudge")
        ->check(CLI::IsMember({"once_aug", "pop_nudge"}));
    handlers.emplace_back(sub, handler);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    const RunConfig config =
        LoadRunConfig(config_path, Overrides{seed, k, strategy});
    for (const auto& [sub, handler] : handlers) {
      if (sub->parsed()) handler(config, out);
    }
    return 0;
  } catch (const Error& e) {
    err << "crs-bias: " << e.what() << '\n';
    return ExitCodeFor(e.error_class());
  } catch (const std::exception& e) {
    err << "crs-bias: internal error: " << e.what() << '\n';
    return ExitCodeFor(ErrorClass::kInvariant);
  }
}

}  // namespace crsbias::cli
