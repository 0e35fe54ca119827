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

#ifndef CRSBIAS_TOOLS_RUN_CONFIG_H_
#define CRSBIAS_TOOLS_RUN_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crsbias/augment.h"
#include "crsbias/corpus.h"
#include "crsbias/metrics.h"
#include "crsbias/popularity.h"
#include "crsbias/synthgen.h"
#include "json.hpp"

namespace crsbias::cli {

struct RunFile {
  std::string model;
  std::filesystem::path path;
};

enum class BackendKind { kOfflineTemplate, kHttpChat };

struct BackendSettings {
  BackendKind kind = BackendKind::kOfflineTemplate;
  HttpBackendConfig http;
  std::filesystem::path template_path;
  // "all", "unmentioned" (not referenced by training dialogues) or explicit
  // ids in `item_ids`.
  std::string item_selection = "all";
  std::vector<ItemId> item_ids;
  BuildPoolOptions pool;
};

enum class MaterializeMode { kFlatCorpus, kBatchStream };

// Everything a command needs. Relative paths in the config file resolve
// against the file's directory.
struct RunConfig {
  std::filesystem::path config_path;
  std::optional<std::filesystem::path> corpus;
  std::optional<std::filesystem::path> catalog;
  std::optional<std::filesystem::path> pool;
  std::optional<std::filesystem::path> output_dir;
  std::vector<RunFile> runs;

  ThresholdPolicy eta = ThresholdPolicy::CountThreshold(5);
  double log_base = kNaturalLogBase;
  std::vector<int> cutoffs = {10, 50};
  std::size_t k = 1;
  std::size_t batch_size = 32;
  std::optional<std::uint64_t> seed;
  Strategy strategy = Strategy::kPopNudge;
  SamplingWeights sampling_weights = SamplingWeights::kPoolInclusive;
  MaterializeMode materialize = MaterializeMode::kFlatCorpus;
  EpisodePolicy episode_policy = EpisodePolicy::kAcceptBoundary;
  int threads = 1;
  BackendSettings backend;

  // The parsed document with overrides applied; echoed into outputs.
  nlohmann::json document;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> k;
  std::optional<std::string> strategy;
};

// Parses a JSON config file; throws InputError naming the offending field.
RunConfig LoadRunConfig(const std::filesystem::path& path,
                        const Overrides& overrides = {});
RunConfig ParseRunConfig(const nlohmann::json& document,
                         const std::filesystem::path& base_dir,
                         const Overrides& overrides = {});

// The config document with values of secret-looking keys replaced.
nlohmann::json RedactedConfig(const RunConfig& config);

// Throws InputError naming `field` when it is unset or does not exist on
// disk.
const std::filesystem::path& RequireInputPath(
    const std::optional<std::filesystem::path>& path, std::string_view field);
std::uint64_t RequireSeed(const RunConfig& config);
// Creates the directory when needed.
const std::filesystem::path& RequireOutputDir(const RunConfig& config);

}  // namespace crsbias::cli

#endif  // CRSBIAS_TOOLS_RUN_CONFIG_H_
