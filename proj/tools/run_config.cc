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

#include "run_config.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <set>
#include <utility>

#include "crsbias/errors.h"

namespace crsbias::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::array<std::string_view, 18> kTopLevelKeys = {
    "corpus",     "catalog",          "pool",        "output_dir",
    "runs",       "eta",              "log_base",    "cutoffs",
    "k",          "batch_size",       "seed",        "strategy",
    "materialize", "sampling_weights", "threads",    "backend",
    "episode_policy", "comment"};

constexpr std::array<std::string_view, 12> kBackendKeys = {
    "kind",     "template",  "items",        "max_attempts",
    "concurrency", "base_url", "model",      "timeout_ms",
    "retries",  "backoff_ms", "token_env",   "comment"};

[[noreturn]] void Fail(std::string_view field, const std::string& problem) {
  throw InputError("config field '" + std::string(field) + "': " + problem);
}

void RejectUnknownKeys(const json& object, std::span<const std::string_view> known,
                       std::string_view scope) {
  for (const auto& [key, value] : object.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      Fail(std::string(scope) + key, "unknown key");
    }
  }
}

fs::path ResolvePath(const json& value, std::string_view field,
                     const fs::path& base_dir) {
  if (!value.is_string() || value.get<std::string>().empty()) {
    Fail(field, "must be a non-empty path string");
  }
  fs::path path = value.get<std::string>();
  return path.is_absolute() ? path : base_dir / path;
}

std::optional<fs::path> OptionalPath(const json& doc, std::string_view field,
                                     const fs::path& base_dir) {
  auto it = doc.find(field);
  if (it == doc.end() || it->is_null()) return std::nullopt;
  return ResolvePath(*it, field, base_dir);
}

template <typename T>
T PositiveInt(const json& value, std::string_view field) {
  if (!value.is_number_integer() || value.get<long long>() < 1) {
    Fail(field, "must be a positive integer");
  }
  return static_cast<T>(value.get<long long>());
}

ThresholdPolicy ParseEta(const json& value) {
  if (!value.is_object()) Fail("eta", "must be an object");
  const std::string kind = value.value("kind", "");
  try {
    if (kind == "count_threshold") {
      if (!value.contains("min_count")) Fail("eta.min_count", "missing");
      return ThresholdPolicy::CountThreshold(
          PositiveInt<std::int64_t>(value.at("min_count"), "eta.min_count"));
    }
    if (kind == "quantile") {
      if (!value.contains("top_fraction") ||
          !value.at("top_fraction").is_number()) {
        Fail("eta.top_fraction", "must be a number");
      }
      return ThresholdPolicy::Quantile(value.at("top_fraction").get<double>());
    }
  } catch (const InputError& e) {
    if (std::string_view(e.what()).starts_with("config field")) throw;
    Fail("eta", e.what());
  }
  Fail("eta.kind", "must be count_threshold or quantile");
}

BackendSettings ParseBackend(const json& value, const fs::path& base_dir) {
  if (!value.is_object()) Fail("backend", "must be an object");
  RejectUnknownKeys(value, kBackendKeys, "backend.");
  BackendSettings settings;
  const std::string kind = value.value("kind", "offline_template");
  if (kind == "offline_template") {
    settings.kind = BackendKind::kOfflineTemplate;
  } else if (kind == "http_chat") {
    settings.kind = BackendKind::kHttpChat;
  } else {
    Fail("backend.kind", "must be offline_template or http_chat");
  }
  if (auto it = value.find("template"); it != value.end()) {
    settings.template_path = ResolvePath(*it, "backend.template", base_dir);
  }
  if (auto it = value.find("items"); it != value.end()) {
    if (it->is_string()) {
      settings.item_selection = it->get<std::string>();
      if (settings.item_selection != "all" &&
          settings.item_selection != "unmentioned") {
        Fail("backend.items", "must be \"all\", \"unmentioned\" or an array");
      }
    } else if (it->is_array()) {
      settings.item_selection = "explicit";
      for (const json& id : *it) {
        if (!id.is_string()) Fail("backend.items", "must hold item ids");
        settings.item_ids.push_back(id.get<std::string>());
      }
    } else {
      Fail("backend.items", "must be a string or an array");
    }
  }
  if (auto it = value.find("max_attempts"); it != value.end()) {
    settings.pool.max_attempts = PositiveInt<int>(*it, "backend.max_attempts");
  }
  if (auto it = value.find("concurrency"); it != value.end()) {
    settings.pool.concurrency = PositiveInt<int>(*it, "backend.concurrency");
  }
  HttpBackendConfig& http = settings.http;
  if (auto it = value.find("base_url"); it != value.end()) {
    if (!it->is_string()) Fail("backend.base_url", "must be a string");
    http.base_url = it->get<std::string>();
  }
  if (auto it = value.find("model"); it != value.end()) {
    if (!it->is_string()) Fail("backend.model", "must be a string");
    http.model = it->get<std::string>();
  }
  if (auto it = value.find("timeout_ms"); it != value.end()) {
    http.timeout = std::chrono::milliseconds(
        PositiveInt<long long>(*it, "backend.timeout_ms"));
  }
  if (auto it = value.find("retries"); it != value.end()) {
    http.max_attempts = PositiveInt<int>(*it, "backend.retries");
  }
  if (auto it = value.find("backoff_ms"); it != value.end()) {
    http.initial_backoff = std::chrono::milliseconds(
        PositiveInt<long long>(*it, "backend.backoff_ms"));
  }
  if (auto it = value.find("token_env"); it != value.end()) {
    if (!it->is_string()) Fail("backend.token_env", "must be a string");
    http.token_env = it->get<std::string>();
  }
  if (settings.kind == BackendKind::kHttpChat &&
      (http.base_url.empty() || http.model.empty())) {
    Fail("backend", "http_chat needs base_url and model");
  }
  return settings;
}

}  // namespace

RunConfig ParseRunConfig(const json& document, const fs::path& base_dir,
                         const Overrides& overrides) {
  if (!document.is_object()) throw InputError("config must be a JSON object");
  RejectUnknownKeys(document, kTopLevelKeys, "");
  RunConfig config;
  config.document = document;
  config.corpus = OptionalPath(document, "corpus", base_dir);
  config.catalog = OptionalPath(document, "catalog", base_dir);
  config.pool = OptionalPath(document, "pool", base_dir);
  config.output_dir = OptionalPath(document, "output_dir", base_dir);

  if (auto it = document.find("runs"); it != document.end()) {
    if (!it->is_array()) Fail("runs", "must be an array");
    for (const json& run : *it) {
      RunFile file;
      if (run.is_string()) {
        file.path = ResolvePath(run, "runs", base_dir);
        file.model = file.path.stem().string();
      } else if (run.is_object()) {
        if (!run.contains("path")) Fail("runs.path", "missing");
        file.path = ResolvePath(run.at("path"), "runs.path", base_dir);
        file.model = run.value("model", file.path.stem().string());
      } else {
        Fail("runs", "entries must be paths or {model, path} objects");
      }
      config.runs.push_back(std::move(file));
    }
  }
  if (auto it = document.find("eta"); it != document.end()) {
    config.eta = ParseEta(*it);
  }
  if (auto it = document.find("log_base"); it != document.end()) {
    if (it->is_string() && it->get<std::string>() == "e") {
      config.log_base = kNaturalLogBase;
    } else if (it->is_number() && it->get<double>() > 1.0) {
      config.log_base = it->get<double>();
    } else {
      Fail("log_base", "must be \"e\" or a number > 1");
    }
  }
  if (auto it = document.find("cutoffs"); it != document.end()) {
    if (!it->is_array() || it->empty()) Fail("cutoffs", "must be a non-empty array");
    config.cutoffs.clear();
    for (const json& cutoff : *it) {
      config.cutoffs.push_back(PositiveInt<int>(cutoff, "cutoffs"));
    }
  }
  if (auto it = document.find("k"); it != document.end()) {
    config.k = PositiveInt<std::size_t>(*it, "k");
  }
  if (auto it = document.find("batch_size"); it != document.end()) {
    config.batch_size = PositiveInt<std::size_t>(*it, "batch_size");
  }
  if (auto it = document.find("seed"); it != document.end()) {
    if (!it->is_number_unsigned()) Fail("seed", "must be a non-negative integer");
    config.seed = it->get<std::uint64_t>();
  }
  if (auto it = document.find("strategy"); it != document.end()) {
    auto strategy = it->is_string() ? ParseStrategy(it->get<std::string>())
                                    : std::nullopt;
    if (!strategy) Fail("strategy", "must be once_aug or pop_nudge");
    config.strategy = *strategy;
  }
  if (auto it = document.find("sampling_weights"); it != document.end()) {
    auto weights = it->is_string()
                       ? ParseSamplingWeights(it->get<std::string>())
                       : std::nullopt;
    if (!weights) {
      Fail("sampling_weights", "must be pool_inclusive or train_popularity");
    }
    config.sampling_weights = *weights;
  }
  if (auto it = document.find("materialize"); it != document.end()) {
    const std::string mode = it->is_string() ? it->get<std::string>() : "";
    if (mode == "flat_corpus") {
      config.materialize = MaterializeMode::kFlatCorpus;
    } else if (mode == "batch_stream") {
      config.materialize = MaterializeMode::kBatchStream;
    } else {
      Fail("materialize", "must be flat_corpus or batch_stream");
    }
  }
  if (auto it = document.find("episode_policy"); it != document.end()) {
    auto policy = it->is_string() ? ParseEpisodePolicy(it->get<std::string>())
                                  : std::nullopt;
    if (!policy) Fail("episode_policy", "must be explicit or accept_boundary");
    config.episode_policy = *policy;
  }
  if (auto it = document.find("threads"); it != document.end()) {
    config.threads = PositiveInt<int>(*it, "threads");
  }
  if (auto it = document.find("backend"); it != document.end()) {
    config.backend = ParseBackend(*it, base_dir);
  }

  if (overrides.seed) {
    config.seed = *overrides.seed;
    config.document["seed"] = *overrides.seed;
  }
  if (overrides.k) {
    if (*overrides.k < 1) Fail("k", "must be a positive integer");
    config.k = *overrides.k;
    config.document["k"] = *overrides.k;
  }
  if (overrides.strategy) {
    auto strategy = ParseStrategy(*overrides.strategy);
    if (!strategy) Fail("strategy", "must be once_aug or pop_nudge");
    config.strategy = *strategy;
    config.document["strategy"] = *overrides.strategy;
  }
  return config;
}

RunConfig LoadRunConfig(const fs::path& path, const Overrides& overrides) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  json document;
  try {
    document = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  RunConfig config =
      ParseRunConfig(document, path.parent_path().empty() ? fs::path(".")
                                                          : path.parent_path(),
                     overrides);
  config.config_path = path;
  return config;
}

namespace {

bool IsSecretKey(std::string key) {
  std::transform(key.begin(), key.end(), key.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (key == "token_env") return false;
  for (std::string_view marker : {"token", "secret", "password", "api_key",
                                  "apikey", "authorization"}) {
    if (key.find(marker) != std::string::npos) return true;
  }
  return false;
}

void Redact(json& value) {
  if (value.is_object()) {
    for (auto& [key, child] : value.items()) {
      if (IsSecretKey(key)) {
        child = "<redacted>";
      } else {
        Redact(child);
      }
    }
  } else if (value.is_array()) {
    for (json& child : value) Redact(child);
  }
}

}  // namespace

json RedactedConfig(const RunConfig& config) {
  json copy = config.document;
  Redact(copy);
  return copy;
}

const fs::path& RequireInputPath(const std::optional<fs::path>& path,
                                 std::string_view field) {
  if (!path) Fail(field, "is required for this command");
  if (!fs::exists(*path)) Fail(field, "file not found: " + path->string());
  return *path;
}

std::uint64_t RequireSeed(const RunConfig& config) {
  if (!config.seed) Fail("seed", "is required for this command");
  return *config.seed;
}

const fs::path& RequireOutputDir(const RunConfig& config) {
  if (!config.output_dir) Fail("output_dir", "is required for this command");
  std::error_code error;
  fs::create_directories(*config.output_dir, error);
  if (error) {
    Fail("output_dir", "cannot create " + config.output_dir->string() + ": " +
                           error.message());
  }
  return *config.output_dir;
}

}  // namespace crsbias::cli
