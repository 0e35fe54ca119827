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

#ifndef CRSBIAS_SYNTHGEN_H_
#define CRSBIAS_SYNTHGEN_H_

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crsbias/augment.h"
#include "crsbias/corpus.h"

namespace crsbias {

enum class Language { kEn, kZh };

std::string_view ToString(Language language);
std::optional<Language> ParseLanguage(std::string_view text);

inline constexpr std::string_view kItemNamePlaceholder = "{item_name}";

// A prompt with exactly one `{item_name}` placeholder in its body.
//
// On disk a template is UTF-8 text whose first line is a header such as
//
//   template_id=redial_en language=en
//
// followed by the system preamble, a line holding only `---`, and the body.
// Without a `---` line the whole remainder is the body.
struct PromptTemplate {
  std::string template_id;
  Language language = Language::kEn;
  std::string body;
  std::string system_preamble;

  // Throws InputError unless the body holds exactly one placeholder.
  void Validate() const;
};

PromptTemplate ParseTemplate(std::string_view text);
PromptTemplate LoadTemplate(const std::filesystem::path& path);

struct ItemRef {
  ItemId id;
  std::string name;
};

// Substitutes the item's name for the placeholder. Throws InputError for an
// empty name or a template that fails Validate.
std::string RenderPrompt(const PromptTemplate& prompt, const ItemRef& item);

struct ChatMessage {
  std::string role;
  std::string content;
};

struct GenerationRequest {
  std::vector<ChatMessage> messages;
  ItemRef item;
  Language language = Language::kEn;
  std::string template_id;
  std::uint64_t seed = 0;
};

// Produces raw multi-turn dialogue text. Implementations must be safe to
// call concurrently.
class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  virtual std::string Complete(const GenerationRequest& request) = 0;
};

// Deterministic generator composing a dialogue from fixed phrase banks. The
// output depends only on (template id, item, seed) and always names the
// item in a recommender turn.
class OfflineTemplateBackend : public GenerationBackend {
 public:
  std::string Complete(const GenerationRequest& request) override;
};

struct HttpBackendConfig {
  // Scheme, host, optional port and optional path prefix, e.g.
  // "https://api.example.com/v1". Requests go to <prefix>/chat/completions.
  std::string base_url;
  std::string model;
  std::string token_env = "CRSBIAS_LLM_TOKEN";
  std::chrono::milliseconds timeout{30000};
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
};

// Chat-completion client. Retries connection failures, timeouts, 429 and
// 5xx responses with exponential backoff, then throws BackendError.
class HttpChatBackend : public GenerationBackend {
 public:
  // Reads the bearer token from the configured environment variable;
  // throws BackendError(kAuth) when it is unset or empty.
  explicit HttpChatBackend(HttpBackendConfig config);

  std::string Complete(const GenerationRequest& request) override;

 private:
  HttpBackendConfig config_;
  std::string token_;
  std::string host_;
  std::string path_;
};

// Renders the prompt, asks the backend for a completion and returns the raw
// text. Throws BackendError(kEmptyCompletion) on blank output.
std::string GenerateDialogue(GenerationBackend& backend,
                             const PromptTemplate& prompt, const ItemRef& item,
                             std::uint64_t seed);

struct ParseOutcome {
  std::optional<Dialogue> dialogue;
  std::string rejection;

  bool accepted() const { return dialogue.has_value(); }
};

// Converts generated text into a single-item training dialogue.
//
// Lines beginning with "User:"/"Seeker:" (or 用户：) open seeker turns and
// "System:"/"Recommender:" (or 系统：) open recommender turns; unprefixed
// lines continue the current turn. Exact occurrences of the item name become
// `@<item_id>` mentions, and the last recommender turn naming the item
// carries it as target.
ParseOutcome ParseGenerated(std::string_view raw, const ItemRef& item,
                            std::string dialogue_id);

struct BuildPoolOptions {
  // Generation attempts per item before the item is skipped.
  int max_attempts = 3;
  // Concurrent backend requests.
  int concurrency = 4;
};

struct GenerationLogEntry {
  ItemId item_id;
  int attempts = 0;
  bool accepted = false;
  std::vector<std::string> rejections;
};

struct PoolBuildResult {
  SyntheticPool pool;
  // One entry per requested item, in request order.
  std::vector<GenerationLogEntry> log;
};

// Synthetic dialogue id for an item.
std::string SyntheticDialogueId(std::string_view item_id);

// One accepted dialogue per item, in item order. Throws InputError when no
// item yields an accepted dialogue; backend errors propagate.
PoolBuildResult BuildPool(GenerationBackend& backend,
                          const PromptTemplate& prompt,
                          std::span<const ItemRef> items, std::uint64_t seed,
                          const BuildPoolOptions& options = {});

// Writes the pool in corpus schema and the log as one record per item.
void WritePoolFiles(const PoolBuildResult& result,
                    const std::filesystem::path& pool_path,
                    const std::filesystem::path& log_path);

}  // namespace crsbias

#endif  // CRSBIAS_SYNTHGEN_H_
