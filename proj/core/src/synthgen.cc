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

#include "crsbias/synthgen.h"

#include <algorithm>
#include <array>
#include <atomic>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>
#include <utility>

#include "crsbias/digest.h"
#include "crsbias/errors.h"
#include "crsbias/sampling.h"
#include "jsonl.h"

namespace crsbias {

using internal::json;

std::string_view ToString(Language language) {
  return language == Language::kEn ? "en" : "zh";
}

std::optional<Language> ParseLanguage(std::string_view text) {
  if (text == "en") return Language::kEn;
  if (text == "zh") return Language::kZh;
  return std::nullopt;
}

namespace {

std::size_t CountOccurrences(std::string_view text, std::string_view needle) {
  std::size_t count = 0;
  for (std::size_t pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

std::string_view Trim(std::string_view text) {
  const auto begin = text.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = text.find_last_not_of(" \t\r");
  return text.substr(begin, end - begin + 1);
}

std::vector<std::string_view> SplitLines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

}  // namespace

void PromptTemplate::Validate() const {
  const std::size_t count = CountOccurrences(body, kItemNamePlaceholder);
  if (count != 1) {
    throw InputError("template '" + template_id + "' must contain exactly one " +
                     std::string(kItemNamePlaceholder) + " placeholder, found " +
                     std::to_string(count));
  }
}

PromptTemplate ParseTemplate(std::string_view text) {
  std::vector<std::string_view> lines = SplitLines(text);
  if (lines.empty() || Trim(lines.front()).empty()) {
    throw InputError("template is missing its header line");
  }
  PromptTemplate prompt;
  std::istringstream header{std::string(Trim(lines.front()))};
  std::string token;
  bool have_language = false;
  while (header >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) {
      throw InputError("malformed template header token '" + token + "'");
    }
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    if (key == "template_id") {
      prompt.template_id = value;
    } else if (key == "language") {
      auto language = ParseLanguage(value);
      if (!language) throw InputError("unknown template language '" + value + "'");
      prompt.language = *language;
      have_language = true;
    } else {
      throw InputError("unknown template header key '" + key + "'");
    }
  }
  if (prompt.template_id.empty() || !have_language) {
    throw InputError("template header needs template_id and language");
  }

  auto separator = std::find_if(lines.begin() + 1, lines.end(),
                                [](std::string_view l) { return Trim(l) == "---"; });
  auto join = [](auto begin, auto end) {
    std::string out;
    for (auto it = begin; it != end; ++it) {
      if (!out.empty()) out.push_back('\n');
      out.append(*it);
    }
    const auto last = out.find_last_not_of("\n\r ");
    out.erase(last == std::string::npos ? 0 : last + 1);
    const auto first = out.find_first_not_of("\n\r");
    return first == std::string::npos ? std::string() : out.substr(first);
  };
  if (separator == lines.end()) {
    prompt.body = join(lines.begin() + 1, lines.end());
  } else {
    prompt.system_preamble = join(lines.begin() + 1, separator);
    prompt.body = join(separator + 1, lines.end());
  }
  prompt.Validate();
  return prompt;
}

PromptTemplate LoadTemplate(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open template " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return ParseTemplate(text.str());
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::string RenderPrompt(const PromptTemplate& prompt, const ItemRef& item) {
  if (item.name.empty()) {
    throw InputError("item '" + item.id + "' has an empty name");
  }
  prompt.Validate();
  std::string out = prompt.body;
  out.replace(out.find(kItemNamePlaceholder), kItemNamePlaceholder.size(),
              item.name);
  return out;
}

namespace {

std::uint64_t StableHash(std::string_view text) {
  const std::string hex = Sha256Hex(text).substr(0, 16);
  return std::stoull(hex, nullptr, 16);
}

struct PhraseBank {
  std::vector<std::string_view> seeker_open;
  std::vector<std::string_view> recommender_probe;
  std::vector<std::string_view> seeker_detail;
  std::vector<std::string_view> recommender_pitch;  // holds {item_name}
  std::vector<std::string_view> seeker_accept;
  std::vector<std::string_view> recommender_close;
};

const PhraseBank& Bank(Language language) {
  static const PhraseBank kEnglish = {
      {"Hi there! I'm looking for a movie to watch tonight.",
       "Hello, can you suggest a good film?",
       "Hey! I need something new to watch this weekend.",
       "Hi, I'm in the mood for a movie. Any ideas?"},
      {"Sure! What kind of movies do you usually enjoy?",
       "Happy to help. Which genres do you like?",
       "Of course. Tell me about a movie you loved recently.",
       "Great, are you after something light or something intense?"},
      {"I like stories with a good twist and strong characters.",
       "Something thrilling, but not too scary.",
       "I enjoyed a few dramas lately, but I'm open to anything.",
       "I prefer films that make me think afterwards.",
       "Anything with great acting works for me."},
      {"Then you should watch {item_name}. I think you'll really like it.",
       "I'd recommend {item_name}. It matches what you described.",
       "Have you seen {item_name}? It's a great pick for you.",
       "How about {item_name}? Many people with your taste love it."},
      {"That sounds great, I'll give it a try. Thanks!",
       "I haven't seen it yet. I'll watch it tonight!",
       "Good suggestion, adding it to my list.",
       "Perfect, that's exactly what I was looking for."},
      {"Enjoy the movie!",
       "You're welcome, have a nice evening!",
       "Glad I could help. Enjoy!",
       "Have fun watching it!"},
  };
  static const PhraseBank kChinese = {
      {"你好，我想找一部电影看。", "嗨，能给我推荐一部好看的电影吗？",
       "你好，周末想看点新电影。"},
      {"当然可以，你平时喜欢什么类型的电影？", "好的，你最近喜欢看哪部电影？",
       "没问题，你想看轻松的还是紧张的？"},
      {"我喜欢剧情有反转的电影。", "我想看点刺激但不太吓人的。",
       "最近看了几部剧情片，其他类型也可以。"},
      {"那我推荐你看{item_name}，你应该会喜欢。",
       "你看过{item_name}吗？很适合你。",
       "可以试试{item_name}，很多和你口味相近的人都喜欢。"},
      {"听起来不错，我去看看，谢谢！", "还没看过，今晚就看！",
       "好建议，已经加入片单了。"},
      {"祝你观影愉快！", "不客气，玩得开心！", "很高兴能帮到你！"},
  };
  return language == Language::kEn ? kEnglish : kChinese;
}

std::string_view Pick(const std::vector<std::string_view>& options, Rng& rng) {
  return options[UniformIndex(rng, options.size())];
}

std::string Fill(std::string_view pattern, std::string_view name) {
  std::string out(pattern);
  const auto pos = out.find(kItemNamePlaceholder);
  if (pos != std::string::npos) {
    out.replace(pos, kItemNamePlaceholder.size(), name);
  }
  return out;
}

}  // namespace

std::string OfflineTemplateBackend::Complete(const GenerationRequest& request) {
  Rng rng = DeriveStream(request.seed, {StableHash(request.template_id),
                                        StableHash(request.item.id)});
  const PhraseBank& bank = Bank(request.language);
  std::vector<std::pair<Speaker, std::string>> turns;
  turns.emplace_back(Speaker::kSeeker, std::string(Pick(bank.seeker_open, rng)));
  turns.emplace_back(Speaker::kRecommender,
                     std::string(Pick(bank.recommender_probe, rng)));
  const std::size_t details = 1 + UniformIndex(rng, 2);
  for (std::size_t i = 0; i < details; ++i) {
    turns.emplace_back(Speaker::kSeeker,
                       std::string(Pick(bank.seeker_detail, rng)));
    if (i + 1 < details) {
      turns.emplace_back(Speaker::kRecommender,
                         std::string(Pick(bank.recommender_probe, rng)));
    }
  }
  turns.emplace_back(Speaker::kRecommender,
                     Fill(Pick(bank.recommender_pitch, rng), request.item.name));
  turns.emplace_back(Speaker::kSeeker, std::string(Pick(bank.seeker_accept, rng)));
  if (UniformIndex(rng, 2) == 1) {
    turns.emplace_back(Speaker::kRecommender,
                       std::string(Pick(bank.recommender_close, rng)));
  }
  std::string text;
  for (const auto& [speaker, utterance] : turns) {
    text += speaker == Speaker::kSeeker ? "User: " : "System: ";
    text += utterance;
    text += '\n';
  }
  return text;
}

std::string GenerateDialogue(GenerationBackend& backend,
                             const PromptTemplate& prompt, const ItemRef& item,
                             std::uint64_t seed) {
  GenerationRequest request;
  if (!prompt.system_preamble.empty()) {
    request.messages.push_back({"system", prompt.system_preamble});
  }
  request.messages.push_back({"user", RenderPrompt(prompt, item)});
  request.item = item;
  request.language = prompt.language;
  request.template_id = prompt.template_id;
  request.seed = seed;
  std::string text = backend.Complete(request);
  if (Trim(text).empty()) {
    throw BackendError(BackendFailure::kEmptyCompletion,
                       "backend returned no text for item '" + item.id + "'");
  }
  return text;
}

namespace {

struct SpeakerPrefix {
  std::string_view prefix;
  Speaker speaker;
  bool ascii;
};

constexpr std::array<SpeakerPrefix, 10> kPrefixes = {{
    {"user:", Speaker::kSeeker, true},
    {"seeker:", Speaker::kSeeker, true},
    {"system:", Speaker::kRecommender, true},
    {"recommender:", Speaker::kRecommender, true},
    {"用户：", Speaker::kSeeker, false},
    {"用户:", Speaker::kSeeker, false},
    {"系统：", Speaker::kRecommender, false},
    {"系统:", Speaker::kRecommender, false},
    {"推荐者：", Speaker::kRecommender, false},
    {"推荐者:", Speaker::kRecommender, false},
}};

bool StartsWithIgnoreCase(std::string_view text, std::string_view prefix) {
  if (text.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    const char a = text[i];
    const char lower = (a >= 'A' && a <= 'Z') ? static_cast<char>(a - 'A' + 'a') : a;
    if (lower != prefix[i]) return false;
  }
  return true;
}

std::optional<std::pair<Speaker, std::string_view>> MatchPrefix(
    std::string_view line) {
  for (const SpeakerPrefix& candidate : kPrefixes) {
    const bool match = candidate.ascii
                           ? StartsWithIgnoreCase(line, candidate.prefix)
                           : line.starts_with(candidate.prefix);
    if (match) {
      return std::make_pair(candidate.speaker,
                            Trim(line.substr(candidate.prefix.size())));
    }
  }
  return std::nullopt;
}

// Replaces every exact occurrence of `name`; returns the number replaced.
std::size_t TagMentions(std::string& text, std::string_view name,
                        const std::string& token) {
  std::size_t replaced = 0;
  for (std::size_t pos = text.find(name); pos != std::string::npos;
       pos = text.find(name, pos + token.size())) {
    text.replace(pos, name.size(), token);
    ++replaced;
  }
  return replaced;
}

}  // namespace

ParseOutcome ParseGenerated(std::string_view raw, const ItemRef& item,
                            std::string dialogue_id) {
  ParseOutcome outcome;
  if (Trim(raw).empty()) {
    outcome.rejection = "empty text";
    return outcome;
  }
  if (item.name.empty()) {
    outcome.rejection = "item has an empty name";
    return outcome;
  }
  Dialogue dialogue;
  dialogue.dialogue_id = std::move(dialogue_id);
  dialogue.split = Split::kTrain;
  dialogue.provenance = Provenance::kSynthetic;
  for (std::string_view line : SplitLines(raw)) {
    line = Trim(line);
    if (line.empty()) continue;
    if (auto prefixed = MatchPrefix(line)) {
      Turn turn;
      turn.speaker = prefixed->first;
      turn.text = std::string(prefixed->second);
      dialogue.turns.push_back(std::move(turn));
    } else if (!dialogue.turns.empty()) {
      Turn& turn = dialogue.turns.back();
      if (!turn.text.empty()) turn.text.push_back(' ');
      turn.text.append(line);
    }
  }
  if (dialogue.turns.empty()) {
    outcome.rejection = "no recognizable speaker prefixes";
    return outcome;
  }

  const std::string token = "@" + item.id;
  std::optional<std::size_t> target_turn;
  bool mentioned = false;
  for (std::size_t t = 0; t < dialogue.turns.size(); ++t) {
    Turn& turn = dialogue.turns[t];
    if (TagMentions(turn.text, item.name, token) == 0) continue;
    mentioned = true;
    turn.mentioned_item_ids.push_back(item.id);
    if (turn.speaker == Speaker::kRecommender) target_turn = t;
  }
  if (!mentioned) {
    outcome.rejection = "item name not found";
    return outcome;
  }
  if (!target_turn) {
    outcome.rejection = "item never named by the recommender";
    return outcome;
  }
  dialogue.turns[*target_turn].target_item_ids.push_back(item.id);
  outcome.dialogue =
      SegmentEpisodes(dialogue, EpisodePolicy::kAcceptBoundary);
  return outcome;
}

std::string SyntheticDialogueId(std::string_view item_id) {
  return "syn_" + std::string(item_id);
}

PoolBuildResult BuildPool(GenerationBackend& backend,
                          const PromptTemplate& prompt,
                          std::span<const ItemRef> items, std::uint64_t seed,
                          const BuildPoolOptions& options) {
  prompt.Validate();
  const int max_attempts = std::max(1, options.max_attempts);
  std::vector<GenerationLogEntry> log(items.size());
  std::vector<std::optional<Dialogue>> accepted(items.size());
  std::vector<std::exception_ptr> failures(items.size());

  auto generate = [&](std::size_t i) {
    const ItemRef& item = items[i];
    GenerationLogEntry& entry = log[i];
    entry.item_id = item.id;
    try {
      for (int attempt = 0; attempt < max_attempts; ++attempt) {
        ++entry.attempts;
        const std::uint64_t attempt_seed =
            DeriveStream(seed, {i, static_cast<std::uint64_t>(attempt)})();
        const std::string raw =
            GenerateDialogue(backend, prompt, item, attempt_seed);
        ParseOutcome parsed =
            ParseGenerated(raw, item, SyntheticDialogueId(item.id));
        if (parsed.accepted()) {
          accepted[i] = std::move(parsed.dialogue);
          entry.accepted = true;
          return;
        }
        entry.rejections.push_back(parsed.rejection);
      }
    } catch (...) {
      failures[i] = std::current_exception();
    }
  };

  const std::size_t workers_wanted = static_cast<std::size_t>(
      std::clamp(options.concurrency, 1, 64));
  if (workers_wanted == 1 || items.size() < 2) {
    for (std::size_t i = 0; i < items.size(); ++i) generate(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < std::min(workers_wanted, items.size()); ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < items.size(); i = next++) generate(i);
      });
    }
    for (std::thread& worker : workers) worker.join();
  }
  for (const std::exception_ptr& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }

  PoolBuildResult result;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (accepted[i]) result.pool.Add(std::move(*accepted[i]), items[i].id);
  }
  result.log = std::move(log);
  if (result.pool.empty()) {
    throw InputError("generation produced no accepted dialogues");
  }
  return result;
}

void WritePoolFiles(const PoolBuildResult& result,
                    const std::filesystem::path& pool_path,
                    const std::filesystem::path& log_path) {
  std::ofstream pool_out(pool_path, std::ios::binary);
  if (!pool_out) throw InputError("cannot write " + pool_path.string());
  for (const Dialogue& dialogue : result.pool.dialogues()) {
    WriteDialogue(dialogue, pool_out);
  }
  std::ofstream log_out(log_path, std::ios::binary);
  if (!log_out) throw InputError("cannot write " + log_path.string());
  for (const GenerationLogEntry& entry : result.log) {
    json record = {{"item_id", entry.item_id},
                   {"attempts", entry.attempts},
                   {"accepted", entry.accepted},
                   {"rejections", entry.rejections}};
    log_out << internal::DumpLine(record) << '\n';
  }
}

}  // namespace crsbias
