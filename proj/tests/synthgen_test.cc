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

#include <stdlib.h>

#include <atomic>
#include <chrono>
#include <functional>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "crsbias/errors.h"
#include "fixtures.h"
#include "gtest/gtest.h"
#include "httplib.h"
#include "json.hpp"

namespace crsbias {
namespace {

using ::crsbias::testing::FixtureTemplate;

PromptTemplate SimpleTemplate(std::string body) {
  PromptTemplate t;
  t.template_id = "simple";
  t.body = std::move(body);
  return t;
}

TEST(TemplateTest, RenderSubstitutesOnlyPlaceholder) {
  EXPECT_EQ(RenderPrompt(SimpleTemplate("Recommend {item_name}."),
                         {"1", "Inception"}),
            "Recommend Inception.");
  const std::string odd = "Amélie & {Co} $1 \\n 天使";
  EXPECT_EQ(RenderPrompt(SimpleTemplate("[{item_name}]"), {"2", odd}),
            "[" + odd + "]");
}

TEST(TemplateTest, PlaceholderCountAndNameErrors) {
  EXPECT_THROW(RenderPrompt(SimpleTemplate("{item_name} or {item_name}"),
                            {"1", "X"}),
               InputError);
  EXPECT_THROW(RenderPrompt(SimpleTemplate("no placeholder"), {"1", "X"}),
               InputError);
  EXPECT_THROW(RenderPrompt(SimpleTemplate("{item_name}"), {"1", ""}),
               InputError);
}

TEST(TemplateTest, ParseFileFormat) {
  PromptTemplate t = ParseTemplate(
      "template_id=demo language=zh\npreamble line\n---\nbody {item_name}\n");
  EXPECT_EQ(t.template_id, "demo");
  EXPECT_EQ(t.language, Language::kZh);
  EXPECT_EQ(t.system_preamble, "preamble line");
  EXPECT_EQ(t.body, "body {item_name}");

  PromptTemplate no_preamble =
      ParseTemplate("template_id=b language=en\nonly {item_name}\n");
  EXPECT_TRUE(no_preamble.system_preamble.empty());
  EXPECT_EQ(no_preamble.body, "only {item_name}");

  EXPECT_THROW(ParseTemplate("language=en\n{item_name}"), InputError);
  EXPECT_THROW(ParseTemplate("template_id=x language=fr\n{item_name}"),
               InputError);
  EXPECT_THROW(ParseTemplate("template_id=x language=en\nnothing"),
               InputError);
}

TEST(TemplateTest, BundledTemplatesLoad) {
  const std::filesystem::path dir = CRSBIAS_TEMPLATE_DIR;
  PromptTemplate en = LoadTemplate(dir / "redial_en.txt");
  EXPECT_EQ(en.language, Language::kEn);
  PromptTemplate zh = LoadTemplate(dir / "tgredial_zh.txt");
  EXPECT_EQ(zh.language, Language::kZh);
  EXPECT_NO_THROW(RenderPrompt(zh, {"1", "霸王别姬"}));
}

TEST(OfflineBackendTest, DeterministicAndNamesItem) {
  OfflineTemplateBackend backend;
  PromptTemplate prompt = FixtureTemplate();
  const ItemRef item = {"m007", "Movie 007"};
  std::string a = GenerateDialogue(backend, prompt, item, 42);
  std::string b = GenerateDialogue(backend, prompt, item, 42);
  EXPECT_EQ(a, b);
  bool differs = false;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::string text = GenerateDialogue(backend, prompt, item, seed);
    EXPECT_NE(text.find("Movie 007"), std::string::npos);
    differs = differs || text != a;
  }
  EXPECT_TRUE(differs);
}

TEST(OfflineBackendTest, ChineseOutputParses) {
  OfflineTemplateBackend backend;
  PromptTemplate prompt =
      LoadTemplate(std::filesystem::path(CRSBIAS_TEMPLATE_DIR) /
                   "tgredial_zh.txt");
  const ItemRef item = {"t1", "霸王别姬"};
  std::string raw = GenerateDialogue(backend, prompt, item, 3);
  ParseOutcome parsed = ParseGenerated(raw, item, "syn_t1");
  ASSERT_TRUE(parsed.accepted()) << parsed.rejection << "\n" << raw;
}

TEST(ParseTest, TwoLineExample) {
  ParseOutcome parsed = ParseGenerated(
      "User: I want a mind-bending film.\nSystem: Watch Inception tonight.",
      {"1", "Inception"}, "syn_1");
  ASSERT_TRUE(parsed.accepted()) << parsed.rejection;
  const Dialogue& d = *parsed.dialogue;
  ASSERT_EQ(d.turns.size(), 2u);
  EXPECT_EQ(d.turns[0].speaker, Speaker::kSeeker);
  EXPECT_TRUE(d.turns[0].mentioned_item_ids.empty());
  EXPECT_EQ(d.turns[1].speaker, Speaker::kRecommender);
  EXPECT_EQ(d.turns[1].text, "Watch @1 tonight.");
  EXPECT_EQ(d.turns[1].mentioned_item_ids, std::vector<ItemId>{"1"});
  EXPECT_EQ(d.turns[1].target_item_ids, std::vector<ItemId>{"1"});
  EXPECT_EQ(d.provenance, Provenance::kSynthetic);
  EXPECT_EQ(d.episode_index_per_turn, (std::vector<int>{0, 0}));
}

TEST(ParseTest, AlternatingSixLines) {
  const std::string raw =
      "User: hi\nSystem: hello\nSeeker: something fun\n"
      "Recommender: try Heat\nuser: sounds good\nSYSTEM: enjoy Heat\n";
  ParseOutcome parsed = ParseGenerated(raw, {"2", "Heat"}, "syn_2");
  ASSERT_TRUE(parsed.accepted());
  ASSERT_EQ(parsed.dialogue->turns.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(parsed.dialogue->turns[i].speaker,
              i % 2 == 0 ? Speaker::kSeeker : Speaker::kRecommender);
  }
  // Only the final recommender turn naming the item is the target.
  EXPECT_TRUE(parsed.dialogue->turns[3].target_item_ids.empty());
  EXPECT_EQ(parsed.dialogue->turns[5].target_item_ids,
            std::vector<ItemId>{"2"});
  EXPECT_EQ(parsed.dialogue->turns[3].mentioned_item_ids,
            std::vector<ItemId>{"2"});
}

TEST(ParseTest, ContinuationLinesAndChinesePrefixes) {
  ParseOutcome parsed = ParseGenerated(
      "用户：想看电影\n系统：推荐霸王别姬\n这部很经典。\n用户:好的",
      {"t9", "霸王别姬"}, "syn_t9");
  ASSERT_TRUE(parsed.accepted()) << parsed.rejection;
  ASSERT_EQ(parsed.dialogue->turns.size(), 3u);
  EXPECT_EQ(parsed.dialogue->turns[1].text, "推荐@t9 这部很经典。");
}

TEST(ParseTest, Rejections) {
  const ItemRef item = {"1", "Inception"};
  EXPECT_EQ(ParseGenerated("User: hi\nSystem: try Heat", item, "s").rejection,
            "item name not found");
  EXPECT_EQ(ParseGenerated("Just talk about Inception.", item, "s").rejection,
            "no recognizable speaker prefixes");
  EXPECT_EQ(ParseGenerated("User: I loved Inception\nSystem: ok", item, "s")
                .rejection,
            "item never named by the recommender");
  EXPECT_FALSE(ParseGenerated("   ", item, "s").accepted());
}

std::vector<ItemRef> SixItems() {
  std::vector<ItemRef> items;
  for (int i = 0; i < 6; ++i) {
    items.push_back({"m" + std::to_string(i), "Film " + std::to_string(i)});
  }
  return items;
}

TEST(BuildPoolTest, OfflineSixItems) {
  OfflineTemplateBackend backend;
  PoolBuildResult result =
      BuildPool(backend, FixtureTemplate(), SixItems(), 5);
  ASSERT_EQ(result.pool.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    const Dialogue& d = result.pool.dialogues()[i];
    EXPECT_EQ(d.dialogue_id, "syn_m" + std::to_string(i));
    EXPECT_EQ(RecommendedItem(d), "m" + std::to_string(i));
    EXPECT_TRUE(result.log[i].accepted);
    EXPECT_EQ(result.log[i].attempts, 1);
  }
}

TEST(BuildPoolTest, PureFunctionOfInputsAnyConcurrency) {
  OfflineTemplateBackend backend;
  PoolBuildResult serial = BuildPool(backend, FixtureTemplate(), SixItems(), 9,
                                     {.max_attempts = 3, .concurrency = 1});
  PoolBuildResult parallel = BuildPool(backend, FixtureTemplate(), SixItems(),
                                       9, {.max_attempts = 3, .concurrency = 4});
  EXPECT_EQ(serial.pool.Digest(), parallel.pool.Digest());
}

// Never names one chosen item; otherwise defers to the offline generator.
class RejectingBackend : public GenerationBackend {
 public:
  explicit RejectingBackend(std::string bad_item) : bad_(std::move(bad_item)) {}
  std::string Complete(const GenerationRequest& request) override {
    calls_++;
    if (request.item.id == bad_) return "User: hello\nSystem: no idea\n";
    return offline_.Complete(request);
  }
  int calls() const { return calls_; }

 private:
  std::string bad_;
  OfflineTemplateBackend offline_;
  std::atomic<int> calls_{0};
};

TEST(BuildPoolTest, RejectedItemIsSkippedAndLogged) {
  RejectingBackend backend("m2");
  PoolBuildResult result =
      BuildPool(backend, FixtureTemplate(), SixItems(), 1, {.max_attempts = 3});
  EXPECT_EQ(result.pool.size(), 5u);
  EXPECT_EQ(result.pool.Find("syn_m2"), nullptr);
  EXPECT_FALSE(result.log[2].accepted);
  EXPECT_EQ(result.log[2].attempts, 3);
  EXPECT_EQ(result.log[2].rejections.size(), 3u);
  EXPECT_EQ(backend.calls(), 5 + 3);
}

TEST(BuildPoolTest, NothingAcceptedIsAnError) {
  RejectingBackend backend("m0");
  std::vector<ItemRef> one = {SixItems()[0]};
  EXPECT_THROW(BuildPool(backend, FixtureTemplate(), one, 1), InputError);
}

TEST(BuildPoolTest, PoolRoundTripsThroughCorpusLoad) {
  OfflineTemplateBackend backend;
  PoolBuildResult result = BuildPool(backend, FixtureTemplate(), SixItems(), 2);
  testing::TempDir dir("pool_round_trip");
  WritePoolFiles(result, dir / "pool.jsonl", dir / "log.jsonl");
  ItemCatalog catalog;
  for (const ItemRef& item : SixItems()) catalog.Add(item.id, item.name);
  Corpus loaded = LoadCorpus(dir / "pool.jsonl", catalog);
  EXPECT_EQ(loaded.summary().unknown_mention_count(), 0u);
  SyntheticPool pool = SyntheticPool::FromCorpus(loaded);
  EXPECT_EQ(pool.Digest(), result.pool.Digest());
  EXPECT_EQ(loaded.dialogues(), result.pool.dialogues());
}

// Local chat-completion endpoint whose behaviour is scripted per call.
class FakeServer {
 public:
  using Handler = std::function<void(int call, const httplib::Request&,
                                     httplib::Response&)>;

  explicit FakeServer(Handler handler) : handler_(std::move(handler)) {
    server_.Post("/v1/chat/completions",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   int call = calls_++;
                   {
                     std::lock_guard<std::mutex> lock(mu_);
                     last_auth_ = req.get_header_value("Authorization");
                     last_body_ = req.body;
                   }
                   handler_(call, req, res);
                 });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }

  std::string base_url() const {
    return "http://127.0.0.1:" + std::to_string(port_) + "/v1";
  }
  int calls() const { return calls_; }
  std::string last_auth() {
    std::lock_guard<std::mutex> lock(mu_);
    return last_auth_;
  }
  std::string last_body() {
    std::lock_guard<std::mutex> lock(mu_);
    return last_body_;
  }

 private:
  Handler handler_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> calls_{0};
  std::mutex mu_;
  std::string last_auth_;
  std::string last_body_;
};

void Reply(httplib::Response& res, const std::string& content) {
  nlohmann::json body = {
      {"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}};
  res.set_content(body.dump(), "application/json");
}

class HttpBackendTest : public ::testing::Test {
 protected:
  void SetUp() override { setenv("CRSBIAS_TEST_TOKEN", "secret-token", 1); }
  void TearDown() override { unsetenv("CRSBIAS_TEST_TOKEN"); }

  HttpBackendConfig Config(const std::string& base_url) {
    HttpBackendConfig config;
    config.base_url = base_url;
    config.model = "chat-model";
    config.token_env = "CRSBIAS_TEST_TOKEN";
    config.timeout = std::chrono::milliseconds(2000);
    config.initial_backoff = std::chrono::milliseconds(10);
    return config;
  }

  std::string Generate(HttpChatBackend& backend) {
    PromptTemplate prompt = FixtureTemplate();
    return GenerateDialogue(backend, prompt, {"1", "Inception"}, 7);
  }

  BackendFailure FailureOf(HttpChatBackend& backend) {
    try {
      Generate(backend);
    } catch (const BackendError& e) {
      return e.failure();
    }
    ADD_FAILURE() << "expected BackendError";
    return BackendFailure::kHttpStatus;
  }
};

TEST_F(HttpBackendTest, SuccessSendsModelMessagesAndToken) {
  FakeServer server([](int, const httplib::Request&, httplib::Response& res) {
    Reply(res, "User: hi\nSystem: watch Inception");
  });
  HttpChatBackend backend(Config(server.base_url()));
  EXPECT_EQ(Generate(backend), "User: hi\nSystem: watch Inception");
  EXPECT_EQ(server.last_auth(), "Bearer secret-token");
  nlohmann::json body = nlohmann::json::parse(server.last_body());
  EXPECT_EQ(body["model"], "chat-model");
  ASSERT_EQ(body["messages"].size(), 2u);
  EXPECT_EQ(body["messages"][0]["role"], "system");
  EXPECT_NE(body["messages"][1]["content"].get<std::string>().find("Inception"),
            std::string::npos);
}

TEST_F(HttpBackendTest, MissingTokenIsAuthError) {
  unsetenv("CRSBIAS_TEST_TOKEN");
  try {
    HttpChatBackend backend(Config("http://127.0.0.1:1/v1"));
    FAIL() << "expected BackendError";
  } catch (const BackendError& e) {
    EXPECT_EQ(e.failure(), BackendFailure::kAuth);
    EXPECT_EQ(std::string(e.what()).find("secret"), std::string::npos);
  }
}

TEST_F(HttpBackendTest, UnauthorizedIsNotRetried) {
  FakeServer server([](int, const httplib::Request&, httplib::Response& res) {
    res.status = 401;
  });
  HttpChatBackend backend(Config(server.base_url()));
  EXPECT_EQ(FailureOf(backend), BackendFailure::kAuth);
  EXPECT_EQ(server.calls(), 1);
}

TEST_F(HttpBackendTest, TransientFailuresAreRetried) {
  FakeServer server([](int call, const httplib::Request&,
                       httplib::Response& res) {
    if (call < 2) {
      res.status = call == 0 ? 503 : 429;
      return;
    }
    Reply(res, "User: hi\nSystem: watch Inception");
  });
  HttpChatBackend backend(Config(server.base_url()));
  EXPECT_FALSE(Generate(backend).empty());
  EXPECT_EQ(server.calls(), 3);
}

TEST_F(HttpBackendTest, PersistentServerErrorGivesUpAfterThreeAttempts) {
  FakeServer server([](int, const httplib::Request&, httplib::Response& res) {
    res.status = 500;
  });
  HttpChatBackend backend(Config(server.base_url()));
  EXPECT_EQ(FailureOf(backend), BackendFailure::kTimeout);
  EXPECT_EQ(server.calls(), 3);
}

TEST_F(HttpBackendTest, EmptyAndMalformedResponses) {
  FakeServer empty([](int, const httplib::Request&, httplib::Response& res) {
    Reply(res, "  \n");
  });
  HttpChatBackend empty_backend(Config(empty.base_url()));
  EXPECT_EQ(FailureOf(empty_backend), BackendFailure::kEmptyCompletion);

  FakeServer garbage([](int, const httplib::Request&, httplib::Response& res) {
    res.set_content("{\"nope\": 1}", "application/json");
  });
  HttpChatBackend garbage_backend(Config(garbage.base_url()));
  EXPECT_EQ(FailureOf(garbage_backend), BackendFailure::kMalformedResponse);

  FakeServer missing([](int, const httplib::Request&, httplib::Response& res) {
    res.status = 404;
  });
  HttpChatBackend missing_backend(Config(missing.base_url()));
  EXPECT_EQ(FailureOf(missing_backend), BackendFailure::kHttpStatus);
}

TEST_F(HttpBackendTest, UnreachableEndpointTimesOutAfterRetries) {
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }  // closed again: nothing listens on `port`
  HttpBackendConfig config =
      Config("http://127.0.0.1:" + std::to_string(port) + "/v1");
  config.timeout = std::chrono::milliseconds(300);
  HttpChatBackend backend(config);
  const auto start = std::chrono::steady_clock::now();
  EXPECT_EQ(FailureOf(backend), BackendFailure::kTimeout);
  // Two backoff sleeps: 10 ms + 20 ms.
  EXPECT_GE(std::chrono::steady_clock::now() - start,
            std::chrono::milliseconds(30));
}

}  // namespace
}  // namespace crsbias
