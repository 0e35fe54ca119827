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

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <utility>

#include "crsbias/errors.h"
#include "crsbias/synthgen.h"
#include "httplib.h"
#include "json.hpp"

namespace crsbias {

using nlohmann::json;

HttpChatBackend::HttpChatBackend(HttpBackendConfig config)
    : config_(std::move(config)) {
  const char* token = std::getenv(config_.token_env.c_str());
  if (token == nullptr || *token == '\0') {
    throw BackendError(BackendFailure::kAuth,
                       "environment variable " + config_.token_env +
                           " is not set");
  }
  token_ = token;
  const auto scheme_end = config_.base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw InputError("backend base_url needs a scheme: " + config_.base_url);
  }
  const auto path_start = config_.base_url.find('/', scheme_end + 3);
  host_ = config_.base_url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos
                           ? std::string()
                           : config_.base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  path_ = prefix + "/chat/completions";
}

std::string HttpChatBackend::Complete(const GenerationRequest& request) {
  json body = {{"model", config_.model},
               {"messages", json::array()},
               {"seed", request.seed}};
  for (const ChatMessage& message : request.messages) {
    body["messages"].push_back(
        {{"role", message.role}, {"content", message.content}});
  }
  const std::string payload = body.dump();

  const auto timeout_sec = config_.timeout.count() / 1000;
  const auto timeout_usec = (config_.timeout.count() % 1000) * 1000;
  const int attempts = std::max(1, config_.max_attempts);
  std::string last_failure;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(config_.initial_backoff * (1 << (attempt - 1)));
    }
    httplib::Client client(host_);
    client.set_connection_timeout(timeout_sec, timeout_usec);
    client.set_read_timeout(timeout_sec, timeout_usec);
    client.set_write_timeout(timeout_sec, timeout_usec);
    client.set_bearer_token_auth(token_);
    httplib::Result result =
        client.Post(path_, payload, "application/json");
    if (!result) {
      last_failure = httplib::to_string(result.error());
      continue;
    }
    const int status = result->status;
    if (status == 401 || status == 403) {
      throw BackendError(BackendFailure::kAuth,
                         "backend rejected credentials (HTTP " +
                             std::to_string(status) + ")");
    }
    if (status == 429 || status >= 500) {
      last_failure = "HTTP " + std::to_string(status);
      continue;
    }
    if (status != 200) {
      throw BackendError(BackendFailure::kHttpStatus,
                         "HTTP " + std::to_string(status));
    }
    json response;
    try {
      response = json::parse(result->body);
      const json& content =
          response.at("choices").at(0).at("message").at("content");
      std::string text = content.is_string() ? content.get<std::string>() : "";
      if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
        throw BackendError(BackendFailure::kEmptyCompletion,
                           "backend returned an empty completion");
      }
      return text;
    } catch (const json::exception& e) {
      throw BackendError(BackendFailure::kMalformedResponse, e.what());
    }
  }
  throw BackendError(BackendFailure::kTimeout,
                     host_ + " unreachable after " + std::to_string(attempts) +
                         " attempts (" + last_failure + ")");
}

}  // namespace crsbias
