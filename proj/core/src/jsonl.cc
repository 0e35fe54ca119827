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

#include "jsonl.h"

#include <fstream>

#include "crsbias/errors.h"

namespace crsbias::internal {

void ForEachRecord(const std::filesystem::path& path,
                   const std::function<void(const json&, std::size_t)>& fn) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_number);
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw InputError(where + ": malformed record: " + e.what());
    }
    if (!record.is_object()) {
      throw InputError(where + ": record is not a JSON object");
    }
    try {
      fn(record, line_number);
    } catch (const InputError& e) {
      throw InputError(where + ": " + e.what());
    } catch (const json::exception& e) {
      throw InputError(where + ": " + e.what());
    }
  }
}

const json& RequireField(const json& record, std::string_view field) {
  auto it = record.find(field);
  if (it == record.end()) {
    throw InputError("missing field '" + std::string(field) + "'");
  }
  return *it;
}

std::string RequireString(const json& record, std::string_view field) {
  const json& value = RequireField(record, field);
  if (!value.is_string()) {
    throw InputError("field '" + std::string(field) + "' must be a string");
  }
  return value.get<std::string>();
}

namespace {

std::vector<std::string> StringArray(const json& value,
                                     std::string_view field) {
  if (!value.is_array()) {
    throw InputError("field '" + std::string(field) + "' must be an array");
  }
  std::vector<std::string> out;
  out.reserve(value.size());
  for (const json& element : value) {
    if (!element.is_string()) {
      throw InputError("field '" + std::string(field) +
                       "' must contain strings");
    }
    out.push_back(element.get<std::string>());
  }
  return out;
}

}  // namespace

std::vector<std::string> RequireStringArray(const json& record,
                                            std::string_view field) {
  return StringArray(RequireField(record, field), field);
}

std::vector<std::string> OptionalStringArray(const json& record,
                                             std::string_view field) {
  auto it = record.find(field);
  if (it == record.end() || it->is_null()) return {};
  return StringArray(*it, field);
}

long long RequireInt(const json& record, std::string_view field) {
  const json& value = RequireField(record, field);
  if (!value.is_number_integer()) {
    throw InputError("field '" + std::string(field) + "' must be an integer");
  }
  return value.get<long long>();
}

std::string DumpLine(const json& record) {
  return record.dump(-1, ' ', false, json::error_handler_t::strict);
}

}  // namespace crsbias::internal
