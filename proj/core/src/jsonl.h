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

#ifndef CRSBIAS_SRC_JSONL_H_
#define CRSBIAS_SRC_JSONL_H_

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace crsbias::internal {

using json = nlohmann::json;

// Calls `fn(record, line_number)` for each non-blank line of a
// line-delimited JSON file. Line numbers are 1-based. Parse errors and any
// exception thrown by `fn` are rethrown as InputError prefixed with
// "<path>:<line>: ".
void ForEachRecord(const std::filesystem::path& path,
                   const std::function<void(const json&, std::size_t)>& fn);

// Typed field accessors; throw InputError naming the field.
const json& RequireField(const json& record, std::string_view field);
std::string RequireString(const json& record, std::string_view field);
std::vector<std::string> RequireStringArray(const json& record,
                                            std::string_view field);
std::vector<std::string> OptionalStringArray(const json& record,
                                             std::string_view field);
long long RequireInt(const json& record, std::string_view field);

// Compact single-line dump; keeps UTF-8 as is.
std::string DumpLine(const json& record);

}  // namespace crsbias::internal

#endif  // CRSBIAS_SRC_JSONL_H_
