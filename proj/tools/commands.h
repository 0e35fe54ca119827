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

#ifndef CRSBIAS_TOOLS_COMMANDS_H_
#define CRSBIAS_TOOLS_COMMANDS_H_

#include <ostream>
#include <span>
#include <string>

#include "run_config.h"

namespace crsbias::cli {

// Dataset statistics: dialogues per split, catalog size, IIC and popular-item
// ratio. Writes stats.json and popularity.jsonl.
void CmdStats(const RunConfig& config, std::ostream& out);

// Builds a synthetic pool at `pool` and generation_log.jsonl.
void CmdGenerate(const RunConfig& config, std::ostream& out);

// Once-Aug or PopNudge with materialization, plan and long-tail outputs.
void CmdAugment(const RunConfig& config, std::ostream& out);

// Bias and rank metrics for every run file; one report per model plus a
// comparison table.
void CmdEvaluate(const RunConfig& config, std::ostream& out);

// Re-renders the comparison table from report_*.jsonl in output_dir.
void CmdReport(const RunConfig& config, std::ostream& out);

// Parses argv, dispatches, maps errors onto exit codes:
// 0 success, 2 config/input, 3 backend, 4 internal invariant.
int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err);

}  // namespace crsbias::cli

#endif  // CRSBIAS_TOOLS_COMMANDS_H_
