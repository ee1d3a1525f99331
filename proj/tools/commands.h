// Copyright 2026 The semtent Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// The `semtent` subcommands: generate -> score -> evaluate, plus ablate.
//
// Exit codes: 0 success, 2 config error, 3 backend error, 4 data error.

#ifndef SEMTENT_TOOLS_COMMANDS_H_
#define SEMTENT_TOOLS_COMMANDS_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "semtent/evalkit.h"
#include "semtent/genclient.h"
#include "semtent/records.h"
#include "semtent/text_metrics.h"

namespace semtent::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitBackend = 3,
  kExitData = 4,
};

enum class AblationAxis { kNone, kTemperature, kSampleCount };

std::vector<Measure> default_measures();

struct RunConfig {
  std::vector<std::filesystem::path> inputs;
  std::filesystem::path output;
  std::filesystem::path labels;

  // Exactly one of these selects the NLI backend for score/ablate.
  std::filesystem::path oracle_rules;
  std::string nli_endpoint;
  std::string generator_endpoint;

  SamplingConfig sampling;
  PromptTemplate prompt_template = PromptTemplate::kOpenBookZeroShot;
  std::filesystem::path few_shot_file;
  std::filesystem::path p_true_few_shot_file;

  AccuracyCriterion criterion;
  std::vector<Measure> measures = default_measures();
  LikelihoodMode mode = LikelihoodMode::kRaw;

  AblationAxis axis = AblationAxis::kNone;
  std::vector<double> temperatures;  // empty: every temperature present
  std::vector<int> sample_counts;    // empty: 2..M

  std::filesystem::path cache_path;
  std::uint64_t seed = 0;
  int jobs = 1;

  double timeout_seconds = 30.0;
  int max_attempts = 3;
  double initial_backoff_seconds = 0.5;
  int max_in_flight = 4;
};

// Counters reported on stderr after a run.
struct RunSummary {
  std::size_t records = 0;
  std::size_t failed = 0;
  std::size_t cache_hits = 0;
  std::size_t cache_misses = 0;
  std::size_t rows = 0;
};

// Each command validates the whole config before touching any output and
// throws ConfigError / TransportError / DataError on failure. Outputs are
// written atomically.
RunSummary cmd_generate(const RunConfig& cfg);  // output: records JSONL
RunSummary cmd_score(const RunConfig& cfg);     // output: scored JSONL
RunSummary cmd_evaluate(const RunConfig& cfg);  // output dir: report.json, summary.csv, details.csv
RunSummary cmd_ablate(const RunConfig& cfg);    // output dir: ablation.json, ablation.csv

// Group key used by temperature ablations, e.g. "T=0.5", "T=1.0".
std::string temperature_key(double t);

// Parses argv, dispatches, and maps exceptions to exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace semtent::cli

#endif  // SEMTENT_TOOLS_COMMANDS_H_
