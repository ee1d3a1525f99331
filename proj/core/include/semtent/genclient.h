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

// Live generation front end: prompt templates, answer trimming and a client
// for a completions-style endpoint that returns per-token log-probs.
//
//   POST {endpoint}/generate
//     {"prompt", "n", "temperature", "num_beams", "max_tokens", "logprobs": true,
//      "top_k"?, "top_p"?}
//     -> {"choices": [{"text", "tokens", "token_logprobs"}]}
//   POST {endpoint}/next_token_logprobs
//     {"prompt", "candidates": ["True", "False"]} -> {"logprobs": {"True": x, ...}}

#ifndef SEMTENT_GENCLIENT_H_
#define SEMTENT_GENCLIENT_H_

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "semtent/entailment.h"
#include "semtent/records.h"

namespace semtent {

std::vector<std::string> default_stop_patterns();

struct SamplingConfig {
  int num_samples = 10;  // M
  double temperature = 0.5;
  SamplingMethod method = SamplingMethod::kMultinomial;
  int num_beams = 5;  // beam width for the most-likely decode and beam sampling
  int max_tokens = 64;
  std::vector<std::string> stop_patterns = default_stop_patterns();
  std::optional<int> top_k;
  std::optional<double> top_p;
};

// Throws ConfigError on M < 1, temperature <= 0, num_beams < 1 or max_tokens < 1.
void validate_sampling_config(const SamplingConfig& cfg);

enum class PromptTemplate { kOpenBookZeroShot, kClosedBookFewShot };

std::optional<PromptTemplate> parse_prompt_template(std::string_view name);
std::string_view to_string(PromptTemplate t);

// Open book: context, prior "Q: ..\nA: .." turns, then "Q: <question>\nA:".
// Closed book: few-shot block, then "Q: <question> A:".
std::string build_prompt(const QuestionRecord& record, PromptTemplate tmpl,
                         std::optional<std::string_view> few_shot_block = std::nullopt);

// Cuts `text` at the earliest occurrence of any stop pattern and strips
// surrounding whitespace. Idempotent.
std::string trim_generation(std::string_view text, std::span<const std::string> stop_patterns);

// Parses a /generate response body into generations, trimming each text.
// Token log-probs are kept exactly as received. Throws SchemaError, including
// "logprobs required" when a choice lacks token_logprobs.
std::vector<Generation> parse_generate_response(std::string_view body, const SamplingMeta& meta,
                                                std::span<const std::string> stop_patterns);

class GeneratorClient {
 public:
  explicit GeneratorClient(HttpOptions options);
  ~GeneratorClient();

  // Exactly cfg.num_samples generations, in the order returned.
  std::vector<Generation> sample_answers(const std::string& prompt, const SamplingConfig& cfg);

  // Beam-search decode; the second element is the runner-up beam when the
  // server returns one.
  std::pair<Generation, std::optional<Generation>> most_likely_answers(
      const std::string& prompt, const SamplingConfig& cfg);

  Generation most_likely_answer(const std::string& prompt, const SamplingConfig& cfg);

  std::map<std::string, double> next_token_logprobs(const std::string& prompt,
                                                    const std::vector<std::string>& candidates = {
                                                        "True", "False"});

  std::size_t retries() const;

 private:
  class Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace semtent

#endif  // SEMTENT_GENCLIENT_H_
