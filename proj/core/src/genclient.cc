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

#include "semtent/genclient.h"

#include <algorithm>
#include <cmath>

#include "http_transport.h"
#include "json.hpp"
#include "semtent/errors.h"

namespace semtent {
namespace {

using nlohmann::json;

std::string strip(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

json parse_body(std::string_view body, std::string_view what) {
  try {
    json obj = json::parse(body);
    if (!obj.is_object()) throw SchemaError(std::string(what) + " response must be a JSON object");
    return obj;
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string(what) + " response is not JSON: " + e.what());
  }
}

std::string dump_request(const json& request) {
  try {
    return request.dump();
  } catch (const json::type_error& e) {
    throw DataError(std::string("request is not valid UTF-8: ") + e.what());
  }
}

Generation parse_choice(const json& choice, std::size_t index, const SamplingMeta& meta,
                        std::span<const std::string> stop_patterns) {
  const std::string where = "choices[" + std::to_string(index) + "]";
  if (!choice.is_object()) throw SchemaError(where + " must be an object");
  auto text = choice.find("text");
  if (text == choice.end() || !text->is_string()) {
    throw SchemaError(where + ".text missing or not a string");
  }
  auto lps = choice.find("token_logprobs");
  if (lps == choice.end() || lps->is_null()) {
    throw SchemaError(where + ": logprobs required (token_logprobs missing)");
  }
  auto tokens = choice.find("tokens");
  if (tokens == choice.end() || !tokens->is_array()) {
    throw SchemaError(where + ".tokens missing or not an array");
  }
  if (!lps->is_array()) throw SchemaError(where + ".token_logprobs must be an array");

  Generation g;
  g.text = trim_generation(text->get<std::string>(), stop_patterns);
  for (const json& t : *tokens) {
    if (!t.is_string()) throw SchemaError(where + ".tokens must hold strings");
    g.tokens.push_back(t.get<std::string>());
  }
  for (const json& lp : *lps) {
    if (!lp.is_number()) throw SchemaError(where + ".token_logprobs must hold numbers");
    g.token_logprobs.push_back(lp.get<double>());
  }
  g.sampling_meta = meta;
  try {
    validate_generation(g, where);
  } catch (const ValidationError& e) {
    throw SchemaError(e.what());
  }
  return g;
}

}  // namespace

std::vector<std::string> default_stop_patterns() {
  return {"Q:", "Question:", "QUESTION:", "questions:"};
}

void validate_sampling_config(const SamplingConfig& cfg) {
  if (cfg.num_samples < 1) throw ConfigError("num_samples (M) must be ≥ 1");
  if (!(cfg.temperature > 0.0) || !std::isfinite(cfg.temperature)) {
    throw ConfigError("temperature must be > 0");
  }
  if (cfg.num_beams < 1) throw ConfigError("num_beams must be ≥ 1");
  if (cfg.max_tokens < 1) throw ConfigError("max_tokens must be ≥ 1");
  if (cfg.top_k && *cfg.top_k < 1) throw ConfigError("top_k must be ≥ 1");
  if (cfg.top_p && !(*cfg.top_p > 0.0 && *cfg.top_p <= 1.0)) {
    throw ConfigError("top_p must lie in (0, 1]");
  }
}

std::optional<PromptTemplate> parse_prompt_template(std::string_view name) {
  if (name == "open_book_zero_shot") return PromptTemplate::kOpenBookZeroShot;
  if (name == "closed_book_few_shot") return PromptTemplate::kClosedBookFewShot;
  return std::nullopt;
}

std::string_view to_string(PromptTemplate t) {
  return t == PromptTemplate::kOpenBookZeroShot ? "open_book_zero_shot" : "closed_book_few_shot";
}

std::string build_prompt(const QuestionRecord& record, PromptTemplate tmpl,
                         std::optional<std::string_view> few_shot_block) {
  std::string prompt;
  if (tmpl == PromptTemplate::kOpenBookZeroShot) {
    prompt = record.context;
    prompt += '\n';
    for (const auto& turn : record.prior_turns) {
      prompt += "Q: " + turn.question + "\nA: " + turn.answer + "\n";
    }
    prompt += "Q: " + record.question + "\nA:";
    return prompt;
  }
  if (!few_shot_block) throw ConfigError("closed-book prompts require a few-shot block");
  prompt = std::string(*few_shot_block);
  if (!prompt.empty() && prompt.back() != ' ' && prompt.back() != '\n') prompt += ' ';
  prompt += "Q: " + record.question + " A:";
  return prompt;
}

std::string trim_generation(std::string_view text, std::span<const std::string> stop_patterns) {
  std::size_t cut = text.size();
  for (const auto& pattern : stop_patterns) {
    if (pattern.empty()) continue;
    const auto pos = text.find(pattern);
    if (pos != std::string_view::npos) cut = std::min(cut, pos);
  }
  return strip(text.substr(0, cut));
}

std::vector<Generation> parse_generate_response(std::string_view body, const SamplingMeta& meta,
                                                std::span<const std::string> stop_patterns) {
  json obj = parse_body(body, "generate");
  auto choices = obj.find("choices");
  if (choices == obj.end() || !choices->is_array()) {
    throw SchemaError("generate response: missing 'choices' array");
  }
  std::vector<Generation> out;
  out.reserve(choices->size());
  for (std::size_t i = 0; i < choices->size(); ++i) {
    out.push_back(parse_choice((*choices)[i], i, meta, stop_patterns));
  }
  return out;
}

class GeneratorClient::Impl {
 public:
  explicit Impl(HttpOptions options) : transport(std::move(options)) {}

  std::vector<Generation> generate(const std::string& prompt, int n, int num_beams,
                                   const SamplingConfig& cfg, const SamplingMeta& meta) {
    json request = {{"prompt", prompt},           {"n", n},
                    {"temperature", cfg.temperature}, {"num_beams", num_beams},
                    {"max_tokens", cfg.max_tokens},   {"logprobs", true}};
    if (cfg.top_k) request["top_k"] = *cfg.top_k;
    if (cfg.top_p) request["top_p"] = *cfg.top_p;
    return parse_generate_response(transport.post("/generate", dump_request(request)), meta,
                                   cfg.stop_patterns);
  }

  internal::JsonTransport transport;
};

GeneratorClient::GeneratorClient(HttpOptions options)
    : impl_(std::make_unique<Impl>(std::move(options))) {}

GeneratorClient::~GeneratorClient() = default;

std::vector<Generation> GeneratorClient::sample_answers(const std::string& prompt,
                                                        const SamplingConfig& cfg) {
  validate_sampling_config(cfg);
  SamplingMeta meta{cfg.temperature, cfg.method, std::nullopt};
  int beams = 1;
  if (cfg.method == SamplingMethod::kBeamMultinomial) {
    beams = cfg.num_beams;
    meta.num_beams = beams;
  }
  auto out = impl_->generate(prompt, cfg.num_samples, beams, cfg, meta);
  if (out.size() < static_cast<std::size_t>(cfg.num_samples)) {
    throw SchemaError("generate response: expected " + std::to_string(cfg.num_samples) +
                      " choices, got " + std::to_string(out.size()));
  }
  out.resize(static_cast<std::size_t>(cfg.num_samples));
  return out;
}

std::pair<Generation, std::optional<Generation>> GeneratorClient::most_likely_answers(
    const std::string& prompt, const SamplingConfig& cfg) {
  validate_sampling_config(cfg);
  const SamplingMeta meta{cfg.temperature, SamplingMethod::kBeamMultinomial, cfg.num_beams};
  const int n = std::min(2, cfg.num_beams);
  auto out = impl_->generate(prompt, n, cfg.num_beams, cfg, meta);
  if (out.empty()) throw SchemaError("generate response: no choices for most-likely decode");
  std::optional<Generation> second;
  if (out.size() > 1) second = std::move(out[1]);
  return {std::move(out[0]), std::move(second)};
}

Generation GeneratorClient::most_likely_answer(const std::string& prompt,
                                               const SamplingConfig& cfg) {
  return most_likely_answers(prompt, cfg).first;
}

std::map<std::string, double> GeneratorClient::next_token_logprobs(
    const std::string& prompt, const std::vector<std::string>& candidates) {
  const json request = {{"prompt", prompt}, {"candidates", candidates}};
  json obj = parse_body(impl_->transport.post("/next_token_logprobs", dump_request(request)),
                        "next_token_logprobs");
  auto lps = obj.find("logprobs");
  if (lps == obj.end() || !lps->is_object()) {
    throw SchemaError("next_token_logprobs response: missing 'logprobs' object");
  }
  std::map<std::string, double> out;
  for (const auto& [token, value] : lps->items()) {
    if (!value.is_number()) {
      throw SchemaError("next_token_logprobs response: value for '" + token + "' is not a number");
    }
    out[token] = value.get<double>();
  }
  return out;
}

std::size_t GeneratorClient::retries() const { return impl_->transport.retries(); }

}  // namespace semtent
