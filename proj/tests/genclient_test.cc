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

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include <random>

#include "semtent/errors.h"
#include "test_util.h"

namespace semtent {
namespace {

using ::testing::HasSubstr;

const std::vector<std::string> kStops = default_stop_patterns();

TEST(BuildPrompt, OpenBookWithoutTurns) {
  QuestionRecord r;
  r.context = "Paris is in France.";
  r.question = "q";
  EXPECT_EQ(build_prompt(r, PromptTemplate::kOpenBookZeroShot), "Paris is in France.\nQ: q\nA:");
}

TEST(BuildPrompt, TwoPriorTurnsMatchGolden) {
  QuestionRecord r;
  r.context = "Anna walked her dog to the park on Sunday.";
  r.prior_turns = {{"Who walked the dog?", "Anna"}, {"Where did she go?", "the park"}};
  r.question = "When?";
  EXPECT_EQ(build_prompt(r, PromptTemplate::kOpenBookZeroShot),
            testing::read_file(testing::test_dir() / "golden/prompt_two_turns.txt"));
}

TEST(BuildPrompt, ClosedBookPrefixesBlockVerbatim) {
  QuestionRecord r;
  r.question = "What is the capital of France?";
  const std::string block = testing::read_file(testing::data_path("few_shot_capitals.txt"));
  const std::string prompt = build_prompt(r, PromptTemplate::kClosedBookFewShot, block);
  EXPECT_TRUE(prompt.starts_with(block));
  EXPECT_EQ(prompt.substr(block.size()), "Q: What is the capital of France? A:");
  EXPECT_THROW(build_prompt(r, PromptTemplate::kClosedBookFewShot), ConfigError);
  EXPECT_EQ(parse_prompt_template("closed_book_few_shot"), PromptTemplate::kClosedBookFewShot);
}

TEST(TrimGeneration, Examples) {
  EXPECT_EQ(trim_generation("Paris Q: next?", kStops), "Paris");
  EXPECT_EQ(trim_generation("  Paris, France \n", kStops), "Paris, France");
  EXPECT_EQ(trim_generation("Rome questions: x Question: y", kStops), "Rome");
  EXPECT_EQ(trim_generation("Rome Question: y questions: x", kStops), "Rome");
  EXPECT_EQ(trim_generation("Q:", kStops), "");
}

TEST(TrimGeneration, EarliestPatternAndIdempotent) {
  std::mt19937_64 rng(41);
  const std::vector<std::string> parts = {"Paris", " ", "Q:", "Question:", "QUESTION:",
                                          "questions:", "\n", "x", "Q", ":"};
  for (int trial = 0; trial < 300; ++trial) {
    std::string text;
    for (int i = 0; i < 8; ++i) text += parts[rng() % parts.size()];
    std::size_t cut = text.size();
    for (std::size_t pos = 0; pos < text.size() && cut == text.size(); ++pos) {
      for (const auto& p : kStops) {
        if (text.compare(pos, p.size(), p) == 0) {
          cut = pos;
          break;
        }
      }
    }
    std::string expected = text.substr(0, cut);
    expected.erase(0, expected.find_first_not_of(" \n"));
    expected.erase(expected.find_last_not_of(" \n") + 1);
    const std::string once = trim_generation(text, kStops);
    EXPECT_EQ(once, expected) << text;
    EXPECT_EQ(trim_generation(once, kStops), once);
  }
}

TEST(ParseGenerateResponse, KeepsLogprobsAsReceived) {
  const SamplingMeta meta{0.5, SamplingMethod::kMultinomial, std::nullopt};
  const auto out = parse_generate_response(
      R"({"choices":[{"text":" Paris Q: more","tokens":[" Paris"," Q",":"," more"],)"
      R"("token_logprobs":[-0.25,-1.5,-0.125,-2]}]})",
      meta, kStops);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].text, "Paris");
  EXPECT_EQ(out[0].token_logprobs, (std::vector<double>{-0.25, -1.5, -0.125, -2.0}));
  EXPECT_EQ(out[0].tokens.size(), 4u);
  EXPECT_EQ(out[0].sampling_meta, meta);
}

TEST(ParseGenerateResponse, SchemaViolations) {
  const SamplingMeta meta;
  try {
    parse_generate_response(R"({"choices":[{"text":"a","tokens":["a"]}]})", meta, kStops);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_THAT(e.what(), HasSubstr("logprobs required"));
  }
  EXPECT_THROW(parse_generate_response(R"({"choices":{}})", meta, kStops), SchemaError);
  EXPECT_THROW(parse_generate_response("nope", meta, kStops), SchemaError);
  EXPECT_THROW(parse_generate_response(
                   R"({"choices":[{"text":"a","tokens":["a","b"],"token_logprobs":[-1]}]})", meta,
                   kStops),
               SchemaError);
  EXPECT_THROW(parse_generate_response(
                   R"({"choices":[{"text":"a","tokens":["a"],"token_logprobs":[0.3]}]})", meta,
                   kStops),
               SchemaError);
}

TEST(SamplingConfig, Validation) {
  SamplingConfig cfg;
  EXPECT_NO_THROW(validate_sampling_config(cfg));
  EXPECT_EQ(cfg.num_samples, 10);
  EXPECT_EQ(cfg.temperature, 0.5);
  EXPECT_EQ(cfg.num_beams, 5);
  cfg.num_samples = 0;
  EXPECT_THROW(validate_sampling_config(cfg), ConfigError);
  cfg.num_samples = 1;
  cfg.temperature = 0.0;
  EXPECT_THROW(validate_sampling_config(cfg), ConfigError);
  cfg.temperature = 1.0;
  cfg.top_p = 1.5;
  EXPECT_THROW(validate_sampling_config(cfg), ConfigError);
}

}  // namespace
}  // namespace semtent
