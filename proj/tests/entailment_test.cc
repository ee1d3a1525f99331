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

#include "semtent/entailment.h"

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include <random>

#include "semtent/errors.h"
#include "test_util.h"

namespace semtent {
namespace {

using ::semtent::testing::TempDir;
using ::testing::HasSubstr;

constexpr const char* kQuestion = "What is the capital of France?";

// String equality of the full premise and hypothesis.
class EqualityBackend : public NliBackend {
 public:
  EntailmentLabel classify(const NliPair& p) override {
    ++calls;
    return {p.premise == p.hypothesis ? Entailment::kEntailment : Entailment::kNeutral, {}};
  }
  int calls = 0;
};

// Entails only when the premise answer is a prefix of the hypothesis answer.
class OneWayBackend : public NliBackend {
 public:
  EntailmentLabel classify(const NliPair& p) override {
    ++calls;
    return {p.hypothesis_answer().starts_with(p.premise_answer()) ? Entailment::kEntailment
                                                                  : Entailment::kContradiction,
            {}};
  }
  int calls = 0;
};

OracleBackend paris_oracle() {
  return OracleBackend::from_json(R"({"synonym_sets": [["paris", "it's paris"]]})");
}

TEST(BuildNliInput, ParisExampleAnswers) {
  const NliPair p = build_nli_input("", kQuestion, "Paris", "It's Paris");
  EXPECT_EQ(p.premise, "What is the capital of France? Paris");
  EXPECT_EQ(p.hypothesis, "What is the capital of France? It's Paris");
  EXPECT_EQ(p.premise_answer(), "Paris");
  EXPECT_EQ(p.hypothesis_answer(), "It's Paris");
  EXPECT_EQ(p.premise_prefix(), p.hypothesis_prefix());
}

TEST(BuildNliInput, IdenticalAnswersAndContext) {
  const NliPair same = build_nli_input("", kQuestion, "Paris", "Paris");
  EXPECT_EQ(same.premise, same.hypothesis);
  const NliPair ctx = build_nli_input("Story about France.", kQuestion, "Paris", "Lyon");
  EXPECT_TRUE(ctx.premise.starts_with("Story about France. "));
  EXPECT_TRUE(ctx.hypothesis.starts_with("Story about France. "));
  const NliPair empty_answer = build_nli_input("", kQuestion, "", "x");
  EXPECT_EQ(empty_answer.premise, kQuestion);
  EXPECT_EQ(empty_answer.premise_answer(), "");
}

TEST(BidirectionalEquivalent, Examples) {
  EqualityBackend eq;
  EXPECT_TRUE(bidirectional_equivalent(eq, nullptr, "", kQuestion, "Paris", "Paris"));
  OneWayBackend one_way;
  EXPECT_FALSE(bidirectional_equivalent(one_way, nullptr, "", kQuestion, "Paris", "Paris, France"));
  EXPECT_EQ(one_way.calls, 2);
  OracleBackend oracle = paris_oracle();
  EXPECT_TRUE(bidirectional_equivalent(oracle, nullptr, "", kQuestion, "Paris", "It's Paris"));
  EXPECT_FALSE(bidirectional_equivalent(oracle, nullptr, "", kQuestion, "Paris", "London"));
}

TEST(OracleBackend, RulesAndNormalization) {
  OracleBackend oracle = paris_oracle();
  auto both = [&](std::string_view a, std::string_view b) {
    return oracle.classify(build_nli_input("", kQuestion, a, b)).label == Entailment::kEntailment &&
           oracle.classify(build_nli_input("", kQuestion, b, a)).label == Entailment::kEntailment;
  };
  EXPECT_TRUE(both("paris", "it's paris"));
  EXPECT_TRUE(both("PARIS!", "Paris"));
  EXPECT_FALSE(both("Paris", "Berlin"));
  EXPECT_EQ(oracle.classify(build_nli_input("", kQuestion, "Paris", "Berlin")).label,
            Entailment::kNeutral);
  // Same answers under different questions are not equivalent.
  EXPECT_EQ(oracle.classify(build_nli_input("", kQuestion, "Paris", "Paris")).label,
            Entailment::kEntailment);
  NliPair crossed{"Q1? Paris", "Q2? Paris", 4, 4};
  EXPECT_EQ(oracle.classify(crossed).label, Entailment::kNeutral);
  const auto label = oracle.classify(build_nli_input("", kQuestion, "Paris", "Paris"));
  ASSERT_TRUE(label.probs.has_value());
  EXPECT_EQ((*label.probs)[0], 1.0);
}

TEST(OracleBackend, TransitiveWithinSynonymSet) {
  OracleBackend oracle =
      OracleBackend::from_json(R"({"synonym_sets": [["a", "b", "c"], ["x", "y"]]})");
  const std::vector<std::string> answers = {"a", "b", "c", "x", "y", "z", "A", "c."};
  auto eq = [&](const std::string& s, const std::string& t) {
    return bidirectional_equivalent(oracle, nullptr, "", kQuestion, s, t);
  };
  for (const auto& s : answers) {
    EXPECT_TRUE(eq(s, s));
    for (const auto& t : answers) {
      EXPECT_EQ(eq(s, t), eq(t, s));
      for (const auto& u : answers) {
        if (eq(s, t) && eq(t, u)) EXPECT_TRUE(eq(s, u)) << s << " " << t << " " << u;
      }
    }
  }
  EXPECT_EQ(oracle.canonical("B"), oracle.canonical("c"));
}

TEST(OracleBackend, MalformedRules) {
  EXPECT_THROW(OracleBackend::from_json("not json"), DataError);
  EXPECT_THROW(OracleBackend::from_json(R"({"synonyms": []})"), DataError);
  EXPECT_THROW(OracleBackend::from_json(R"({"synonym_sets": [["a"], ["A", "b"]]})"), DataError);
  EXPECT_THROW(oracle_backend("/nonexistent/rules.json"), DataError);
}

TEST(ParseNliResponse, Validation) {
  const auto ok = parse_nli_response(
      R"({"label":"entailment","probs":{"entailment":0.9,"neutral":0.07,"contradiction":0.03}})");
  EXPECT_EQ(ok.label, Entailment::kEntailment);
  ASSERT_TRUE(ok.probs.has_value());
  EXPECT_DOUBLE_EQ((*ok.probs)[2], 0.03);
  EXPECT_EQ(parse_nli_response(R"({"label":"neutral"})").label, Entailment::kNeutral);
  EXPECT_THROW(parse_nli_response(R"({"label":"maybe"})"), SchemaError);
  EXPECT_THROW(parse_nli_response(R"({"probs":{}})"), SchemaError);
  EXPECT_THROW(parse_nli_response("[]"), SchemaError);
  EXPECT_THROW(parse_nli_response("{"), SchemaError);
  EXPECT_THROW(
      parse_nli_response(
          R"({"label":"entailment","probs":{"entailment":0.5,"neutral":0.2,"contradiction":0.1}})"),
      SchemaError);
  EXPECT_THROW(
      parse_nli_response(
          R"({"label":"entailment","probs":{"entailment":1.1,"neutral":-0.1,"contradiction":0}})"),
      SchemaError);
}

TEST(Sha256, KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(EquivalenceCache, IsDirectional) {
  OneWayBackend backend;
  EquivalenceCache cache;
  const NliPair ab = build_nli_input("", kQuestion, "Paris", "Paris, France");
  const NliPair ba = build_nli_input("", kQuestion, "Paris, France", "Paris");
  EXPECT_EQ(classify_cached(backend, &cache, ab).label, Entailment::kEntailment);
  EXPECT_EQ(classify_cached(backend, &cache, ba).label, Entailment::kContradiction);
  EXPECT_EQ(classify_cached(backend, &cache, ab).label, Entailment::kEntailment);
  EXPECT_EQ(backend.calls, 2);
  EXPECT_EQ(cache.hits(), 1u);
  EXPECT_EQ(cache.misses(), 2u);
  EXPECT_EQ(cache.size(), 2u);
}

TEST(EquivalenceCache, OnAndOffGiveIdenticalAnswers) {
  std::mt19937_64 rng(9);
  const std::vector<std::string> answers = {"Paris", "Paris, France", "paris", "Lyon", "Lyon city",
                                            "It's Paris"};
  OneWayBackend plain, cached_backend;
  EquivalenceCache cache;
  for (int i = 0; i < 500; ++i) {
    const auto& a = answers[rng() % answers.size()];
    const auto& b = answers[rng() % answers.size()];
    EXPECT_EQ(bidirectional_equivalent(plain, nullptr, "", kQuestion, a, b),
              bidirectional_equivalent(cached_backend, &cache, "", kQuestion, a, b));
  }
  EXPECT_GT(cache.hits(), 0u);
  EXPECT_LT(cached_backend.calls, plain.calls);
}

TEST(EquivalenceCache, PersistsSortedJsonl) {
  TempDir dir;
  OracleBackend oracle = paris_oracle();
  EquivalenceCache cache;
  for (const char* a : {"Paris", "Lyon", "It's Paris"}) {
    for (const char* b : {"Paris", "Lyon"}) {
      classify_cached(oracle, &cache, build_nli_input("", kQuestion, a, b));
    }
  }
  cache.save(dir / "cache.jsonl");
  const std::string first = testing::read_file(dir / "cache.jsonl");
  EXPECT_THAT(first, HasSubstr("\"premise_digest\""));

  EquivalenceCache reloaded;
  reloaded.load(dir / "cache.jsonl");
  EXPECT_EQ(reloaded.size(), cache.size());
  const NliPair pair = build_nli_input("", kQuestion, "It's Paris", "Paris");
  EXPECT_EQ(reloaded.lookup(pair), oracle.classify(pair));
  reloaded.save(dir / "again.jsonl");
  EXPECT_EQ(testing::read_file(dir / "again.jsonl"), first);

  testing::write_file(dir / "bad.jsonl", "{\"premise_digest\":1}\n");
  EquivalenceCache bad;
  EXPECT_THROW(bad.load(dir / "bad.jsonl"), DataError);
}

TEST(HttpBackend, RejectsInvalidEndpoints) {
  HttpOptions o;
  o.endpoint = "localhost:8080";
  EXPECT_THROW(HttpBackend{o}, ConfigError);
  o.endpoint = "https://example.com";
  EXPECT_THROW(HttpBackend{o}, ConfigError);
  o.endpoint = "http://127.0.0.1:1";
  o.max_attempts = 0;
  EXPECT_THROW(HttpBackend{o}, ConfigError);
}

}  // namespace
}  // namespace semtent
