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

#include "semtent/clustering.h"

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "oracles.h"
#include "semtent/errors.h"
#include "test_util.h"

namespace semtent {
namespace {

using ::semtent::testing::gen;
using ::semtent::testing::gen_p;
using ::testing::ElementsAre;

constexpr const char* kQuestion = "What is the capital of France?";

oracle::Partition as_sets(const SemanticPartition& p) {
  oracle::Partition out;
  for (const auto& c : p.clusters) out.insert({c.member_indices.begin(), c.member_indices.end()});
  return out;
}

// Texts are "k:<n>" where k is the class label; equal k means equivalent.
EquivalencePredicate class_predicate(int* calls = nullptr) {
  return [calls](std::string_view a, std::string_view b) {
    if (calls) ++*calls;
    return a.substr(0, a.find(':')) == b.substr(0, b.find(':'));
  };
}

TEST(ClusterGenerations, ParisExampleMerge) {
  OracleBackend oracle =
      OracleBackend::from_json(R"({"synonym_sets": [["paris", "it's paris"]]})");
  const std::vector<Generation> samples = {gen_p("Paris", 0.5), gen_p("It's Paris", 0.4),
                                           gen_p("London", 0.1)};
  const auto p = cluster_generations("", kQuestion, samples, oracle, nullptr);
  ASSERT_EQ(p.clusters.size(), 2u);
  EXPECT_THAT(p.clusters[0].member_indices, ElementsAre(0u, 1u));
  EXPECT_THAT(p.clusters[1].member_indices, ElementsAre(2u));
  EXPECT_EQ(p.clusters[1].representative_index, 2u);
  EXPECT_NEAR(std::exp(p.clusters[0].log_prob_raw), 0.9, 1e-15);
  EXPECT_NEAR(p.clusters[0].log_prob_raw, std::log(0.9), 1e-15);
}

TEST(ClusterGenerations, SingleSample) {
  const std::vector<Generation> samples = {gen("only", {-1.2})};
  const auto p = cluster_generations(samples, class_predicate());
  ASSERT_EQ(p.clusters.size(), 1u);
  EXPECT_EQ(p.clusters[0].log_prob_raw, -1.2);
  EXPECT_EQ(p.clusters[0].representative_index, 0u);
}

TEST(ClusterGenerations, FirstMatchWinsForNonTransitivePredicates) {
  // b~a, b~c but a!~c: c joins nothing via b because b is not a representative.
  const std::vector<Generation> samples = {gen("a", {-1}), gen("c", {-1}), gen("b", {-1})};
  auto equiv = [](std::string_view x, std::string_view y) {
    return x == y || x == "b" || y == "b";
  };
  const auto p = cluster_generations(samples, equiv);
  ASSERT_EQ(p.clusters.size(), 2u);
  EXPECT_THAT(p.clusters[0].member_indices, ElementsAre(0u, 2u));
  EXPECT_THAT(p.clusters[1].member_indices, ElementsAre(1u));
}

TEST(ClusterGenerations, MatchesClosureOracleAndIsOrderInvariant) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = 1 + static_cast<int>(rng() % 10);
    const int k = 1 + static_cast<int>(rng() % 5);
    std::vector<Generation> samples;
    std::uniform_real_distribution<double> u(-4.0, -0.01);
    for (int i = 0; i < m; ++i) {
      samples.push_back(gen(std::to_string(rng() % k) + ":" + std::to_string(i), {u(rng), u(rng)}));
    }
    int calls = 0;
    const auto p = cluster_generations(samples, class_predicate(&calls));
    check_partition(p, samples.size());
    const auto pred = class_predicate();
    const auto expected = oracle::closure_partition(samples.size(), [&](std::size_t i, std::size_t j) {
      return pred(samples[i].text, samples[j].text);
    });
    EXPECT_EQ(as_sets(p), expected);
    EXPECT_LE(calls, 2 * (m - 1) * static_cast<int>(p.clusters.size()));

    // Probability mass is conserved.
    double total = 0.0, all = 0.0;
    for (const auto& c : p.clusters) total += std::exp(c.log_prob_raw);
    for (const auto& g : samples) all += std::exp(sequence_log_likelihood(g));
    EXPECT_NEAR(total, all, 1e-10);

    // Any permutation gives the same set of sets of texts.
    auto texts_of = [](const SemanticPartition& part, const std::vector<Generation>& s) {
      std::set<std::multiset<std::string>> out;
      for (const auto& c : part.clusters) {
        std::multiset<std::string> t;
        for (auto i : c.member_indices) t.insert(s[i].text);
        out.insert(t);
      }
      return out;
    };
    auto shuffled = samples;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_EQ(texts_of(cluster_generations(shuffled, pred), shuffled), texts_of(p, samples));
  }
}

TEST(ClusterGenerations, BackendOverloadCountsCallsAndUsesCache) {
  OracleBackend oracle = OracleBackend::from_json(R"({"synonym_sets": [["a", "b"]]})");
  const std::vector<Generation> samples = {gen("a", {-1}), gen("b", {-1}), gen("c", {-1}),
                                           gen("a", {-1}), gen("c", {-1})};
  EquivalenceCache cache;
  const auto p = cluster_generations("", kQuestion, samples, oracle, &cache);
  ASSERT_EQ(p.clusters.size(), 2u);
  EXPECT_LE(oracle.calls(), 2u * 4u * 2u);
  const std::size_t before = oracle.calls();
  const auto again = cluster_generations("", kQuestion, samples, oracle, &cache);
  EXPECT_EQ(oracle.calls(), before);
  EXPECT_EQ(as_sets(again), as_sets(p));
}

TEST(ClusterGenerations, EmptyInputIsAnError) {
  EXPECT_THROW(cluster_generations(std::span<const Generation>{}, class_predicate()), DataError);
}

TEST(ClusterLogProb, Examples) {
  const std::vector<Generation> samples = {gen_p("a", 0.5), gen_p("b", 0.4), gen("c", {-1.2})};
  Cluster single;
  single.member_indices = {2};
  EXPECT_EQ(cluster_log_prob(single, samples, LikelihoodMode::kRaw), -1.2);
  Cluster pair;
  pair.member_indices = {0, 1};
  EXPECT_NEAR(cluster_log_prob(pair, samples, LikelihoodMode::kRaw), std::log(0.9), 1e-15);
}

TEST(ClusterLogProb, MatchesNaiveOracleInBothModes) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3.0, -0.001);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Generation> samples;
    Cluster c;
    std::vector<double> raw, norm;
    for (std::size_t i = 0; i < 5; ++i) {
      std::vector<double> lps(1 + rng() % 6);
      for (auto& x : lps) x = u(rng);
      samples.push_back(gen("s", lps));
      c.member_indices.push_back(i);
      raw.push_back(sequence_log_likelihood(samples.back()));
      norm.push_back(length_normalised_log_likelihood(samples.back()));
    }
    EXPECT_NEAR(cluster_log_prob(c, samples, LikelihoodMode::kRaw), oracle::log_of_sum_of_exp(raw),
                1e-12);
    EXPECT_NEAR(cluster_log_prob(c, samples, LikelihoodMode::kLengthNormalised),
                oracle::log_of_sum_of_exp(norm), 1e-12);
  }
}

TEST(LogSumExp, StableForLargeMagnitudes) {
  const std::vector<double> tiny = {-1000.0, -1000.0};
  EXPECT_NEAR(log_sum_exp(tiny), -1000.0 + std::log(2.0), 1e-12);
  const std::vector<double> one = {-3.5};
  EXPECT_EQ(log_sum_exp(one), -3.5);
}

TEST(CheckPartition, RejectsBrokenPartitions) {
  SemanticPartition p;
  p.clusters.resize(2);
  p.clusters[0].member_indices = {0, 1};
  p.clusters[1].member_indices = {1};
  p.clusters[1].representative_index = 1;
  EXPECT_THROW(check_partition(p, 2), Error);
  p.clusters[1].member_indices = {};
  EXPECT_THROW(check_partition(p, 2), Error);
  p.clusters.pop_back();
  EXPECT_NO_THROW(check_partition(p, 2));
  EXPECT_THROW(check_partition(p, 3), Error);
}

}  // namespace
}  // namespace semtent
