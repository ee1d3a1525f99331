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

// Per-question uncertainty measures. Natural log throughout.

#ifndef SEMTENT_ESTIMATORS_H_
#define SEMTENT_ESTIMATORS_H_

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "semtent/clustering.h"
#include "semtent/records.h"

namespace semtent {

// Monte Carlo predictive entropy: -(1/M) sum_m log p(s_m | x).
double predictive_entropy_mc(std::span<const Generation> samples);

// Same with per-token mean log-probabilities.
double length_normalised_entropy_mc(std::span<const Generation> samples);

// Cluster-averaged estimator: -(1/|C|) sum_i log p(C_i | x). Cluster masses
// are used as-is, without renormalisation.
double semantic_entropy_rao(const SemanticPartition& partition, LikelihoodMode mode);

// Entropy of the cluster masses renormalised to sum to one over the sample
// set: -sum_c q_c ln q_c.
double semantic_entropy_discrete(const SemanticPartition& partition, LikelihoodMode mode);

// Entropy of a categorical distribution given unnormalised log-masses.
double discrete_entropy_from_log_masses(std::span<const double> log_masses);

int num_semantic_clusters(const SemanticPartition& partition);

// p(top1) - p(top2). A confidence: higher means more certain.
double margin_probability(const Generation& top1, const Generation& top2,
                          LikelihoodMode mode);

// The "Question / brainstormed ideas / Possible Answer / (A) True (B) False"
// self-evaluation prompt, prefixed by `few_shot_block`.
std::string build_p_true_prompt(std::string_view question,
                                std::span<const std::string> brainstormed,
                                std::string_view proposed, std::string_view few_shot_block);

struct PTrue {
  double raw = 0.0;                    // exp(logprob("True"))
  std::optional<double> renormalised;  // over {True, False}, when both present
};

// Candidate keys are matched after stripping surrounding whitespace.
// Throws UndefinedMeasureError when no "True" candidate exists.
PTrue p_true_from_logprobs(const std::map<std::string, double>& next_token_candidates);

}  // namespace semtent

#endif  // SEMTENT_ESTIMATORS_H_
