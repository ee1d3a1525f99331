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

#include "semtent/estimators.h"

#include <cmath>
#include <vector>

#include "semtent/errors.h"

namespace semtent {
namespace {

double mean_negative(std::span<const Generation> samples, LikelihoodMode mode) {
  if (samples.empty()) throw DataError("entropy estimate needs at least one sample");
  double sum = 0.0;
  for (const auto& g : samples) sum += log_likelihood(g, mode);
  return -sum / static_cast<double>(samples.size());
}

std::string strip(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

double predictive_entropy_mc(std::span<const Generation> samples) {
  return mean_negative(samples, LikelihoodMode::kRaw);
}

double length_normalised_entropy_mc(std::span<const Generation> samples) {
  return mean_negative(samples, LikelihoodMode::kLengthNormalised);
}

double semantic_entropy_rao(const SemanticPartition& partition, LikelihoodMode mode) {
  if (partition.clusters.empty()) throw DataError("semantic entropy of an empty partition");
  double sum = 0.0;
  for (const auto& c : partition.clusters) sum += c.log_prob(mode);
  return -sum / static_cast<double>(partition.clusters.size());
}

double discrete_entropy_from_log_masses(std::span<const double> log_masses) {
  if (log_masses.empty()) throw DataError("entropy of an empty distribution");
  const double log_total = log_sum_exp(log_masses);
  double h = 0.0;
  for (double lm : log_masses) {
    const double log_q = lm - log_total;
    const double q = std::exp(log_q);
    if (q > 0.0) h -= q * log_q;
  }
  // Rounding can leave -0.0 or a tiny negative for a single class.
  return h > 0.0 ? h : 0.0;
}

double semantic_entropy_discrete(const SemanticPartition& partition, LikelihoodMode mode) {
  std::vector<double> log_masses;
  log_masses.reserve(partition.clusters.size());
  for (const auto& c : partition.clusters) log_masses.push_back(c.log_prob(mode));
  return discrete_entropy_from_log_masses(log_masses);
}

int num_semantic_clusters(const SemanticPartition& partition) {
  return static_cast<int>(partition.clusters.size());
}

double margin_probability(const Generation& top1, const Generation& top2,
                          LikelihoodMode mode) {
  return std::exp(log_likelihood(top1, mode)) - std::exp(log_likelihood(top2, mode));
}

std::string build_p_true_prompt(std::string_view question,
                                std::span<const std::string> brainstormed,
                                std::string_view proposed, std::string_view few_shot_block) {
  if (brainstormed.empty()) throw DataError("p(True) prompt needs at least one brainstormed answer");
  std::string prompt(few_shot_block);
  if (!prompt.empty() && prompt.back() != '\n') prompt.push_back('\n');
  prompt += "Question: ";
  prompt += question;
  prompt += "\nHere are some brainstormed ideas: ";
  for (std::size_t i = 0; i < brainstormed.size(); ++i) {
    if (i > 0) prompt.push_back('\n');
    prompt += brainstormed[i];
  }
  prompt += "\nPossible Answer: ";
  prompt += proposed;
  prompt +=
      "\nIs the possible answer:\n"
      "(A) True\n"
      "(B) False\n"
      "The possible answer is:";
  return prompt;
}

PTrue p_true_from_logprobs(const std::map<std::string, double>& next_token_candidates) {
  std::optional<double> lp_true, lp_false;
  for (const auto& [token, lp] : next_token_candidates) {
    const std::string key = strip(token);
    if (key == "True" && !lp_true) lp_true = lp;
    if (key == "False" && !lp_false) lp_false = lp;
  }
  if (!lp_true) throw UndefinedMeasureError("no \"True\" candidate among next-token log-probs");
  if (!(*lp_true <= 0.0) || (lp_false && !(*lp_false <= 0.0))) {
    throw DataError("next-token log-probs must be ≤ 0");
  }
  PTrue out;
  out.raw = std::exp(*lp_true);
  if (lp_false) {
    const double pf = std::exp(*lp_false);
    if (out.raw + pf > 0.0) out.renormalised = out.raw / (out.raw + pf);
  }
  return out;
}

}  // namespace semtent
