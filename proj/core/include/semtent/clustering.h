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

#ifndef SEMTENT_CLUSTERING_H_
#define SEMTENT_CLUSTERING_H_

#include <cstddef>
#include <span>
#include <vector>

#include "semtent/entailment.h"
#include "semtent/records.h"

namespace semtent {

struct Cluster {
  std::vector<std::size_t> member_indices;  // into the sample list, ascending
  std::size_t representative_index = 0;     // first member by processing order
  // log of the summed member likelihoods.
  double log_prob_raw = 0.0;
  double log_prob_normalised = 0.0;

  double log_prob(LikelihoodMode mode) const {
    return mode == LikelihoodMode::kRaw ? log_prob_raw : log_prob_normalised;
  }
};

struct SemanticPartition {
  std::vector<Cluster> clusters;  // in creation order
};

// Sequential bidirectional-entailment clustering. Sample 0 seeds the first
// cluster; each later sample is compared against the representative of every
// existing cluster in creation order, joins the first one that is equivalent,
// and otherwise opens a new cluster. With a non-transitive predicate the
// result depends on sample order; input order is used.
//
// Predicate exceptions propagate (the record cannot be scored).
SemanticPartition cluster_generations(std::span<const Generation> samples,
                                      const EquivalencePredicate& equiv);

// Convenience overload binding an NLI backend to the record's question.
SemanticPartition cluster_generations(std::string_view context, std::string_view question,
                                      std::span<const Generation> samples,
                                      NliBackend& backend, EquivalenceCache* cache);

// log sum_{s in cluster} exp(loglik(s)), computed stably.
double cluster_log_prob(const Cluster& cluster, std::span<const Generation> samples,
                        LikelihoodMode mode);

double log_sum_exp(std::span<const double> values);

// Throws Error when clusters are empty, overlap, or fail to cover 0..m-1.
void check_partition(const SemanticPartition& partition, std::size_t m);

}  // namespace semtent

#endif  // SEMTENT_CLUSTERING_H_
