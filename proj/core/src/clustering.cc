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

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "semtent/errors.h"

namespace semtent {

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double max = *std::max_element(values.begin(), values.end());
  if (std::isinf(max)) return max;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - max);
  return max + std::log(sum);
}

double cluster_log_prob(const Cluster& cluster, std::span<const Generation> samples,
                        LikelihoodMode mode) {
  if (cluster.member_indices.empty()) throw Error("cluster_log_prob: empty cluster");
  std::vector<double> lls;
  lls.reserve(cluster.member_indices.size());
  for (std::size_t i : cluster.member_indices) lls.push_back(log_likelihood(samples[i], mode));
  return log_sum_exp(lls);
}

SemanticPartition cluster_generations(std::span<const Generation> samples,
                                      const EquivalencePredicate& equiv) {
  if (samples.empty()) throw DataError("cluster_generations: at least one sample required");
  SemanticPartition partition;
  partition.clusters.push_back(Cluster{{0}, 0, 0.0, 0.0});

  for (std::size_t m = 1; m < samples.size(); ++m) {
    bool merged = false;
    for (Cluster& c : partition.clusters) {
      if (equiv(samples[c.representative_index].text, samples[m].text)) {
        c.member_indices.push_back(m);
        merged = true;
        break;
      }
    }
    if (!merged) partition.clusters.push_back(Cluster{{m}, m, 0.0, 0.0});
  }

  for (Cluster& c : partition.clusters) {
    c.log_prob_raw = cluster_log_prob(c, samples, LikelihoodMode::kRaw);
    c.log_prob_normalised = cluster_log_prob(c, samples, LikelihoodMode::kLengthNormalised);
  }
  return partition;
}

SemanticPartition cluster_generations(std::string_view context, std::string_view question,
                                      std::span<const Generation> samples,
                                      NliBackend& backend, EquivalenceCache* cache) {
  return cluster_generations(
      samples, entailment_predicate(backend, cache, std::string(context), std::string(question)));
}

void check_partition(const SemanticPartition& partition, std::size_t m) {
  std::vector<int> seen(m, 0);
  for (const Cluster& c : partition.clusters) {
    if (c.member_indices.empty()) throw Error("partition has an empty cluster");
    if (c.member_indices.front() != c.representative_index) {
      throw Error("cluster representative is not its first member");
    }
    for (std::size_t i : c.member_indices) {
      if (i >= m) throw Error("cluster member index out of range");
      if (seen[i]++) throw Error("sample " + std::to_string(i) + " is in two clusters");
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (!seen[i]) throw Error("sample " + std::to_string(i) + " is in no cluster");
  }
}

}  // namespace semtent
