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

// Data model and JSONL ingestion for question records, scored records and
// manual correctness labels.
//
// Every line of a record file is one JSON object tagged with
// "schema": "semtent/1". Log-probabilities are natural-log values (nats) and
// are stored exactly as the generator reported them; whether they include an
// end-of-sequence token is up to the generator.

#ifndef SEMTENT_RECORDS_H_
#define SEMTENT_RECORDS_H_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace semtent {

inline constexpr std::string_view kSchemaVersion = "semtent/1";

enum class SamplingMethod { kMultinomial, kBeamMultinomial };

std::string_view to_string(SamplingMethod method);
std::optional<SamplingMethod> parse_sampling_method(std::string_view name);

struct SamplingMeta {
  double temperature = 1.0;
  SamplingMethod method = SamplingMethod::kMultinomial;
  std::optional<int> num_beams;

  bool operator==(const SamplingMeta&) const = default;
};

// One sampled answer with its per-token log-probabilities.
struct Generation {
  std::string text;
  std::vector<std::string> tokens;
  std::vector<double> token_logprobs;
  SamplingMeta sampling_meta;

  bool operator==(const Generation&) const = default;
};

struct PriorTurn {
  std::string question;
  std::string answer;

  bool operator==(const PriorTurn&) const = default;
};

struct QuestionRecord {
  std::string id;
  std::string dataset;
  std::string context;  // empty for closed-book questions
  std::string question;
  std::vector<std::string> reference_answers;
  // Earlier conversation turns (open-book conversational QA).
  std::vector<PriorTurn> prior_turns;
  std::optional<Generation> most_likely_answer;
  // Runner-up decode; only the margin baseline uses it.
  std::optional<Generation> second_most_likely_answer;
  std::vector<Generation> samples;

  // Source line for diagnostics; not serialized.
  std::size_t line = 0;

  bool operator==(const QuestionRecord& other) const;
};

enum class LikelihoodMode { kRaw, kLengthNormalised };

std::string_view to_string(LikelihoodMode mode);
std::optional<LikelihoodMode> parse_likelihood_mode(std::string_view name);

// All per-question measures. Entropies are in nats (length-normalised entropy
// in nats per token). Optional members are absent when the measure could not
// be computed for the record; the reason is in ScoredRecord::flags.
struct UncertaintyScores {
  double semantic_entropy_rao = 0.0;
  double semantic_entropy_discrete = 0.0;
  double predictive_entropy = 0.0;
  double length_normalised_entropy = 0.0;
  std::optional<double> lexical_similarity;
  int num_semantic_clusters = 0;
  std::optional<double> margin_probability;
  std::optional<double> p_true;
  std::optional<double> p_true_renormalised;
  LikelihoodMode mode = LikelihoodMode::kRaw;

  bool operator==(const UncertaintyScores&) const = default;
};

struct PartitionSummary {
  int num_clusters = 0;
  std::vector<int> cluster_sizes;

  bool operator==(const PartitionSummary&) const = default;
};

struct ScoredRecord {
  std::string record_id;
  UncertaintyScores scores;
  PartitionSummary partition_summary;
  std::optional<bool> correct;
  // Per-measure skip reasons, e.g. "margin_probability: ...".
  std::vector<std::string> flags;
  // Set when scoring the whole record failed (backend error); scores and
  // partition are then meaningless and the record is excluded downstream.
  std::optional<std::string> failure;

  bool operator==(const ScoredRecord&) const = default;
};

// --- Generation helpers ---------------------------------------------------

// Throws ValidationError naming the offending field.
void validate_generation(const Generation& g, std::string_view field = "generation",
                         std::size_t line = 0);

// Sum of token log-probabilities (log p(s | x)).
double sequence_log_likelihood(const Generation& g);

// Mean token log-probability.
double length_normalised_log_likelihood(const Generation& g);

double log_likelihood(const Generation& g, LikelihoodMode mode);

// --- Records ----------------------------------------------------------------

struct LoadOptions {
  // Question files for `generate` carry no samples yet.
  bool require_samples = true;
};

void validate_record(const QuestionRecord& record, const LoadOptions& options = {});

std::vector<QuestionRecord> parse_records(std::istream& in,
                                          const LoadOptions& options = {});
std::vector<QuestionRecord> load_records(const std::filesystem::path& path,
                                         const LoadOptions& options = {});

// One JSON object, no trailing newline.
std::string serialize_record(const QuestionRecord& record);

// --- Scored records and labels ----------------------------------------------

void validate_scored(const ScoredRecord& scored, std::size_t line = 0);
std::string serialize_scored(const ScoredRecord& scored);
std::vector<ScoredRecord> parse_scored(std::istream& in);
std::vector<ScoredRecord> load_scored(const std::filesystem::path& path);

// Manual correctness labels: {"record_id": "...", "correct": true} per line.
std::map<std::string, bool> load_labels(const std::filesystem::path& path);

// Writes `lines` joined by '\n' (with a trailing newline when non-empty) to a
// temporary sibling and renames it over `path`.
void write_lines_atomically(const std::filesystem::path& path,
                            const std::vector<std::string>& lines);
void write_file_atomically(const std::filesystem::path& path,
                           std::string_view contents);

}  // namespace semtent

#endif  // SEMTENT_RECORDS_H_
