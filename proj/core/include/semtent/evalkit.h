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

// Correctness labelling, AUROC and ablation tables.
//
// AUROC convention: higher uncertainty should mean "predicted incorrect".
// auroc() is the fraction of (incorrect, correct) pairs in which the incorrect
// answer has the strictly higher uncertainty, ties counting one half. Measures
// that are confidences (margin probability, p(True), lexical similarity) are
// negated before entering it.

#ifndef SEMTENT_EVALKIT_H_
#define SEMTENT_EVALKIT_H_

#include <array>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "semtent/clustering.h"
#include "semtent/records.h"
#include "semtent/text_metrics.h"

namespace semtent {

enum class Measure {
  kSemanticEntropy,  // cluster-averaged estimator, the headline measure
  kSemanticEntropyDiscrete,
  kPredictiveEntropy,
  kLengthNormalisedEntropy,
  kLexicalSimilarity,
  kNumSemanticClusters,
  kMarginProbability,
  kPTrue,
};

inline constexpr std::array<Measure, 8> kAllMeasures = {
    Measure::kSemanticEntropy,        Measure::kSemanticEntropyDiscrete,
    Measure::kPredictiveEntropy,      Measure::kLengthNormalisedEntropy,
    Measure::kLexicalSimilarity,      Measure::kNumSemanticClusters,
    Measure::kMarginProbability,      Measure::kPTrue,
};

std::string_view measure_name(Measure m);
std::optional<Measure> parse_measure(std::string_view name);

// True for measures where a larger value means more confidence.
bool is_confidence(Measure m);

// The stored value, if the record has one.
std::optional<double> measure_value(const UncertaintyScores& scores, Measure m);

// The value oriented as an uncertainty (confidences negated).
std::optional<double> uncertainty_value(const UncertaintyScores& scores, Measure m);

// Throws UndefinedMeasureError unless both classes are present, and
// DataError on length mismatch.
double auroc(std::span<const double> uncertainty, const std::vector<bool>& correct);

using PartitionFn = std::function<SemanticPartition(const QuestionRecord&)>;
// Maps a prompt to next-token log-probs for the "True"/"False" candidates.
using NextTokenFn = std::function<std::map<std::string, double>(const std::string& prompt)>;

struct ScoringOptions {
  LikelihoodMode mode = LikelihoodMode::kRaw;
  AccuracyCriterion criterion;
  bool label_correctness = true;
  // Empty: p(True) is not computed.
  NextTokenFn p_true;
  std::string p_true_few_shot;
};

// Clusters and scores one record. Transport failures from the partition
// function mark the record failed instead of throwing; measures that cannot be
// computed are skipped and flagged.
ScoredRecord score_record(const QuestionRecord& record, const PartitionFn& partition_fn,
                          const ScoringOptions& options);

struct MeasureResult {
  Measure measure;
  std::optional<double> auroc;
  std::size_t n_used = 0;
  std::size_t n_excluded = 0;  // labelled records lacking this measure
  std::string note;            // why auroc is absent
};

struct AblationRow {
  std::string group_key;
  std::vector<std::pair<Measure, std::optional<double>>> auroc_by_measure;
  std::optional<double> accuracy;
  std::optional<double> diversity;
  std::optional<double> mean_clusters_correct;
  std::optional<double> mean_clusters_incorrect;
  std::size_t n_questions = 0;
};

struct EvalReport {
  std::vector<MeasureResult> per_measure;  // in requested order
  std::optional<double> accuracy;
  std::size_t n_questions = 0;  // records seen, including failed ones
  std::size_t n_labelled = 0;
  std::size_t n_failed = 0;
  std::optional<double> mean_diversity;
  std::optional<double> mean_clusters_correct;
  std::optional<double> mean_clusters_incorrect;
  std::vector<AblationRow> ablation_rows;
  std::vector<ScoredRecord> per_question;  // sorted by record id

  std::optional<double> auroc(Measure m) const;
};

// Aggregates already-scored records. Report numbers do not depend on input
// order. Throws DataError when no record is usable.
EvalReport evaluate(std::vector<ScoredRecord> scored, std::span<const Measure> measures);

EvalReport label_and_score(std::span<const QuestionRecord> records,
                           const PartitionFn& partition_fn,
                           std::span<const Measure> measures, const ScoringOptions& options);

std::vector<AblationRow> aggregate_ablation(
    std::span<const std::pair<std::string, EvalReport>> reports);

// Output formats. Numbers use shortest round-trip formatting so repeated runs
// are byte-identical.
std::string report_to_json(const EvalReport& report);
std::string ablation_to_json(const std::vector<AblationRow>& rows,
                             std::span<const Measure> measures);
std::string ablation_csv(const std::vector<AblationRow>& rows,
                         std::span<const Measure> measures);
std::string details_csv(const EvalReport& report, std::span<const Measure> measures);

std::string format_number(double value);

}  // namespace semtent

#endif  // SEMTENT_EVALKIT_H_
