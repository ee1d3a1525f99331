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

#include "semtent/evalkit.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "json.hpp"
#include "semtent/errors.h"
#include "semtent/estimators.h"

namespace semtent {
namespace {

using nlohmann::json;

// Order-independent mean: sums the values in sorted order.
std::optional<double> stable_mean(std::vector<double> values) {
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

json optional_number(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

std::string csv_field(const std::optional<double>& v) {
  return v ? format_number(*v) : std::string();
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::string_view measure_name(Measure m) {
  switch (m) {
    case Measure::kSemanticEntropy:
      return "semantic_entropy";
    case Measure::kSemanticEntropyDiscrete:
      return "semantic_entropy_discrete";
    case Measure::kPredictiveEntropy:
      return "predictive_entropy";
    case Measure::kLengthNormalisedEntropy:
      return "length_normalised_entropy";
    case Measure::kLexicalSimilarity:
      return "lexical_similarity";
    case Measure::kNumSemanticClusters:
      return "num_semantic_clusters";
    case Measure::kMarginProbability:
      return "margin_probability";
    case Measure::kPTrue:
      return "p_true";
  }
  return "";
}

std::optional<Measure> parse_measure(std::string_view name) {
  for (Measure m : kAllMeasures) {
    if (measure_name(m) == name) return m;
  }
  return std::nullopt;
}

bool is_confidence(Measure m) {
  return m == Measure::kMarginProbability || m == Measure::kPTrue ||
         m == Measure::kLexicalSimilarity;
}

std::optional<double> measure_value(const UncertaintyScores& s, Measure m) {
  switch (m) {
    case Measure::kSemanticEntropy:
      return s.semantic_entropy_rao;
    case Measure::kSemanticEntropyDiscrete:
      return s.semantic_entropy_discrete;
    case Measure::kPredictiveEntropy:
      return s.predictive_entropy;
    case Measure::kLengthNormalisedEntropy:
      return s.length_normalised_entropy;
    case Measure::kLexicalSimilarity:
      return s.lexical_similarity;
    case Measure::kNumSemanticClusters:
      return static_cast<double>(s.num_semantic_clusters);
    case Measure::kMarginProbability:
      return s.margin_probability;
    case Measure::kPTrue:
      return s.p_true;
  }
  return std::nullopt;
}

std::optional<double> uncertainty_value(const UncertaintyScores& s, Measure m) {
  auto v = measure_value(s, m);
  if (v && is_confidence(m)) return -*v;
  return v;
}

double auroc(std::span<const double> uncertainty, const std::vector<bool>& correct) {
  if (uncertainty.size() != correct.size()) {
    throw DataError("auroc: score and label lengths differ");
  }
  for (double u : uncertainty) {
    if (std::isnan(u)) throw DataError("auroc: NaN uncertainty score");
  }
  std::vector<std::size_t> order(uncertainty.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return uncertainty[a] < uncertainty[b]; });

  // Twice the Mann-Whitney count, kept integral so the result does not depend
  // on input order.
  std::uint64_t twice_wins = 0;
  std::uint64_t n_correct = 0, n_incorrect = 0;
  std::uint64_t correct_below = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::uint64_t group_correct = 0, group_incorrect = 0;
    while (j < order.size() && uncertainty[order[j]] == uncertainty[order[i]]) {
      (correct[order[j]] ? group_correct : group_incorrect)++;
      ++j;
    }
    twice_wins += group_incorrect * (2 * correct_below + group_correct);
    correct_below += group_correct;
    n_correct += group_correct;
    n_incorrect += group_incorrect;
    i = j;
  }
  if (n_correct == 0 || n_incorrect == 0) {
    throw UndefinedMeasureError("AUROC is undefined unless both correct and incorrect labels occur");
  }
  return static_cast<double>(twice_wins) /
         (2.0 * static_cast<double>(n_correct) * static_cast<double>(n_incorrect));
}

ScoredRecord score_record(const QuestionRecord& record, const PartitionFn& partition_fn,
                          const ScoringOptions& options) {
  ScoredRecord out;
  out.record_id = record.id;
  const std::span<const Generation> samples = record.samples;

  if (options.label_correctness) {
    if (record.most_likely_answer) {
      out.correct = is_correct(record.most_likely_answer->text, record.reference_answers,
                               options.criterion);
    } else {
      out.flags.push_back("correct: no most_likely_answer");
    }
  }

  SemanticPartition partition;
  try {
    partition = partition_fn(record);
  } catch (const TransportError& e) {
    out.failure = std::string("clustering failed: ") + e.what();
    return out;
  }
  check_partition(partition, samples.size());

  UncertaintyScores& s = out.scores;
  s.mode = options.mode;
  s.semantic_entropy_rao = semantic_entropy_rao(partition, options.mode);
  s.semantic_entropy_discrete = semantic_entropy_discrete(partition, options.mode);
  s.predictive_entropy = predictive_entropy_mc(samples);
  s.length_normalised_entropy = length_normalised_entropy_mc(samples);
  s.num_semantic_clusters = num_semantic_clusters(partition);

  std::vector<std::string> answers;
  answers.reserve(samples.size());
  for (const auto& g : samples) answers.push_back(g.text);
  if (answers.size() >= 2) {
    s.lexical_similarity = lexical_similarity(answers);
  } else {
    out.flags.push_back("lexical_similarity: fewer than two samples");
  }

  if (record.most_likely_answer && record.second_most_likely_answer) {
    s.margin_probability = margin_probability(*record.most_likely_answer,
                                              *record.second_most_likely_answer, options.mode);
  } else {
    out.flags.push_back("margin_probability: missing most-likely answers");
  }

  if (options.p_true) {
    if (!record.most_likely_answer) {
      out.flags.push_back("p_true: no most_likely_answer to propose");
    } else {
      try {
        const std::string prompt = build_p_true_prompt(
            record.question, answers, record.most_likely_answer->text, options.p_true_few_shot);
        const PTrue pt = p_true_from_logprobs(options.p_true(prompt));
        s.p_true = pt.raw;
        s.p_true_renormalised = pt.renormalised;
      } catch (const UndefinedMeasureError& e) {
        out.flags.push_back(std::string("p_true: ") + e.what());
      } catch (const TransportError& e) {
        out.flags.push_back(std::string("p_true: ") + e.what());
      }
    }
  }

  out.partition_summary.num_clusters = s.num_semantic_clusters;
  for (const auto& c : partition.clusters) {
    out.partition_summary.cluster_sizes.push_back(static_cast<int>(c.member_indices.size()));
  }
  return out;
}

std::optional<double> EvalReport::auroc(Measure m) const {
  for (const auto& r : per_measure) {
    if (r.measure == m) return r.auroc;
  }
  return std::nullopt;
}

EvalReport evaluate(std::vector<ScoredRecord> scored, std::span<const Measure> measures) {
  std::sort(scored.begin(), scored.end(),
            [](const ScoredRecord& a, const ScoredRecord& b) { return a.record_id < b.record_id; });

  EvalReport report;
  report.n_questions = scored.size();
  std::vector<const ScoredRecord*> usable;
  for (const auto& s : scored) {
    if (s.failure) {
      ++report.n_failed;
    } else {
      usable.push_back(&s);
    }
  }
  if (usable.empty()) throw DataError("no usable scored records");

  std::size_t n_correct = 0;
  std::vector<double> diversities, clusters_correct, clusters_incorrect;
  for (const ScoredRecord* s : usable) {
    if (s->scores.lexical_similarity) diversities.push_back(1.0 - *s->scores.lexical_similarity);
    if (!s->correct) continue;
    ++report.n_labelled;
    const double k = static_cast<double>(s->scores.num_semantic_clusters);
    if (*s->correct) {
      ++n_correct;
      clusters_correct.push_back(k);
    } else {
      clusters_incorrect.push_back(k);
    }
  }
  if (report.n_labelled > 0) {
    report.accuracy = static_cast<double>(n_correct) / static_cast<double>(report.n_labelled);
  }
  report.mean_diversity = stable_mean(std::move(diversities));
  report.mean_clusters_correct = stable_mean(std::move(clusters_correct));
  report.mean_clusters_incorrect = stable_mean(std::move(clusters_incorrect));

  for (Measure m : measures) {
    MeasureResult result{m, std::nullopt, 0, 0, {}};
    std::vector<double> values;
    std::vector<bool> labels;
    for (const ScoredRecord* s : usable) {
      if (!s->correct) continue;
      auto u = uncertainty_value(s->scores, m);
      if (!u) {
        ++result.n_excluded;
        continue;
      }
      values.push_back(*u);
      labels.push_back(*s->correct);
    }
    result.n_used = values.size();
    if (report.n_labelled == 0) {
      result.note = "no correctness labels";
    } else {
      try {
        result.auroc = semtent::auroc(values, labels);
      } catch (const UndefinedMeasureError& e) {
        result.note = e.what();
      }
    }
    report.per_measure.push_back(std::move(result));
  }
  report.per_question = std::move(scored);
  return report;
}

EvalReport label_and_score(std::span<const QuestionRecord> records,
                           const PartitionFn& partition_fn,
                           std::span<const Measure> measures, const ScoringOptions& options) {
  if (options.label_correctness) {
    for (const auto& r : records) {
      if (!r.most_likely_answer) {
        throw DataError("record '" + r.id + "' has no most_likely_answer to label", r.line);
      }
    }
  }
  std::vector<ScoredRecord> scored;
  scored.reserve(records.size());
  for (const auto& r : records) scored.push_back(score_record(r, partition_fn, options));
  return evaluate(std::move(scored), measures);
}

std::vector<AblationRow> aggregate_ablation(
    std::span<const std::pair<std::string, EvalReport>> reports) {
  std::vector<AblationRow> rows;
  rows.reserve(reports.size());
  for (const auto& [key, report] : reports) {
    AblationRow row;
    row.group_key = key;
    for (const auto& m : report.per_measure) row.auroc_by_measure.emplace_back(m.measure, m.auroc);
    row.accuracy = report.accuracy;
    row.diversity = report.mean_diversity;
    row.mean_clusters_correct = report.mean_clusters_correct;
    row.mean_clusters_incorrect = report.mean_clusters_incorrect;
    row.n_questions = report.n_questions;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_number(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

std::string report_to_json(const EvalReport& report) {
  json measures = json::array();
  json per_measure_auroc = json::object();
  for (const auto& m : report.per_measure) {
    json entry = {{"name", measure_name(m.measure)},
                  {"auroc", optional_number(m.auroc)},
                  {"n_used", m.n_used},
                  {"n_excluded", m.n_excluded}};
    if (!m.note.empty()) entry["note"] = m.note;
    measures.push_back(std::move(entry));
    per_measure_auroc[std::string(measure_name(m.measure))] = optional_number(m.auroc);
  }
  json obj = {{"schema", kSchemaVersion},
              {"n_questions", report.n_questions},
              {"n_labelled", report.n_labelled},
              {"n_failed", report.n_failed},
              {"accuracy", optional_number(report.accuracy)},
              {"mean_diversity", optional_number(report.mean_diversity)},
              {"cluster_counts",
               {{"mean_correct", optional_number(report.mean_clusters_correct)},
                {"mean_incorrect", optional_number(report.mean_clusters_incorrect)}}},
              {"per_measure_auroc", std::move(per_measure_auroc)},
              {"measures", std::move(measures)}};
  return obj.dump(2) + "\n";
}

std::string ablation_to_json(const std::vector<AblationRow>& rows,
                             std::span<const Measure> measures) {
  json out = json::array();
  for (const auto& row : rows) {
    json aurocs = json::object();
    for (Measure m : measures) {
      std::optional<double> v;
      for (const auto& [mm, a] : row.auroc_by_measure) {
        if (mm == m) v = a;
      }
      aurocs[std::string(measure_name(m))] = optional_number(v);
    }
    out.push_back({{"group_key", row.group_key},
                   {"n_questions", row.n_questions},
                   {"accuracy", optional_number(row.accuracy)},
                   {"diversity", optional_number(row.diversity)},
                   {"mean_clusters_correct", optional_number(row.mean_clusters_correct)},
                   {"mean_clusters_incorrect", optional_number(row.mean_clusters_incorrect)},
                   {"auroc", std::move(aurocs)}});
  }
  return json{{"schema", kSchemaVersion}, {"rows", std::move(out)}}.dump(2) + "\n";
}

std::string ablation_csv(const std::vector<AblationRow>& rows,
                         std::span<const Measure> measures) {
  std::string out = "group,n_questions,accuracy,diversity,mean_clusters_correct,mean_clusters_incorrect";
  for (Measure m : measures) out += ",auroc_" + std::string(measure_name(m));
  out += '\n';
  for (const auto& row : rows) {
    out += csv_escape(row.group_key) + "," + std::to_string(row.n_questions) + "," +
           csv_field(row.accuracy) + "," + csv_field(row.diversity) + "," +
           csv_field(row.mean_clusters_correct) + "," + csv_field(row.mean_clusters_incorrect);
    for (Measure m : measures) {
      std::optional<double> v;
      for (const auto& [mm, a] : row.auroc_by_measure) {
        if (mm == m) v = a;
      }
      out += "," + csv_field(v);
    }
    out += '\n';
  }
  return out;
}

std::string details_csv(const EvalReport& report, std::span<const Measure> measures) {
  std::string out = "record_id,correct,failed,num_clusters";
  for (Measure m : measures) out += "," + std::string(measure_name(m));
  out += '\n';
  for (const auto& s : report.per_question) {
    out += csv_escape(s.record_id) + ",";
    if (s.correct) out += *s.correct ? "1" : "0";
    out += s.failure ? ",1," : ",0,";
    if (!s.failure) {
      out += std::to_string(s.partition_summary.num_clusters);
    }
    for (Measure m : measures) {
      out += ",";
      if (!s.failure) out += csv_field(measure_value(s.scores, m));
    }
    out += '\n';
  }
  return out;
}

}  // namespace semtent
