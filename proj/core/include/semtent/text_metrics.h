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

// Lexical overlap metrics used for correctness labels and for the
// lexical-similarity / diversity measures.
//
// All metrics share one tokenizer: ASCII lowercase, every byte outside
// [a-z0-9'] becomes a separator, split on runs of separators. This may differ
// from other Rouge packages on punctuation-heavy input.

#ifndef SEMTENT_TEXT_METRICS_H_
#define SEMTENT_TEXT_METRICS_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace semtent {

std::vector<std::string> tokenize(std::string_view text);

// Tokens joined by single spaces; the normal form used for exact match.
std::string normalize_answer(std::string_view text);

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

// Sentence-level Rouge-L F1. 0 when either side has no tokens.
double rouge_l(std::string_view candidate, std::string_view reference);
double rouge_l_tokens(std::span<const std::string> candidate,
                      std::span<const std::string> reference);

// Unigram F1 with clipped counts.
double rouge_1(std::string_view candidate, std::string_view reference);

enum class CriterionKind { kRougeL, kRouge1, kExactMatch };

std::string_view to_string(CriterionKind kind);
std::optional<CriterionKind> parse_criterion_kind(std::string_view name);

struct AccuracyCriterion {
  CriterionKind kind = CriterionKind::kRougeL;
  double threshold = 0.3;  // strict: metric > threshold; unused for exact match
};

// Throws ConfigError unless threshold lies in (0, 1].
void validate_criterion(const AccuracyCriterion& crit);

bool is_correct(std::string_view answer, std::span<const std::string> references,
                const AccuracyCriterion& crit);

// Mean Rouge-L over the |A|(|A|-1)/2 unordered distinct pairs.
// Throws UndefinedMeasureError for fewer than two answers.
double lexical_similarity(std::span<const std::string> answers);

// 1 - lexical_similarity(answers).
double diversity(std::span<const std::string> answers);

}  // namespace semtent

#endif  // SEMTENT_TEXT_METRICS_H_
