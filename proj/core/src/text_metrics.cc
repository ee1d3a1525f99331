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

#include "semtent/text_metrics.h"

#include <algorithm>
#include <map>

#include "semtent/errors.h"

namespace semtent {
namespace {

bool is_token_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '\'';
}

char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

double f1(double overlap, std::size_t cand_len, std::size_t ref_len) {
  if (cand_len == 0 || ref_len == 0 || overlap == 0.0) return 0.0;
  const double p = overlap / static_cast<double>(cand_len);
  const double r = overlap / static_cast<double>(ref_len);
  return 2.0 * p * r / (p + r);
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char raw : text) {
    const char c = ascii_lower(raw);
    if (is_token_char(c)) {
      current.push_back(c);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::string normalize_answer(std::string_view text) {
  std::string out;
  for (const auto& tok : tokenize(text)) {
    if (!out.empty()) out.push_back(' ');
    out += tok;
  }
  return out;
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.size() < b.size()) std::swap(a, b);
  // Two rows over the shorter sequence.
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l_tokens(std::span<const std::string> candidate,
                      std::span<const std::string> reference) {
  if (candidate.empty() || reference.empty()) return 0.0;
  const auto lcs = static_cast<double>(lcs_length(candidate, reference));
  return f1(lcs, candidate.size(), reference.size());
}

double rouge_l(std::string_view candidate, std::string_view reference) {
  const auto c = tokenize(candidate);
  const auto r = tokenize(reference);
  return rouge_l_tokens(c, r);
}

double rouge_1(std::string_view candidate, std::string_view reference) {
  const auto c = tokenize(candidate);
  const auto r = tokenize(reference);
  if (c.empty() || r.empty()) return 0.0;
  std::map<std::string_view, int> ref_counts;
  for (const auto& t : r) ++ref_counts[t];
  std::size_t overlap = 0;
  for (const auto& t : c) {
    auto it = ref_counts.find(t);
    if (it != ref_counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  return f1(static_cast<double>(overlap), c.size(), r.size());
}

std::string_view to_string(CriterionKind kind) {
  switch (kind) {
    case CriterionKind::kRougeL:
      return "rouge_l";
    case CriterionKind::kRouge1:
      return "rouge_1";
    case CriterionKind::kExactMatch:
      return "exact_match";
  }
  return "rouge_l";
}

std::optional<CriterionKind> parse_criterion_kind(std::string_view name) {
  if (name == "rouge_l") return CriterionKind::kRougeL;
  if (name == "rouge_1") return CriterionKind::kRouge1;
  if (name == "exact_match") return CriterionKind::kExactMatch;
  return std::nullopt;
}

void validate_criterion(const AccuracyCriterion& crit) {
  if (crit.kind == CriterionKind::kExactMatch) return;
  if (!(crit.threshold > 0.0 && crit.threshold <= 1.0)) {
    throw ConfigError("accuracy threshold must lie in (0, 1]");
  }
}

bool is_correct(std::string_view answer, std::span<const std::string> references,
                const AccuracyCriterion& crit) {
  if (references.empty()) throw DataError("is_correct: references must be non-empty");
  if (crit.kind == CriterionKind::kExactMatch) {
    const auto norm = tokenize(answer);
    return std::any_of(references.begin(), references.end(),
                       [&](const std::string& ref) { return tokenize(ref) == norm; });
  }
  double best = 0.0;
  for (const auto& ref : references) {
    const double score = crit.kind == CriterionKind::kRougeL ? rouge_l(answer, ref)
                                                             : rouge_1(answer, ref);
    best = std::max(best, score);
  }
  return best > crit.threshold;
}

double lexical_similarity(std::span<const std::string> answers) {
  if (answers.size() < 2) {
    throw UndefinedMeasureError("lexical similarity needs at least two answers");
  }
  std::vector<std::vector<std::string>> toks;
  toks.reserve(answers.size());
  for (const auto& a : answers) toks.push_back(tokenize(a));
  double sum = 0.0;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    for (std::size_t j = i + 1; j < toks.size(); ++j) sum += rouge_l_tokens(toks[i], toks[j]);
  }
  const double n = static_cast<double>(answers.size());
  return sum / (n * (n - 1.0) / 2.0);
}

double diversity(std::span<const std::string> answers) {
  return 1.0 - lexical_similarity(answers);
}

}  // namespace semtent
