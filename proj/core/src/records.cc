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

#include "semtent/records.h"

#include <cmath>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <system_error>

#include "json.hpp"
#include "semtent/errors.h"

namespace semtent {
namespace {

using nlohmann::json;

// Typed field access that reports the full field path on mismatch.
class FieldReader {
 public:
  FieldReader(const json& obj, std::string prefix, std::size_t line)
      : obj_(obj), prefix_(std::move(prefix)), line_(line) {
    if (!obj_.is_object()) {
      throw ValidationError(prefix_.empty() ? "record" : prefix_,
                            "expected a JSON object", line_);
    }
  }

  std::string path(std::string_view key) const {
    return prefix_.empty() ? std::string(key) : prefix_ + "." + std::string(key);
  }

  bool has(std::string_view key) const {
    auto it = obj_.find(key);
    return it != obj_.end() && !it->is_null();
  }

  const json& raw(std::string_view key) const {
    auto it = obj_.find(key);
    if (it == obj_.end() || it->is_null()) {
      throw ValidationError(path(key), "missing required field", line_);
    }
    return *it;
  }

  std::string str(std::string_view key) const {
    const json& v = raw(key);
    if (!v.is_string()) throw ValidationError(path(key), "expected a string", line_);
    return v.get<std::string>();
  }

  std::string str_or(std::string_view key, std::string fallback) const {
    return has(key) ? str(key) : fallback;
  }

  double number(std::string_view key) const {
    const json& v = raw(key);
    if (!v.is_number()) throw ValidationError(path(key), "expected a number", line_);
    return v.get<double>();
  }

  long long integer(std::string_view key) const {
    const json& v = raw(key);
    if (!v.is_number_integer()) {
      throw ValidationError(path(key), "expected an integer", line_);
    }
    return v.get<long long>();
  }

  bool boolean(std::string_view key) const {
    const json& v = raw(key);
    if (!v.is_boolean()) throw ValidationError(path(key), "expected a boolean", line_);
    return v.get<bool>();
  }

  const json& array(std::string_view key) const {
    const json& v = raw(key);
    if (!v.is_array()) throw ValidationError(path(key), "expected an array", line_);
    return v;
  }

  std::vector<std::string> strings(std::string_view key) const {
    std::vector<std::string> out;
    for (const json& v : array(key)) {
      if (!v.is_string()) {
        throw ValidationError(path(key), "expected an array of strings", line_);
      }
      out.push_back(v.get<std::string>());
    }
    return out;
  }

  std::vector<double> numbers(std::string_view key) const {
    std::vector<double> out;
    for (const json& v : array(key)) {
      if (!v.is_number()) {
        throw ValidationError(path(key), "expected an array of numbers", line_);
      }
      out.push_back(v.get<double>());
    }
    return out;
  }

  std::size_t line() const { return line_; }

 private:
  const json& obj_;
  std::string prefix_;
  std::size_t line_;
};

void check_schema(const json& obj, std::size_t line) {
  FieldReader r(obj, "", line);
  const std::string schema = r.str("schema");
  if (schema != kSchemaVersion) {
    throw ValidationError("schema",
                          "unsupported schema '" + schema + "', expected '" +
                              std::string(kSchemaVersion) + "'",
                          line);
  }
}

Generation generation_from_json(const json& obj, const std::string& field,
                                std::size_t line) {
  FieldReader r(obj, field, line);
  Generation g;
  g.text = r.str("text");
  g.tokens = r.strings("tokens");
  g.token_logprobs = r.numbers("token_logprobs");
  FieldReader meta(r.raw("sampling_meta"), r.path("sampling_meta"), line);
  g.sampling_meta.temperature = meta.number("temperature");
  const std::string method = meta.str("method");
  auto parsed = parse_sampling_method(method);
  if (!parsed) {
    throw ValidationError(meta.path("method"), "unknown sampling method '" + method + "'",
                          line);
  }
  g.sampling_meta.method = *parsed;
  if (meta.has("num_beams")) {
    g.sampling_meta.num_beams = static_cast<int>(meta.integer("num_beams"));
  }
  validate_generation(g, field, line);
  return g;
}

json generation_to_json(const Generation& g) {
  json meta = {{"temperature", g.sampling_meta.temperature},
               {"method", to_string(g.sampling_meta.method)}};
  if (g.sampling_meta.num_beams) meta["num_beams"] = *g.sampling_meta.num_beams;
  return json{{"text", g.text},
              {"tokens", g.tokens},
              {"token_logprobs", g.token_logprobs},
              {"sampling_meta", std::move(meta)}};
}

QuestionRecord record_from_json(const json& obj, std::size_t line,
                                const LoadOptions& options) {
  check_schema(obj, line);
  FieldReader r(obj, "", line);
  QuestionRecord rec;
  rec.line = line;
  rec.id = r.str("id");
  rec.dataset = r.str_or("dataset", "");
  rec.context = r.str_or("context", "");
  rec.question = r.str("question");
  rec.reference_answers = r.strings("reference_answers");
  if (r.has("prior_turns")) {
    const json& turns = r.array("prior_turns");
    for (std::size_t i = 0; i < turns.size(); ++i) {
      FieldReader t(turns[i], "prior_turns[" + std::to_string(i) + "]", line);
      rec.prior_turns.push_back({t.str("question"), t.str("answer")});
    }
  }
  if (r.has("most_likely_answer")) {
    rec.most_likely_answer =
        generation_from_json(r.raw("most_likely_answer"), "most_likely_answer", line);
  }
  if (r.has("second_most_likely_answer")) {
    rec.second_most_likely_answer = generation_from_json(
        r.raw("second_most_likely_answer"), "second_most_likely_answer", line);
  }
  if (r.has("samples")) {
    const json& samples = r.array("samples");
    for (std::size_t i = 0; i < samples.size(); ++i) {
      rec.samples.push_back(
          generation_from_json(samples[i], "samples[" + std::to_string(i) + "]", line));
    }
  }
  validate_record(rec, options);
  return rec;
}

json record_to_json(const QuestionRecord& rec) {
  json obj = {{"schema", kSchemaVersion},
              {"id", rec.id},
              {"dataset", rec.dataset},
              {"context", rec.context},
              {"question", rec.question},
              {"reference_answers", rec.reference_answers}};
  if (!rec.prior_turns.empty()) {
    json turns = json::array();
    for (const auto& t : rec.prior_turns) {
      turns.push_back({{"question", t.question}, {"answer", t.answer}});
    }
    obj["prior_turns"] = std::move(turns);
  }
  if (rec.most_likely_answer) {
    obj["most_likely_answer"] = generation_to_json(*rec.most_likely_answer);
  }
  if (rec.second_most_likely_answer) {
    obj["second_most_likely_answer"] =
        generation_to_json(*rec.second_most_likely_answer);
  }
  json samples = json::array();
  for (const auto& g : rec.samples) samples.push_back(generation_to_json(g));
  obj["samples"] = std::move(samples);
  return obj;
}

std::string dump(const json& obj) {
  try {
    return obj.dump();
  } catch (const json::type_error& e) {
    throw DataError(std::string("cannot serialize record: ") + e.what());
  }
}

template <typename Fn>
void for_each_json_line(std::istream& in, Fn&& fn) {
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), line);
    }
    fn(obj, line);
  }
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return in;
}

}  // namespace

std::string_view to_string(SamplingMethod method) {
  switch (method) {
    case SamplingMethod::kMultinomial:
      return "multinomial";
    case SamplingMethod::kBeamMultinomial:
      return "beam_multinomial";
  }
  return "multinomial";
}

std::optional<SamplingMethod> parse_sampling_method(std::string_view name) {
  if (name == "multinomial") return SamplingMethod::kMultinomial;
  if (name == "beam_multinomial") return SamplingMethod::kBeamMultinomial;
  return std::nullopt;
}

std::string_view to_string(LikelihoodMode mode) {
  return mode == LikelihoodMode::kRaw ? "raw" : "length_normalised";
}

std::optional<LikelihoodMode> parse_likelihood_mode(std::string_view name) {
  if (name == "raw") return LikelihoodMode::kRaw;
  if (name == "length_normalised") return LikelihoodMode::kLengthNormalised;
  return std::nullopt;
}

bool QuestionRecord::operator==(const QuestionRecord& o) const {
  return id == o.id && dataset == o.dataset && context == o.context &&
         question == o.question && reference_answers == o.reference_answers &&
         prior_turns == o.prior_turns && most_likely_answer == o.most_likely_answer &&
         second_most_likely_answer == o.second_most_likely_answer &&
         samples == o.samples;
}

void validate_generation(const Generation& g, std::string_view field, std::size_t line) {
  const std::string f(field);
  if (g.tokens.empty()) {
    throw ValidationError(f + ".tokens", "must contain at least one token", line);
  }
  if (g.tokens.size() != g.token_logprobs.size()) {
    throw ValidationError(f + ".token_logprobs",
                          "length " + std::to_string(g.token_logprobs.size()) +
                              " does not match tokens length " +
                              std::to_string(g.tokens.size()),
                          line);
  }
  for (double lp : g.token_logprobs) {
    if (std::isnan(lp) || lp > 0.0) {
      throw ValidationError(f + ".token_logprobs", "token_logprobs must be ≤ 0", line);
    }
  }
  if (!(g.sampling_meta.temperature > 0.0) || !std::isfinite(g.sampling_meta.temperature)) {
    throw ValidationError(f + ".sampling_meta.temperature", "temperature must be > 0",
                          line);
  }
  if (g.sampling_meta.num_beams && *g.sampling_meta.num_beams < 1) {
    throw ValidationError(f + ".sampling_meta.num_beams", "num_beams must be ≥ 1", line);
  }
}

double sequence_log_likelihood(const Generation& g) {
  double sum = 0.0;
  for (double lp : g.token_logprobs) sum += lp;
  return sum;
}

double length_normalised_log_likelihood(const Generation& g) {
  return sequence_log_likelihood(g) / static_cast<double>(g.tokens.size());
}

double log_likelihood(const Generation& g, LikelihoodMode mode) {
  return mode == LikelihoodMode::kRaw ? sequence_log_likelihood(g)
                                      : length_normalised_log_likelihood(g);
}

void validate_record(const QuestionRecord& rec, const LoadOptions& options) {
  if (rec.id.empty()) throw ValidationError("id", "must be non-empty", rec.line);
  if (rec.question.empty()) {
    throw ValidationError("question", "must be non-empty", rec.line);
  }
  if (rec.reference_answers.empty()) {
    throw ValidationError("reference_answers", "must be non-empty", rec.line);
  }
  if (options.require_samples && rec.samples.empty()) {
    throw ValidationError("samples", "must contain at least one generation (M ≥ 1)",
                          rec.line);
  }
  for (std::size_t i = 0; i < rec.samples.size(); ++i) {
    validate_generation(rec.samples[i], "samples[" + std::to_string(i) + "]", rec.line);
  }
  if (rec.most_likely_answer) {
    validate_generation(*rec.most_likely_answer, "most_likely_answer", rec.line);
  }
  if (rec.second_most_likely_answer) {
    validate_generation(*rec.second_most_likely_answer, "second_most_likely_answer",
                        rec.line);
  }
}

std::vector<QuestionRecord> parse_records(std::istream& in, const LoadOptions& options) {
  std::vector<QuestionRecord> out;
  std::map<std::string, std::size_t> seen;
  for_each_json_line(in, [&](const json& obj, std::size_t line) {
    QuestionRecord rec = record_from_json(obj, line, options);
    auto [it, inserted] = seen.emplace(rec.id, line);
    if (!inserted) {
      throw ValidationError("id",
                            "duplicate id '" + rec.id + "' (first seen on line " +
                                std::to_string(it->second) + ")",
                            line);
    }
    out.push_back(std::move(rec));
  });
  return out;
}

std::vector<QuestionRecord> load_records(const std::filesystem::path& path,
                                         const LoadOptions& options) {
  auto in = open_input(path);
  return parse_records(in, options);
}

std::string serialize_record(const QuestionRecord& record) {
  return dump(record_to_json(record));
}

void validate_scored(const ScoredRecord& s, std::size_t line) {
  if (s.record_id.empty()) throw ValidationError("record_id", "must be non-empty", line);
  if (s.failure) return;
  const auto& p = s.partition_summary;
  if (p.num_clusters < 1) {
    throw ValidationError("partition_summary.num_clusters", "must be ≥ 1", line);
  }
  if (static_cast<std::size_t>(p.num_clusters) != p.cluster_sizes.size()) {
    throw ValidationError("partition_summary.cluster_sizes",
                          "length must equal num_clusters", line);
  }
  for (int size : p.cluster_sizes) {
    if (size < 1) {
      throw ValidationError("partition_summary.cluster_sizes",
                            "clusters must be non-empty", line);
    }
  }
  if (s.scores.num_semantic_clusters != p.num_clusters) {
    throw ValidationError("scores.num_semantic_clusters",
                          "must equal partition_summary.num_clusters", line);
  }
  if (s.scores.semantic_entropy_discrete < 0.0) {
    throw ValidationError("scores.semantic_entropy_discrete", "must be ≥ 0", line);
  }
  if (s.scores.p_true && (*s.scores.p_true < 0.0 || *s.scores.p_true > 1.0)) {
    throw ValidationError("scores.p_true", "must lie in [0, 1]", line);
  }
}

std::string serialize_scored(const ScoredRecord& s) {
  json obj = {{"schema", kSchemaVersion}, {"record_id", s.record_id}};
  if (s.failure) {
    obj["failure"] = *s.failure;
  } else {
    const auto& sc = s.scores;
    json scores = {{"semantic_entropy_rao", sc.semantic_entropy_rao},
                   {"semantic_entropy_discrete", sc.semantic_entropy_discrete},
                   {"predictive_entropy", sc.predictive_entropy},
                   {"length_normalised_entropy", sc.length_normalised_entropy},
                   {"num_semantic_clusters", sc.num_semantic_clusters},
                   {"mode", to_string(sc.mode)}};
    if (sc.lexical_similarity) scores["lexical_similarity"] = *sc.lexical_similarity;
    if (sc.margin_probability) scores["margin_probability"] = *sc.margin_probability;
    if (sc.p_true) scores["p_true"] = *sc.p_true;
    if (sc.p_true_renormalised) scores["p_true_renormalised"] = *sc.p_true_renormalised;
    obj["scores"] = std::move(scores);
    obj["partition_summary"] = {{"num_clusters", s.partition_summary.num_clusters},
                                {"cluster_sizes", s.partition_summary.cluster_sizes}};
  }
  if (s.correct) obj["correct"] = *s.correct;
  if (!s.flags.empty()) obj["flags"] = s.flags;
  return dump(obj);
}

std::vector<ScoredRecord> parse_scored(std::istream& in) {
  std::vector<ScoredRecord> out;
  std::set<std::string> seen;
  for_each_json_line(in, [&](const json& obj, std::size_t line) {
    check_schema(obj, line);
    FieldReader r(obj, "", line);
    ScoredRecord s;
    s.record_id = r.str("record_id");
    if (!seen.insert(s.record_id).second) {
      throw ValidationError("record_id", "duplicate id '" + s.record_id + "'", line);
    }
    if (r.has("failure")) {
      s.failure = r.str("failure");
    } else {
      FieldReader sc(r.raw("scores"), "scores", line);
      auto& u = s.scores;
      u.semantic_entropy_rao = sc.number("semantic_entropy_rao");
      u.semantic_entropy_discrete = sc.number("semantic_entropy_discrete");
      u.predictive_entropy = sc.number("predictive_entropy");
      u.length_normalised_entropy = sc.number("length_normalised_entropy");
      u.num_semantic_clusters = static_cast<int>(sc.integer("num_semantic_clusters"));
      const std::string mode = sc.str("mode");
      auto parsed = parse_likelihood_mode(mode);
      if (!parsed) throw ValidationError("scores.mode", "unknown mode '" + mode + "'", line);
      u.mode = *parsed;
      if (sc.has("lexical_similarity")) u.lexical_similarity = sc.number("lexical_similarity");
      if (sc.has("margin_probability")) u.margin_probability = sc.number("margin_probability");
      if (sc.has("p_true")) u.p_true = sc.number("p_true");
      if (sc.has("p_true_renormalised")) {
        u.p_true_renormalised = sc.number("p_true_renormalised");
      }
      FieldReader ps(r.raw("partition_summary"), "partition_summary", line);
      s.partition_summary.num_clusters = static_cast<int>(ps.integer("num_clusters"));
      for (const json& v : ps.array("cluster_sizes")) {
        if (!v.is_number_integer()) {
          throw ValidationError("partition_summary.cluster_sizes",
                                "expected an array of integers", line);
        }
        s.partition_summary.cluster_sizes.push_back(v.get<int>());
      }
    }
    if (r.has("correct")) s.correct = r.boolean("correct");
    if (r.has("flags")) s.flags = r.strings("flags");
    validate_scored(s, line);
    out.push_back(std::move(s));
  });
  return out;
}

std::vector<ScoredRecord> load_scored(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_scored(in);
}

std::map<std::string, bool> load_labels(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::map<std::string, bool> labels;
  for_each_json_line(in, [&](const json& obj, std::size_t line) {
    FieldReader r(obj, "", line);
    std::string id = r.str("record_id");
    bool correct = r.boolean("correct");
    if (!labels.emplace(id, correct).second) {
      throw ValidationError("record_id", "duplicate label for '" + id + "'", line);
    }
  });
  return labels;
}

void write_file_atomically(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw DataError("write failed for '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw DataError("cannot move output into place at '" + path.string() + "'");
  }
}

void write_lines_atomically(const std::filesystem::path& path,
                            const std::vector<std::string>& lines) {
  std::string contents;
  for (const auto& l : lines) {
    contents += l;
    contents += '\n';
  }
  write_file_atomically(path, contents);
}

}  // namespace semtent
