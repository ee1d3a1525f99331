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

#include "semtent/entailment.h"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>

#include "http_transport.h"
#include "json.hpp"
#include "semtent/errors.h"
#include "semtent/records.h"
#include "semtent/text_metrics.h"

namespace semtent {
namespace {

using nlohmann::json;

constexpr std::string_view kWhitespace = " \t\r\n";

// Trims `s` and reports how many leading bytes were removed.
std::string trim_counted(const std::string& s, std::size_t* removed_front) {
  const auto first = s.find_first_not_of(kWhitespace);
  if (first == std::string::npos) {
    *removed_front = s.size();
    return {};
  }
  const auto last = s.find_last_not_of(kWhitespace);
  *removed_front = first;
  return s.substr(first, last - first + 1);
}

std::string with_answer(std::string_view context, std::string_view question,
                        std::string_view answer, std::size_t* answer_offset) {
  std::string full;
  full.reserve(context.size() + question.size() + answer.size() + 2);
  full.append(context).append(" ").append(question).append(" ");
  const std::size_t raw_offset = full.size();
  full.append(answer);
  std::size_t removed = 0;
  std::string trimmed = trim_counted(full, &removed);
  *answer_offset = std::min(raw_offset > removed ? raw_offset - removed : 0, trimmed.size());
  return trimmed;
}

std::array<double, 3> parse_probs(const json& obj) {
  if (!obj.is_object()) throw SchemaError("nli response: probs must be an object");
  std::array<double, 3> probs{};
  double sum = 0.0;
  for (Entailment e : {Entailment::kEntailment, Entailment::kNeutral,
                       Entailment::kContradiction}) {
    auto it = obj.find(to_string(e));
    if (it == obj.end() || !it->is_number()) {
      throw SchemaError("nli response: probs." + std::string(to_string(e)) +
                        " missing or not a number");
    }
    const double p = it->get<double>();
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw SchemaError("nli response: probabilities must be ≥ 0");
    }
    probs[static_cast<std::size_t>(e)] = p;
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw SchemaError("nli response: probs sum to " + std::to_string(sum) +
                      ", expected 1 ± 1e-6");
  }
  return probs;
}

struct OracleRules {
  OracleBackend::Normalization normalization;
  std::vector<std::vector<std::string>> synonym_sets;
};

OracleRules parse_oracle_rules(std::string_view text) {
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("oracle rules: ") + e.what());
  }
  OracleRules rules;
  try {
    if (!obj.is_object()) throw DataError("oracle rules must be a JSON object");
    if (auto n = obj.find("normalization"); n != obj.end()) {
      rules.normalization.lowercase = n->value("lowercase", true);
      rules.normalization.strip_punctuation = n->value("strip_punctuation", true);
    }
    rules.synonym_sets = obj.at("synonym_sets").get<std::vector<std::vector<std::string>>>();
  } catch (const json::exception& e) {
    throw DataError(std::string("oracle rules: ") + e.what());
  }
  return rules;
}

std::string read_rules_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open oracle rules '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json label_to_json(const EntailmentLabel& l) {
  json obj = {{"label", to_string(l.label)}};
  if (l.probs) {
    obj["probs"] = {{"entailment", (*l.probs)[0]},
                    {"neutral", (*l.probs)[1]},
                    {"contradiction", (*l.probs)[2]}};
  }
  return obj;
}

}  // namespace

std::string_view to_string(Entailment label) {
  switch (label) {
    case Entailment::kEntailment:
      return "entailment";
    case Entailment::kNeutral:
      return "neutral";
    case Entailment::kContradiction:
      return "contradiction";
  }
  return "neutral";
}

std::optional<Entailment> parse_entailment(std::string_view name) {
  if (name == "entailment") return Entailment::kEntailment;
  if (name == "neutral") return Entailment::kNeutral;
  if (name == "contradiction") return Entailment::kContradiction;
  return std::nullopt;
}

std::string_view NliPair::premise_prefix() const {
  return std::string_view(premise).substr(0, premise_answer_offset);
}
std::string_view NliPair::hypothesis_prefix() const {
  return std::string_view(hypothesis).substr(0, hypothesis_answer_offset);
}
std::string_view NliPair::premise_answer() const {
  return std::string_view(premise).substr(premise_answer_offset);
}
std::string_view NliPair::hypothesis_answer() const {
  return std::string_view(hypothesis).substr(hypothesis_answer_offset);
}

NliPair build_nli_input(std::string_view context, std::string_view question,
                        std::string_view answer_a, std::string_view answer_b) {
  NliPair pair;
  pair.premise = with_answer(context, question, answer_a, &pair.premise_answer_offset);
  pair.hypothesis = with_answer(context, question, answer_b, &pair.hypothesis_answer_offset);
  return pair;
}

EntailmentLabel parse_nli_response(std::string_view body) {
  json obj;
  try {
    obj = json::parse(body);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("nli response is not JSON: ") + e.what());
  }
  if (!obj.is_object()) throw SchemaError("nli response must be a JSON object");
  auto it = obj.find("label");
  if (it == obj.end() || !it->is_string()) {
    throw SchemaError("nli response: missing string field 'label'");
  }
  auto label = parse_entailment(it->get<std::string>());
  if (!label) throw SchemaError("nli response: unknown label '" + it->get<std::string>() + "'");
  EntailmentLabel out{*label, std::nullopt};
  if (auto p = obj.find("probs"); p != obj.end() && !p->is_null()) out.probs = parse_probs(*p);
  return out;
}

// --- EquivalenceCache -------------------------------------------------------

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::string EquivalenceCache::key(const NliPair& pair) {
  return sha256_hex(pair.premise) + ":" + sha256_hex(pair.hypothesis);
}

std::optional<EntailmentLabel> EquivalenceCache::lookup(const NliPair& pair) {
  const std::string k = key(pair);
  std::shared_lock lock(mu_);
  auto it = entries_.find(k);
  if (it == entries_.end()) {
    ++misses_;
    return std::nullopt;
  }
  ++hits_;
  return it->second;
}

void EquivalenceCache::insert(const NliPair& pair, const EntailmentLabel& label) {
  const std::string k = key(pair);
  std::unique_lock lock(mu_);
  entries_.insert_or_assign(k, label);
}

std::size_t EquivalenceCache::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

void EquivalenceCache::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open cache file '" + path.string() + "'");
  std::map<std::string, EntailmentLabel> loaded;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json obj = json::parse(text);
      const std::string pd = obj.at("premise_digest").get<std::string>();
      const std::string hd = obj.at("hypothesis_digest").get<std::string>();
      EntailmentLabel label = parse_nli_response(text);
      loaded.insert_or_assign(pd + ":" + hd, label);
    } catch (const json::exception& e) {
      throw ParseError(std::string("cache entry: ") + e.what(), line);
    } catch (const SchemaError& e) {
      throw ParseError(std::string("cache entry: ") + e.what(), line);
    }
  }
  std::unique_lock lock(mu_);
  for (auto& [k, v] : loaded) entries_.insert_or_assign(k, v);
}

void EquivalenceCache::save(const std::filesystem::path& path) const {
  std::vector<std::string> lines;
  {
    std::shared_lock lock(mu_);
    lines.reserve(entries_.size());
    for (const auto& [k, v] : entries_) {
      const auto colon = k.find(':');
      json obj = label_to_json(v);
      obj["premise_digest"] = k.substr(0, colon);
      obj["hypothesis_digest"] = k.substr(colon + 1);
      lines.push_back(obj.dump());
    }
  }
  write_lines_atomically(path, lines);
}

EntailmentLabel classify_cached(NliBackend& backend, EquivalenceCache* cache,
                                const NliPair& pair) {
  if (cache) {
    if (auto hit = cache->lookup(pair)) return *hit;
  }
  EntailmentLabel label = backend.classify(pair);
  if (cache) cache->insert(pair, label);
  return label;
}

bool bidirectional_equivalent(NliBackend& backend, EquivalenceCache* cache,
                              std::string_view context, std::string_view question,
                              std::string_view a, std::string_view b) {
  const NliPair forward = build_nli_input(context, question, a, b);
  const NliPair backward = build_nli_input(context, question, b, a);
  const bool left = classify_cached(backend, cache, forward).label == Entailment::kEntailment;
  const bool right =
      classify_cached(backend, cache, backward).label == Entailment::kEntailment;
  return left && right;
}

EquivalencePredicate entailment_predicate(NliBackend& backend, EquivalenceCache* cache,
                                          std::string context, std::string question) {
  return [&backend, cache, context = std::move(context), question = std::move(question)](
             std::string_view a, std::string_view b) {
    return bidirectional_equivalent(backend, cache, context, question, a, b);
  };
}

// --- OracleBackend ----------------------------------------------------------

OracleBackend::OracleBackend(Normalization normalization,
                             const std::vector<std::vector<std::string>>& synonym_sets)
    : normalization_(normalization) {
  for (std::size_t i = 0; i < synonym_sets.size(); ++i) {
    for (const auto& phrase : synonym_sets[i]) {
      const std::string norm = normalize(phrase);
      auto [it, inserted] = set_of_.emplace(norm, i);
      if (!inserted && it->second != i) {
        throw DataError("oracle rules: phrase '" + phrase + "' appears in synonym sets " +
                        std::to_string(it->second) + " and " + std::to_string(i));
      }
    }
  }
}

OracleBackend OracleBackend::from_json(std::string_view text) {
  auto rules = parse_oracle_rules(text);
  return OracleBackend(rules.normalization, rules.synonym_sets);
}

OracleBackend OracleBackend::from_file(const std::filesystem::path& path) {
  return from_json(read_rules_file(path));
}

std::string OracleBackend::normalize(std::string_view text) const {
  if (normalization_.strip_punctuation) {
    if (normalization_.lowercase) return normalize_answer(text);
    // Same splitting without case folding.
    std::string out, tok;
    auto flush = [&] {
      if (tok.empty()) return;
      if (!out.empty()) out.push_back(' ');
      out += tok;
      tok.clear();
    };
    for (char c : text) {
      const char lower = (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
      const bool keep = (lower >= 'a' && lower <= 'z') || (c >= '0' && c <= '9') || c == '\'';
      if (keep) {
        tok.push_back(c);
      } else {
        flush();
      }
    }
    flush();
    return out;
  }
  std::string out;
  std::istringstream words{std::string(text)};
  std::string w;
  while (words >> w) {
    if (normalization_.lowercase) {
      for (char& c : w) c = (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
    }
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

std::string OracleBackend::canonical(std::string_view answer) const {
  std::string norm = normalize(answer);
  if (auto it = set_of_.find(norm); it != set_of_.end()) {
    return "#set" + std::to_string(it->second);
  }
  return "=" + norm;
}

EntailmentLabel OracleBackend::classify(const NliPair& pair) {
  ++calls_;
  const bool same_prefix = normalize(pair.premise_prefix()) == normalize(pair.hypothesis_prefix());
  const bool same_meaning =
      same_prefix && canonical(pair.premise_answer()) == canonical(pair.hypothesis_answer());
  EntailmentLabel out;
  out.label = same_meaning ? Entailment::kEntailment : Entailment::kNeutral;
  out.probs = same_meaning ? std::array<double, 3>{1.0, 0.0, 0.0}
                           : std::array<double, 3>{0.0, 1.0, 0.0};
  return out;
}

std::unique_ptr<NliBackend> oracle_backend(const std::filesystem::path& rules) {
  auto parsed = parse_oracle_rules(read_rules_file(rules));
  return std::make_unique<OracleBackend>(parsed.normalization, parsed.synonym_sets);
}

// --- HttpBackend ------------------------------------------------------------

class HttpBackend::Impl {
 public:
  explicit Impl(HttpOptions options) : transport(std::move(options)) {}
  internal::JsonTransport transport;
};

HttpBackend::HttpBackend(HttpOptions options)
    : impl_(std::make_unique<Impl>(std::move(options))) {}

HttpBackend::~HttpBackend() = default;

EntailmentLabel HttpBackend::classify(const NliPair& pair) {
  const json request = {{"premise", pair.premise}, {"hypothesis", pair.hypothesis}};
  std::string body;
  try {
    body = request.dump();
  } catch (const json::type_error& e) {
    throw DataError(std::string("nli request is not valid UTF-8: ") + e.what());
  }
  return parse_nli_response(impl_->transport.post("/nli", body));
}

std::size_t HttpBackend::retries() const { return impl_->transport.retries(); }
std::size_t HttpBackend::requests() const { return impl_->transport.requests(); }

std::unique_ptr<NliBackend> http_backend(HttpOptions options) {
  return std::make_unique<HttpBackend>(std::move(options));
}

}  // namespace semtent
