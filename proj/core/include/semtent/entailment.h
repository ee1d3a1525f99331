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

// Semantic equivalence through bidirectional entailment.
//
// Two answers to the same question are equivalent iff an NLI classifier labels
// both directions (a => b and b => a) as entailment, each answer being read
// together with the question and context. Neutral and contradiction both
// mean "not equivalent".

#ifndef SEMTENT_ENTAILMENT_H_
#define SEMTENT_ENTAILMENT_H_

#include <array>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace semtent {

enum class Entailment { kEntailment = 0, kNeutral = 1, kContradiction = 2 };

std::string_view to_string(Entailment label);
std::optional<Entailment> parse_entailment(std::string_view name);

struct EntailmentLabel {
  Entailment label = Entailment::kNeutral;
  // Indexed by Entailment; sums to 1 within 1e-6 when present.
  std::optional<std::array<double, 3>> probs;

  bool operator==(const EntailmentLabel&) const = default;
};

// One directional NLI query. The answer offsets mark where each answer starts
// inside premise / hypothesis; everything before them is the shared
// context + question prefix. Only premise and hypothesis go over the wire.
struct NliPair {
  std::string premise;
  std::string hypothesis;
  std::size_t premise_answer_offset = 0;
  std::size_t hypothesis_answer_offset = 0;

  std::string_view premise_prefix() const;
  std::string_view hypothesis_prefix() const;
  std::string_view premise_answer() const;
  std::string_view hypothesis_answer() const;
};

// premise = trim(context + " " + question + " " + answer_a), hypothesis likewise
// with answer_b.
NliPair build_nli_input(std::string_view context, std::string_view question,
                        std::string_view answer_a, std::string_view answer_b);

class NliBackend {
 public:
  virtual ~NliBackend() = default;
  // Must be deterministic for a fixed pair within one run and safe to call
  // concurrently.
  virtual EntailmentLabel classify(const NliPair& pair) = 0;
};

// Parses and validates a /nli response body. Throws SchemaError.
EntailmentLabel parse_nli_response(std::string_view body);

// Thread-safe directional cache keyed by (SHA-256(premise), SHA-256(hypothesis)).
class EquivalenceCache {
 public:
  EquivalenceCache() = default;

  std::optional<EntailmentLabel> lookup(const NliPair& pair);
  void insert(const NliPair& pair, const EntailmentLabel& label);

  std::size_t hits() const { return hits_.load(); }
  std::size_t misses() const { return misses_.load(); }
  std::size_t size() const;

  // JSONL persistence: {"premise_digest", "hypothesis_digest", "label",
  // "probs"?} per line, sorted by key so saved files are stable.
  void load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

 private:
  static std::string key(const NliPair& pair);

  mutable std::shared_mutex mu_;
  std::map<std::string, EntailmentLabel> entries_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

std::string sha256_hex(std::string_view data);

// Consults `cache` (may be null) before calling the backend, for both
// directions.
EntailmentLabel classify_cached(NliBackend& backend, EquivalenceCache* cache,
                                const NliPair& pair);

bool bidirectional_equivalent(NliBackend& backend, EquivalenceCache* cache,
                              std::string_view context, std::string_view question,
                              std::string_view a, std::string_view b);

using EquivalencePredicate = std::function<bool(std::string_view, std::string_view)>;

// Binds backend, cache and question context into a predicate over answers.
// `backend` and `cache` must outlive the predicate.
EquivalencePredicate entailment_predicate(NliBackend& backend, EquivalenceCache* cache,
                                          std::string context, std::string question);

// Deterministic test double. Answers are normalized (ASCII lowercase,
// punctuation stripped unless disabled) and mapped to their synonym set;
// classify returns entailment iff both sides share the same question prefix
// and their answers normalize to the same string or fall in the same set.
// Equivalence is transitive by construction.
//
// Rules file (JSON):
//   {"normalization": {"lowercase": true, "strip_punctuation": true},
//    "synonym_sets": [["paris", "it's paris"], ...]}
class OracleBackend : public NliBackend {
 public:
  struct Normalization {
    bool lowercase = true;
    bool strip_punctuation = true;
  };

  OracleBackend(Normalization normalization,
                const std::vector<std::vector<std::string>>& synonym_sets);

  static OracleBackend from_json(std::string_view text);
  static OracleBackend from_file(const std::filesystem::path& path);

  EntailmentLabel classify(const NliPair& pair) override;

  // Canonical meaning key of an answer: its synonym-set id or its normal form.
  std::string canonical(std::string_view answer) const;
  std::string normalize(std::string_view text) const;

  std::size_t calls() const { return calls_.load(); }

 private:
  Normalization normalization_;
  std::unordered_map<std::string, std::size_t> set_of_;
  std::atomic<std::size_t> calls_{0};
};

std::unique_ptr<NliBackend> oracle_backend(const std::filesystem::path& rules);

struct HttpOptions {
  std::string endpoint;  // http://host:port[/base]
  std::chrono::milliseconds timeout{30000};
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  int max_in_flight = 4;
};

// Calls POST {endpoint}/nli. Transient failures (connection errors, timeouts,
// 429 and 5xx) are retried with exponential backoff; other statuses fail at
// once. Throws TimeoutError, HttpStatusError, SchemaError or TransportError.
class HttpBackend : public NliBackend {
 public:
  explicit HttpBackend(HttpOptions options);
  ~HttpBackend() override;

  EntailmentLabel classify(const NliPair& pair) override;

  std::size_t retries() const;
  std::size_t requests() const;

 private:
  class Impl;
  std::unique_ptr<Impl> impl_;
};

std::unique_ptr<NliBackend> http_backend(HttpOptions options);

}  // namespace semtent

#endif  // SEMTENT_ENTAILMENT_H_
