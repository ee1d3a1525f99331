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

#include "commands.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "semtent/clustering.h"
#include "semtent/entailment.h"
#include "semtent/errors.h"

namespace semtent::cli {
namespace {

namespace fs = std::filesystem;

// Runs fn(i) for i in [0, n) on up to `jobs` threads. The first exception is
// rethrown after all workers finish.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(jobs, 1), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first_error;
  std::mutex error_mu;
  {
    std::vector<std::jthread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&] {
        for (std::size_t i = next++; i < n && !stop; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mu);
            if (!first_error) first_error = std::current_exception();
            stop = true;
          }
        }
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void require_file(const fs::path& path, std::string_view what) {
  if (path.empty()) throw ConfigError(std::string(what) + " is required");
  if (!fs::is_regular_file(path)) {
    throw ConfigError(std::string(what) + " '" + path.string() + "' does not exist");
  }
}

void require_output(const fs::path& path) {
  if (path.empty()) throw ConfigError("--output is required");
  const fs::path parent = fs::absolute(path).parent_path();
  if (!fs::is_directory(parent)) {
    throw ConfigError("output directory '" + parent.string() + "' does not exist");
  }
}

void require_single_input(const RunConfig& cfg) {
  if (cfg.inputs.size() != 1) throw ConfigError("exactly one --input is required");
  require_file(cfg.inputs.front(), "--input");
}

HttpOptions http_options(const RunConfig& cfg, const std::string& endpoint) {
  if (!(cfg.timeout_seconds > 0.0)) throw ConfigError("--timeout must be > 0");
  if (cfg.initial_backoff_seconds < 0.0) throw ConfigError("--backoff must be ≥ 0");
  HttpOptions o;
  o.endpoint = endpoint;
  o.timeout = std::chrono::milliseconds(static_cast<long long>(cfg.timeout_seconds * 1000.0));
  o.max_attempts = cfg.max_attempts;
  o.initial_backoff =
      std::chrono::milliseconds(static_cast<long long>(cfg.initial_backoff_seconds * 1000.0));
  o.max_in_flight = cfg.max_in_flight;
  return o;
}

void validate_common(const RunConfig& cfg) {
  if (cfg.jobs < 1) throw ConfigError("--jobs must be ≥ 1");
  if (cfg.max_attempts < 1) throw ConfigError("--max-attempts must be ≥ 1");
  if (cfg.max_in_flight < 1) throw ConfigError("--max-in-flight must be ≥ 1");
}

bool wants(const RunConfig& cfg, Measure m) {
  return std::find(cfg.measures.begin(), cfg.measures.end(), m) != cfg.measures.end();
}

// Backends, cache and options for clustering + scoring, built during config
// validation so that no network or file side effect happens before it passes.
struct Scorer {
  std::unique_ptr<NliBackend> backend;
  std::unique_ptr<GeneratorClient> generator;
  EquivalenceCache cache;
  ScoringOptions options;
  fs::path cache_path;
  int jobs = 1;
};

std::unique_ptr<Scorer> make_scorer(const RunConfig& cfg) {
  validate_common(cfg);
  validate_criterion(cfg.criterion);
  auto scorer = std::make_unique<Scorer>();
  const bool has_oracle = !cfg.oracle_rules.empty();
  const bool has_nli = !cfg.nli_endpoint.empty();
  if (has_oracle == has_nli) {
    throw ConfigError("choose exactly one NLI backend: --oracle <rules> or --nli-endpoint <url>");
  }
  if (has_oracle) {
    require_file(cfg.oracle_rules, "--oracle");
    try {
      scorer->backend = oracle_backend(cfg.oracle_rules);
    } catch (const DataError& e) {
      throw ConfigError(std::string("invalid oracle rules: ") + e.what());
    }
  } else {
    scorer->backend = http_backend(http_options(cfg, cfg.nli_endpoint));
  }
  if (wants(cfg, Measure::kPTrue)) {
    if (cfg.generator_endpoint.empty()) {
      throw ConfigError("measure p_true needs --generator-endpoint");
    }
    scorer->generator =
        std::make_unique<GeneratorClient>(http_options(cfg, cfg.generator_endpoint));
    if (!cfg.p_true_few_shot_file.empty()) {
      require_file(cfg.p_true_few_shot_file, "--p-true-few-shot");
      scorer->options.p_true_few_shot = read_text_file(cfg.p_true_few_shot_file);
    }
    GeneratorClient* gen = scorer->generator.get();
    scorer->options.p_true = [gen](const std::string& prompt) {
      return gen->next_token_logprobs(prompt);
    };
  }
  if (!cfg.cache_path.empty()) {
    const fs::path parent = fs::absolute(cfg.cache_path).parent_path();
    if (!fs::is_directory(parent)) {
      throw ConfigError("cache directory '" + parent.string() + "' does not exist");
    }
    scorer->cache_path = cfg.cache_path;
  }
  scorer->options.mode = cfg.mode;
  scorer->options.criterion = cfg.criterion;
  scorer->jobs = cfg.jobs;
  return scorer;
}

void load_cache(Scorer& scorer) {
  if (!scorer.cache_path.empty() && fs::exists(scorer.cache_path)) {
    scorer.cache.load(scorer.cache_path);
  }
}

void save_cache(const Scorer& scorer) {
  if (!scorer.cache_path.empty()) scorer.cache.save(scorer.cache_path);
}

std::vector<ScoredRecord> score_all(const std::vector<QuestionRecord>& records, Scorer& scorer) {
  std::vector<ScoredRecord> scored(records.size());
  NliBackend& backend = *scorer.backend;
  EquivalenceCache* cache = &scorer.cache;
  const PartitionFn partition = [&backend, cache](const QuestionRecord& r) {
    return cluster_generations(r.context, r.question, r.samples, backend, cache);
  };
  parallel_for(records.size(), scorer.jobs, [&](std::size_t i) {
    scored[i] = score_record(records[i], partition, scorer.options);
  });
  return scored;
}

void apply_labels(std::vector<ScoredRecord>& scored, const fs::path& labels_path) {
  if (labels_path.empty()) return;
  const auto labels = load_labels(labels_path);
  for (auto& s : scored) {
    if (auto it = labels.find(s.record_id); it != labels.end()) s.correct = it->second;
  }
}

std::size_t count_failed(const std::vector<ScoredRecord>& scored) {
  return static_cast<std::size_t>(
      std::count_if(scored.begin(), scored.end(), [](const auto& s) { return s.failure.has_value(); }));
}

}  // namespace

std::vector<Measure> default_measures() {
  return {Measure::kSemanticEntropy,        Measure::kSemanticEntropyDiscrete,
          Measure::kPredictiveEntropy,      Measure::kLengthNormalisedEntropy,
          Measure::kLexicalSimilarity,      Measure::kNumSemanticClusters,
          Measure::kMarginProbability};
}

std::string temperature_key(double t) {
  std::string s = format_number(t);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return "T=" + s;
}

RunSummary cmd_generate(const RunConfig& cfg) {
  validate_common(cfg);
  require_single_input(cfg);
  require_output(cfg.output);
  validate_sampling_config(cfg.sampling);
  if (cfg.generator_endpoint.empty()) throw ConfigError("--generator-endpoint is required");
  std::optional<std::string> few_shot;
  if (!cfg.few_shot_file.empty()) {
    require_file(cfg.few_shot_file, "--few-shot");
    few_shot = read_text_file(cfg.few_shot_file);
  } else if (cfg.prompt_template == PromptTemplate::kClosedBookFewShot) {
    throw ConfigError("--template closed_book_few_shot requires --few-shot");
  }
  GeneratorClient client(http_options(cfg, cfg.generator_endpoint));

  LoadOptions load;
  load.require_samples = false;
  std::vector<QuestionRecord> records = load_records(cfg.inputs.front(), load);

  parallel_for(records.size(), cfg.jobs, [&](std::size_t i) {
    QuestionRecord& r = records[i];
    const std::string prompt =
        few_shot ? build_prompt(r, cfg.prompt_template, std::string_view(*few_shot))
                 : build_prompt(r, cfg.prompt_template);
    r.samples = client.sample_answers(prompt, cfg.sampling);
    auto [best, runner_up] = client.most_likely_answers(prompt, cfg.sampling);
    r.most_likely_answer = std::move(best);
    r.second_most_likely_answer = std::move(runner_up);
  });

  std::vector<std::string> lines;
  lines.reserve(records.size());
  for (const auto& r : records) lines.push_back(serialize_record(r));
  write_lines_atomically(cfg.output, lines);
  return RunSummary{records.size(), 0, 0, 0, 0};
}

RunSummary cmd_score(const RunConfig& cfg) {
  require_single_input(cfg);
  require_output(cfg.output);
  auto scorer = make_scorer(cfg);

  const auto records = load_records(cfg.inputs.front());
  load_cache(*scorer);
  const auto scored = score_all(records, *scorer);

  std::vector<std::string> lines;
  lines.reserve(scored.size());
  for (const auto& s : scored) lines.push_back(serialize_scored(s));
  write_lines_atomically(cfg.output, lines);
  save_cache(*scorer);
  return RunSummary{scored.size(), count_failed(scored), scorer->cache.hits(),
                    scorer->cache.misses(), 0};
}

RunSummary cmd_evaluate(const RunConfig& cfg) {
  validate_common(cfg);
  require_single_input(cfg);
  if (cfg.output.empty()) throw ConfigError("--output (report directory) is required");
  if (!cfg.labels.empty()) require_file(cfg.labels, "--labels");

  auto scored = load_scored(cfg.inputs.front());
  apply_labels(scored, cfg.labels);
  EvalReport report = evaluate(std::move(scored), cfg.measures);
  if (report.n_labelled == 0) {
    throw UndefinedMeasureError("AUROC undefined: no record carries a correctness label");
  }
  if (!cfg.measures.empty() && (*report.accuracy == 0.0 || *report.accuracy == 1.0)) {
    throw UndefinedMeasureError(
        "AUROC undefined: every labelled record is " +
        std::string(*report.accuracy == 1.0 ? "correct" : "incorrect"));
  }

  const std::vector<std::pair<std::string, EvalReport>> groups = {{"all", report}};
  const auto rows = aggregate_ablation(groups);
  fs::create_directories(cfg.output);
  write_file_atomically(cfg.output / "report.json", report_to_json(report));
  write_file_atomically(cfg.output / "summary.csv", ablation_csv(rows, cfg.measures));
  write_file_atomically(cfg.output / "details.csv", details_csv(report, cfg.measures));
  return RunSummary{report.n_questions, report.n_failed, 0, 0, rows.size()};
}

RunSummary cmd_ablate(const RunConfig& cfg) {
  if (cfg.inputs.empty()) throw ConfigError("at least one --input is required");
  for (const auto& in : cfg.inputs) require_file(in, "--input");
  if (cfg.output.empty()) throw ConfigError("--output (report directory) is required");
  if (!cfg.labels.empty()) require_file(cfg.labels, "--labels");
  if (cfg.axis == AblationAxis::kSampleCount && cfg.inputs.size() != 1) {
    throw ConfigError("sample-count ablation takes exactly one --input");
  }
  if (cfg.axis != AblationAxis::kNone && cfg.inputs.size() > 1 &&
      cfg.axis != AblationAxis::kTemperature) {
    throw ConfigError("multiple inputs are only supported for the temperature axis");
  }
  if (cfg.axis == AblationAxis::kNone && cfg.inputs.size() != 1) {
    throw ConfigError("--axis none takes exactly one --input");
  }
  for (int k : cfg.sample_counts) {
    if (k < 1) throw ConfigError("--sample-counts entries must be ≥ 1");
  }
  for (double t : cfg.temperatures) {
    if (!(t > 0.0)) throw ConfigError("--temperatures entries must be > 0");
  }
  auto scorer = make_scorer(cfg);

  std::vector<std::pair<std::string, std::vector<QuestionRecord>>> groups;
  switch (cfg.axis) {
    case AblationAxis::kNone:
      groups.emplace_back("all", load_records(cfg.inputs.front()));
      break;
    case AblationAxis::kSampleCount: {
      const auto records = load_records(cfg.inputs.front());
      std::size_t min_m = records.empty() ? 0 : records.front().samples.size();
      for (const auto& r : records) min_m = std::min(min_m, r.samples.size());
      std::vector<int> counts = cfg.sample_counts;
      if (counts.empty()) {
        for (std::size_t k = 2; k <= min_m; ++k) counts.push_back(static_cast<int>(k));
      }
      for (int k : counts) {
        if (static_cast<std::size_t>(k) > min_m) {
          throw DataError("sample count " + std::to_string(k) + " exceeds the smallest M (" +
                          std::to_string(min_m) + ") in the input");
        }
        auto truncated = records;
        for (auto& r : truncated) r.samples.resize(static_cast<std::size_t>(k));
        groups.emplace_back("k=" + std::to_string(k), std::move(truncated));
      }
      break;
    }
    case AblationAxis::kTemperature: {
      std::map<double, std::vector<QuestionRecord>> by_temperature;
      for (const auto& in : cfg.inputs) {
        for (auto& r : load_records(in)) {
          const double t = r.samples.front().sampling_meta.temperature;
          for (const auto& g : r.samples) {
            if (g.sampling_meta.temperature != t) {
              throw DataError("record '" + r.id + "' mixes sampling temperatures", r.line);
            }
          }
          by_temperature[t].push_back(std::move(r));
        }
      }
      if (!cfg.temperatures.empty()) {
        std::map<double, std::vector<QuestionRecord>> selected;
        for (double t : cfg.temperatures) {
          auto it = by_temperature.find(t);
          if (it == by_temperature.end()) {
            throw DataError("no records sampled at " + temperature_key(t));
          }
          selected[t] = std::move(it->second);
        }
        by_temperature = std::move(selected);
      }
      for (auto& [t, records] : by_temperature) {
        groups.emplace_back(temperature_key(t), std::move(records));
      }
      break;
    }
  }

  load_cache(*scorer);
  std::vector<std::pair<std::string, EvalReport>> reports;
  std::size_t n_records = 0, n_failed = 0;
  for (auto& [key, records] : groups) {
    auto scored = score_all(records, *scorer);
    apply_labels(scored, cfg.labels);
    n_records += scored.size();
    n_failed += count_failed(scored);
    reports.emplace_back(key, evaluate(std::move(scored), cfg.measures));
  }
  const auto rows = aggregate_ablation(reports);

  fs::create_directories(cfg.output);
  write_file_atomically(cfg.output / "ablation.json", ablation_to_json(rows, cfg.measures));
  write_file_atomically(cfg.output / "ablation.csv", ablation_csv(rows, cfg.measures));
  save_cache(*scorer);
  return RunSummary{n_records, n_failed, scorer->cache.hits(), scorer->cache.misses(), rows.size()};
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Semantic-entropy uncertainty toolkit"};
  app.name("semtent");
  app.set_config("--config", "", "INI/TOML config file; command-line flags take precedence");
  app.require_subcommand(1);

  std::vector<std::string> inputs;
  std::string output, labels, oracle, cache, few_shot, p_true_few_shot;
  std::string method = "multinomial", tmpl = "open_book_zero_shot", criterion = "rouge_l";
  std::string mode = "raw", axis = "none";
  std::vector<std::string> measures;
  std::vector<std::string> stop_patterns;
  std::optional<int> top_k;
  std::optional<double> top_p;

  app.add_option("--input", inputs, "Input file(s)");
  app.add_option("--output", output, "Output file (generate/score) or directory (evaluate/ablate)");
  app.add_option("--labels", labels, "Manual correctness labels JSONL (overrides computed labels)");
  app.add_option("--oracle", oracle, "Deterministic oracle NLI backend rules file");
  app.add_option("--nli-endpoint", cfg.nli_endpoint, "NLI service base URL");
  app.add_option("--generator-endpoint", cfg.generator_endpoint, "Generator service base URL");
  app.add_option("--num-samples", cfg.sampling.num_samples, "Samples per question (M)");
  app.add_option("--temperature", cfg.sampling.temperature, "Sampling temperature");
  app.add_option("--method", method, "multinomial | beam_multinomial")
      ->check(CLI::IsMember({"multinomial", "beam_multinomial"}));
  app.add_option("--num-beams", cfg.sampling.num_beams, "Beam width");
  app.add_option("--max-tokens", cfg.sampling.max_tokens, "Maximum generated tokens");
  app.add_option("--stop-pattern", stop_patterns, "Trim generations at these patterns");
  app.add_option("--top-k", top_k, "Optional top-k passthrough");
  app.add_option("--top-p", top_p, "Optional top-p passthrough");
  app.add_option("--template", tmpl, "open_book_zero_shot | closed_book_few_shot")
      ->check(CLI::IsMember({"open_book_zero_shot", "closed_book_few_shot"}));
  app.add_option("--few-shot", few_shot, "Few-shot block file for closed-book prompts");
  app.add_option("--p-true-few-shot", p_true_few_shot, "Few-shot block file for p(True)");
  app.add_option("--criterion", criterion, "rouge_l | rouge_1 | exact_match")
      ->check(CLI::IsMember({"rouge_l", "rouge_1", "exact_match"}));
  app.add_option("--threshold", cfg.criterion.threshold, "Correctness threshold (strict >)");
  std::vector<std::string> measure_names;
  for (Measure m : kAllMeasures) measure_names.emplace_back(measure_name(m));
  app.add_option("--measures", measures, "Measures to evaluate")
      ->check(CLI::IsMember(measure_names))
      ->delimiter(',');
  app.add_option("--mode", mode, "raw | length_normalised")
      ->check(CLI::IsMember({"raw", "length_normalised"}));
  app.add_option("--axis", axis, "Ablation axis: none | temperature | sample_count")
      ->check(CLI::IsMember({"none", "temperature", "sample_count"}));
  app.add_option("--temperatures", cfg.temperatures, "Temperature groups to include")
      ->delimiter(',');
  app.add_option("--sample-counts", cfg.sample_counts, "Sample-count truncations")
      ->delimiter(',');
  app.add_option("--cache", cache, "Entailment cache file (JSONL), read and rewritten");
  app.add_option("--seed", cfg.seed, "Run seed (recorded only)");
  app.add_option("--jobs", cfg.jobs, "Records processed in parallel");
  app.add_option("--timeout", cfg.timeout_seconds, "HTTP timeout in seconds");
  app.add_option("--max-attempts", cfg.max_attempts, "HTTP attempts per request");
  app.add_option("--backoff", cfg.initial_backoff_seconds, "Initial retry backoff in seconds");
  app.add_option("--max-in-flight", cfg.max_in_flight, "Concurrent HTTP requests per backend");

  auto* generate = app.add_subcommand("generate", "Sample answers for a question file");
  auto* score = app.add_subcommand("score", "Cluster and score a records file");
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Compute AUROC report from scored records");
  auto* ablate = app.add_subcommand("ablate", "Score and evaluate across a temperature or sample-count grid");
  for (auto* sub : {generate, score, evaluate_cmd, ablate}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "semtent: " << e.what() << "\n";
    return kExitConfig;
  }

  for (const auto& in : inputs) cfg.inputs.emplace_back(in);
  cfg.output = output;
  cfg.labels = labels;
  cfg.oracle_rules = oracle;
  cfg.cache_path = cache;
  cfg.few_shot_file = few_shot;
  cfg.p_true_few_shot_file = p_true_few_shot;
  cfg.sampling.method = *parse_sampling_method(method);
  if (!stop_patterns.empty()) cfg.sampling.stop_patterns = stop_patterns;
  cfg.sampling.top_k = top_k;
  cfg.sampling.top_p = top_p;
  cfg.prompt_template = *parse_prompt_template(tmpl);
  cfg.criterion.kind = *parse_criterion_kind(criterion);
  cfg.mode = *parse_likelihood_mode(mode);
  if (!measures.empty()) {
    cfg.measures.clear();
    for (const auto& m : measures) cfg.measures.push_back(*parse_measure(m));
  }
  cfg.axis = axis == "temperature"    ? AblationAxis::kTemperature
             : axis == "sample_count" ? AblationAxis::kSampleCount
                                      : AblationAxis::kNone;

  try {
    RunSummary summary;
    if (generate->parsed()) {
      summary = cmd_generate(cfg);
    } else if (score->parsed()) {
      summary = cmd_score(cfg);
    } else if (evaluate_cmd->parsed()) {
      summary = cmd_evaluate(cfg);
    } else {
      summary = cmd_ablate(cfg);
    }
    err << "semtent: records=" << summary.records << " failed=" << summary.failed
        << " cache_hits=" << summary.cache_hits << " cache_misses=" << summary.cache_misses;
    if (summary.rows) err << " rows=" << summary.rows;
    err << "\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "semtent: config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const TransportError& e) {
    err << "semtent: backend error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const DataError& e) {
    err << "semtent: data error: " << e.what() << "\n";
    return kExitData;
  } catch (const UndefinedMeasureError& e) {
    err << "semtent: data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "semtent: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace semtent::cli
