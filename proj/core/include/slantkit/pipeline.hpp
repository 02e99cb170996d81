#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "slantkit/aggregate.hpp"
#include "slantkit/chat_client.hpp"
#include "slantkit/lexicon.hpp"

namespace slantkit {

enum class Stage { kLexicon, kSlant, kHarvest, kAnnotate, kTests, kAggregate, kValidate, kMockServe };

std::string_view to_string(Stage stage);
std::optional<Stage> parse_stage(std::string_view name);

// Whole-pipeline configuration, read from one JSON file. Relative paths are
// resolved against the directory of the config file.
struct RunConfig {
  std::filesystem::path base_dir;
  std::optional<std::uint64_t> seed;  // required; no clock-based default
  std::filesystem::path out_dir = "out";
  std::filesystem::path cache_dir = "cache";

  struct Corpus {
    std::filesystem::path congress;         // party-labeled JSONL
    std::filesystem::path reference;        // raw JSONL reference corpus, or
    std::filesystem::path reference_csv;    // precomputed bigram,count ranking
    std::vector<std::filesystem::path> stopwords;
    std::filesystem::path news;             // outlet corpus for validation
    std::filesystem::path ratings;          // CSV outlet,rating
  } corpus;

  LexiconParams lexicon;
  std::uint64_t min_evidence = 50;

  std::vector<Endpoint> endpoints;
  std::vector<std::string> models;  // endpoint names of the models under study

  struct Harvest {
    std::filesystem::path policy_templates;
    std::filesystem::path figure_templates;
    std::filesystem::path topics;   // one topic per line
    std::filesystem::path figures;  // CSV name,category,alignment
    std::uint32_t policy_replicates = 30;
    std::uint32_t figure_replicates = 15;
    std::size_t concurrency = 4;
    std::uint32_t max_retries = 5;
    std::uint32_t initial_backoff_ms = 500;
  } harvest;

  struct JudgeConfig {
    std::string endpoint;
    std::filesystem::path rubrics;  // directory with viewpoint.txt, sentiment.txt, stance.txt
    double temperature = 0.0;
  } judge;

  struct Tests {
    std::vector<std::filesystem::path> banks;
    std::filesystem::path prefixes;
    std::filesystem::path suffixes;
    std::filesystem::path fewshot_preamble;
    std::vector<std::string> base_models;  // administered with few-shot wrapping
    std::uint32_t runs = 10;
    double temperature = 0.0;
  } tests;

  struct Mock {
    std::filesystem::path fixture;
    std::string host = "127.0.0.1";
    int port = 8089;
    // Start an in-process mock server and point every endpoint at it.
    bool embedded = false;
  } mock;

  static RunConfig load(const std::filesystem::path& path);
  static RunConfig parse(std::string_view json_text, const std::filesystem::path& base_dir,
                         const std::string& source_name);

  std::filesystem::path resolve(const std::filesystem::path& p) const;
  std::filesystem::path out() const { return resolve(out_dir); }
  std::filesystem::path cache() const { return resolve(cache_dir); }
  std::uint64_t stage_seed(std::string_view stage) const;

  // Every problem that would stop `stage`, not just the first.
  std::vector<std::string> problems(Stage stage) const;
};

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> cache;
  std::optional<std::size_t> concurrency;
  bool dry_run = false;
  std::function<void(std::string_view)> log;  // progress and warnings; defaults to stderr
  std::shared_ptr<ChatTransport> transport;   // defaults to HttpTransport
};

// Applies overrides, validates, and runs one stage. Stage outputs under the
// output directory:
//   lexicon    lexicon.csv, party_term_counts.csv
//   harvest    plan_policy.jsonl, plan_figures.jsonl, records.jsonl
//   slant      slant.csv, slant_terms.csv
//   annotate   annotations.jsonl, viewpoints.csv, sentiment.csv
//   tests      tests_runs.csv, tests_summary.csv
//   validate   validation.csv
//   aggregate  report/ (see emit_report)
// Throws slantkit::Error; kConfig errors list every validation problem.
void run_stage(Stage stage, RunConfig config, const RunOptions& options);

}  // namespace slantkit
