#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "slantkit/annotate.hpp"
#include "slantkit/harvest.hpp"

namespace slantkit {

struct AxisRange {
  double min = -1.0;
  double max = 1.0;
};

struct AxisWeights {
  double econ = 0.0;
  double social = 0.0;
};

struct TestItem {
  std::string statement;
  std::vector<std::string> allowed_answers;
  std::vector<AxisWeights> weights;  // parallel to allowed_answers
};

struct TestDefinition {
  std::string id;
  std::vector<TestItem> items;
  AxisRange econ_range;
  AxisRange social_range;
};

// Checks ranges are non-degenerate, every item has >= 2 answers with one
// weight pair each and touches at least one axis, and every achievable raw
// score (invalid items count zero) lies inside the declared ranges.
void validate_test(const TestDefinition& test);

// JSON test bank:
//   {"id": "...", "econ_range": [min, max], "social_range": [min, max],
//    "items": [{"statement": "...", "answers": ["agree", "disagree"],
//               "weights": [[econ, social], [econ, social]]}]}
TestDefinition load_test(const std::filesystem::path& path);
TestDefinition parse_test(std::string_view json_text, const std::string& source_name);

// "<prefix> <statement>\nAllowed answers: a, b\n<suffix>" with empty parts skipped.
std::string item_prompt(const TestItem& item, std::string_view prefix, std::string_view suffix);

// Non-empty preamble text. Throws kConfig when the file is missing or blank.
std::string load_fewshot_preamble(const std::filesystem::path& path);
// Preamble of neutral question/answer exemplars followed by the item prompt.
std::string fewshot_wrap(std::string_view preamble, std::string_view prompt);

struct TestScore {
  double econ_raw = 0.0;
  double social_raw = 0.0;
  std::size_t invalid_count = 0;
};

// Sums the weights of the chosen answers; invalid items are skipped. Throws
// kPrecondition when the stance count differs from the item count or a
// stance is not one of its item's answers.
TestScore score(const TestDefinition& test, std::span<const StanceResult> stances);

struct AdministrationResult {
  std::string test_id;
  std::string model_id;
  std::uint32_t run_index = 0;
  std::vector<std::string> prompts;
  std::vector<std::string> responses;
  std::vector<StanceResult> stances;
  double econ_raw = 0.0;
  double social_raw = 0.0;
  std::size_t invalid_count = 0;
};

struct AdministerOptions {
  std::uint32_t runs = 10;
  std::uint64_t seed = 0;
  double temperature = 0.0;
  std::optional<std::string> fewshot_preamble;  // set for base models
};

// Sends every item of every run in isolation with an independently drawn
// prefix/suffix pair, resolves answers through the judge's stance detection,
// and scores each run. Items whose request fails count as invalid.
std::vector<AdministrationResult> administer(const TestDefinition& test, const std::string& model_id,
                                             std::span<const std::string> prefixes,
                                             std::span<const std::string> suffixes, const AdministerOptions& options,
                                             ExecutionEngine& engine, Judge& judge);

// Affine map of `raw` from [range.min, range.max] onto [-1, 1].
double rescale(double raw, const AxisRange& range);

struct TestAxisSummary {
  std::string test_id;
  double econ = 0.0;   // rescaled, averaged over kept runs
  double social = 0.0;
  std::size_t runs_used = 0;
  std::size_t runs_excluded = 0;  // more than half the items invalid
};

struct OrientationSummary {
  std::vector<TestAxisSummary> tests;  // sorted by test id
  double econ = 0.0;    // mean over tests
  double social = 0.0;
};

// For one model: rescale each run to [-1, 1], average runs per test, then
// average across tests. Throws kConfig for a result whose test has no
// definition and kEmpty when a test has no usable runs.
OrientationSummary rescale_and_average(std::span<const TestDefinition> tests,
                                       std::span<const AdministrationResult> results);

// model,test,run,econ_raw,social_raw,invalid_count
std::string administration_csv(std::span<const AdministrationResult> results);

}  // namespace slantkit
