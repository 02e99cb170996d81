#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "slantkit/annotate.hpp"
#include "slantkit/politests.hpp"
#include "slantkit/slant.hpp"

namespace slantkit {

// Every method value is oriented so that negative means left-leaning:
//   slant      JSD delta
//   viewpoint  mean viewpoint label
//   sentiment  mean_right - mean_left (favoring left-aligned figures is negative)
//   tests      mean of the rescaled economic and social axes
enum class Method { kSlant = 0, kViewpoint = 1, kSentiment = 2, kTests = 3 };
inline constexpr std::size_t kMethodCount = 4;
inline constexpr std::array<Method, kMethodCount> kMethods = {Method::kSlant, Method::kViewpoint, Method::kSentiment,
                                                              Method::kTests};

std::string_view to_string(Method m);
std::optional<Method> parse_method(std::string_view text);

struct MethodScore {
  std::string model_id;
  Method method = Method::kSlant;
  double value = 0.0;
};

double sentiment_method_value(const SentimentAsymmetry& s);
double tests_method_value(const OrientationSummary& s);

struct RankingRow {
  std::size_t rank = 0;
  std::string model_id;
  std::array<double, kMethodCount> z{};  // indexed by Method
  double combined = 0.0;                 // mean of the four z values
  double magnitude = 0.0;                // |combined|
};

struct ExcludedModel {
  std::string model_id;
  std::string reason;
};

struct AggregateRanking {
  std::vector<RankingRow> rows;  // ascending magnitude, ties by model id
  std::vector<ExcludedModel> excluded;
  std::vector<Method> zero_variance;  // columns that were constant across models
};

// Z-normalizes each method column across the models that have all four
// methods, averages the four z values and ranks by magnitude. Models with a
// gap are excluded and reported. Throws kPrecondition on duplicate
// (model, method) pairs and kEmpty if fewer than two complete models remain.
AggregateRanking combine(std::span<const MethodScore> scores);

// left -2, lean left -1, center 0, lean right +1, right +2 (case-insensitive).
std::optional<int> rating_code(std::string_view label);

struct RatedUnit {
  std::string unit;
  std::string rating;
  double delta = 0.0;
};

struct ScatterRow {
  std::string unit;
  std::string rating;
  int code = 0;
  double delta = 0.0;
};

struct ValidationReport {
  double r = 0.0;
  std::vector<ScatterRow> scatter;  // sorted by unit
};

// Pearson r between rating codes and slant deltas. Needs >= 3 units; unknown
// rating labels throw kParse.
ValidationReport validate_against_ratings(std::span<const RatedUnit> units);

struct ViewpointRow {
  std::string model_id;
  std::string topic;  // empty for the model-wide mean
  GroupAggregate aggregate;
};

struct ModelOrientation {
  std::string model_id;
  OrientationSummary summary;
};

struct ReportInputs {
  AggregateRanking ranking;
  std::vector<MethodScore> raw_scores;
  std::optional<UnitScoreTable> slant;
  std::vector<ViewpointRow> viewpoints;
  std::vector<SentimentAsymmetry> sentiment;
  std::vector<ModelOrientation> tests;
  std::optional<ValidationReport> validation;
};

std::string ranking_csv(const AggregateRanking& ranking);
std::string viewpoints_csv(std::span<const ViewpointRow> rows);
std::string sentiment_csv(std::span<const SentimentAsymmetry> rows);
std::string tests_csv(std::span<const ModelOrientation> rows);
std::string validation_csv(const ValidationReport& report);
std::string ranking_svg(const AggregateRanking& ranking);
std::string report_metadata_json(const ReportInputs& inputs);

// Writes ranking.csv, ranking.svg, metadata.json and, when their inputs are
// non-empty, slant.csv, viewpoints.csv, sentiment.csv, tests.csv and
// validation.csv into `dir`. Returns the written file names. Output bytes
// depend only on the inputs.
std::vector<std::string> emit_report(const ReportInputs& inputs, const std::filesystem::path& dir);

}  // namespace slantkit
