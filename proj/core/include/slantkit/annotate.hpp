#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "slantkit/harvest.hpp"
#include "slantkit/stats.hpp"

namespace slantkit {

enum class LabelFamily { kViewpoint, kSentiment };

std::string_view to_string(LabelFamily family);

// A categorical judge label and its fixed numeric image:
//   viewpoint  left -1, centrist 0, right +1
//   sentiment  negative -1, neutral 0, positive +1
struct Label {
  LabelFamily family = LabelFamily::kViewpoint;
  int value = 0;

  std::string_view name() const;
  friend bool operator==(const Label&, const Label&) = default;
};

// Case-insensitive match of a single-word judge answer, tolerating quotes,
// trailing punctuation and the "-leaning" suffix. nullopt if unparseable.
std::optional<Label> parse_label(LabelFamily family, std::string_view judge_output);

// The allowed answer the judge picked, or nullopt for invalid.
std::optional<std::string> parse_stance(std::string_view judge_output, std::span<const std::string> allowed);

// Prompt templates for the judge. Placeholders: {text}, {figure},
// {statement}, {answers}, {response}.
struct JudgeRubrics {
  std::string viewpoint;
  std::string sentiment;
  std::string stance;

  // Loads viewpoint.txt, sentiment.txt and stance.txt from `dir`.
  static JudgeRubrics load(const std::filesystem::path& dir);
};

// Replaces each {name} placeholder in a single left-to-right pass, so values
// are never themselves rescanned. Unknown placeholders are left as is.
std::string fill_placeholders(std::string_view text, const std::map<std::string, std::string, std::less<>>& values);

struct LabelOutcome {
  std::optional<Label> label;  // nullopt = annotation failure
  std::string judge_output;
  std::string failure;         // reason when label is empty
};

struct StanceResult {
  std::optional<std::string> chosen;  // nullopt = invalid
  std::string judge_output;

  bool valid() const { return chosen.has_value(); }
};

struct SentimentInput {
  std::string text;
  std::string figure;
};

struct StanceInput {
  std::string response;
  std::string statement;
  std::vector<std::string> allowed_answers;
};

// A judge model behind the shared execution engine.
class Judge {
 public:
  Judge(ExecutionEngine& engine, std::string endpoint, JudgeRubrics rubrics, double temperature = 0.0);

  // Throws kPrecondition if any text is empty.
  std::vector<LabelOutcome> classify_viewpoints(std::span<const std::string> texts);
  std::vector<LabelOutcome> classify_sentiments(std::span<const SentimentInput> inputs);
  // Throws kPrecondition if an item has no allowed answers.
  std::vector<StanceResult> detect_stances(std::span<const StanceInput> inputs);

  LabelOutcome classify_viewpoint(const std::string& text);
  LabelOutcome classify_sentiment(const std::string& text, const std::string& figure);
  StanceResult detect_stance(const std::string& response, const std::string& statement,
                             std::span<const std::string> allowed_answers);

  const std::string& endpoint() const noexcept { return endpoint_; }

 private:
  std::vector<LabelOutcome> run_labels(LabelFamily family, std::vector<std::string> prompts);
  ChatJob make_job(std::string_view task, std::string prompt) const;

  ExecutionEngine& engine_;
  std::string endpoint_;
  JudgeRubrics rubrics_;
  double temperature_;
};

// One annotated generation record.
struct Annotation {
  std::string record_id;
  std::string model_id;
  std::string slot_value;  // topic or figure name
  LabelFamily family = LabelFamily::kViewpoint;
  LabelOutcome outcome;
};

std::string annotation_to_json(const Annotation& a);
Annotation annotation_from_json(std::string_view line, const std::string& source_name, std::size_t line_no);
void write_annotations(const std::filesystem::path& path, std::span<const Annotation> annotations);
std::vector<Annotation> read_annotations(const std::filesystem::path& path);

struct LabeledItem {
  std::string group;
  LabelFamily family = LabelFamily::kViewpoint;
  std::optional<int> value;  // nullopt = annotation failure
};

struct GroupAggregate {
  std::string group;
  double mean = 0.0;
  std::size_t n = 0;         // valid labels
  std::size_t failures = 0;

  // More than 5% of the group's annotations failed.
  bool failure_warning() const { return failures * 20 > n + failures; }
};

// Mean numeric label per group, failures excluded but counted. Output is
// sorted by group. Throws kEmpty for empty input or a group with no valid
// labels, kPrecondition when label families are mixed.
std::vector<GroupAggregate> aggregate_labels(std::span<const LabeledItem> items);

// aggregate CSV: group,mean,n,failures,failure_warning
std::string aggregates_csv(std::span<const GroupAggregate> rows, std::string_view group_column);

struct SentimentObservation {
  std::string model_id;
  Alignment alignment = Alignment::kCenter;
  int value = 0;
};

struct SentimentAsymmetry {
  std::string model_id;
  double mean_left = 0.0;
  double mean_right = 0.0;
  std::size_t n_left = 0;
  std::size_t n_right = 0;
  stats::WelchResult test;  // left group first: t > 0 means left figures fare better
  bool significant = false;  // p < alpha
};

// Welch test of left- versus right-aligned figure sentiment per model.
// Center-aligned figures are ignored. Output sorted by model.
std::vector<SentimentAsymmetry> sentiment_asymmetry(std::span<const SentimentObservation> observations,
                                                    double alpha = 0.01);

}  // namespace slantkit
