#include "slantkit/annotate.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "slantkit/error.hpp"
#include "slantkit/random.hpp"
#include "slantkit/text_io.hpp"

namespace slantkit {

namespace {

using json = nlohmann::json;

// Lowercase, trim, strip wrapping quotes/asterisks and trailing punctuation.
std::string normalize_answer(std::string_view raw) {
  std::string s = to_lower_ascii(trim(raw));
  auto strip = [&](std::string_view chars) {
    while (!s.empty() && chars.find(s.front()) != std::string_view::npos) s.erase(0, 1);
    while (!s.empty() && chars.find(s.back()) != std::string_view::npos) s.pop_back();
  };
  strip("\"'`*_ \t\r\n.!,;:");
  return s;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string_view to_string(LabelFamily family) {
  return family == LabelFamily::kViewpoint ? "viewpoint" : "sentiment";
}

std::string_view Label::name() const {
  static constexpr std::string_view kViewpoint[] = {"left", "centrist", "right"};
  static constexpr std::string_view kSentiment[] = {"negative", "neutral", "positive"};
  const auto idx = static_cast<std::size_t>(value + 1);
  return family == LabelFamily::kViewpoint ? kViewpoint[idx] : kSentiment[idx];
}

std::optional<Label> parse_label(LabelFamily family, std::string_view judge_output) {
  std::string s = normalize_answer(judge_output);
  if (family == LabelFamily::kViewpoint) {
    for (std::string_view suffix : {"-leaning", " leaning"}) {
      if (s.size() > suffix.size() && s.ends_with(suffix)) s.resize(s.size() - suffix.size());
    }
    if (s == "left") return Label{family, -1};
    if (s == "centrist" || s == "center" || s == "centre") return Label{family, 0};
    if (s == "right") return Label{family, +1};
    return std::nullopt;
  }
  if (s == "negative") return Label{family, -1};
  if (s == "neutral") return Label{family, 0};
  if (s == "positive") return Label{family, +1};
  return std::nullopt;
}

std::optional<std::string> parse_stance(std::string_view judge_output, std::span<const std::string> allowed) {
  const std::string s = normalize_answer(judge_output);
  for (const auto& a : allowed) {
    if (normalize_answer(a) == s) return a;
  }
  return std::nullopt;
}

JudgeRubrics JudgeRubrics::load(const std::filesystem::path& dir) {
  JudgeRubrics r;
  r.viewpoint = read_file(dir / "viewpoint.txt");
  r.sentiment = read_file(dir / "sentiment.txt");
  r.stance = read_file(dir / "stance.txt");
  for (const auto* s : {&r.viewpoint, &r.sentiment, &r.stance}) {
    if (trim(*s).empty()) throw Error(ErrorKind::kConfig, "empty judge rubric in " + dir.string());
  }
  return r;
}

std::string fill_placeholders(std::string_view text, const std::map<std::string, std::string, std::less<>>& values) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '{') {
      const auto close = text.find('}', i + 1);
      if (close != std::string_view::npos) {
        const auto it = values.find(text.substr(i + 1, close - i - 1));
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(text[i++]);
  }
  return out;
}

// ---------------------------------------------------------------- judge

Judge::Judge(ExecutionEngine& engine, std::string endpoint, JudgeRubrics rubrics, double temperature)
    : engine_(engine), endpoint_(std::move(endpoint)), rubrics_(std::move(rubrics)), temperature_(temperature) {
  engine_.endpoint(endpoint_);  // throws for an unknown judge
}

ChatJob Judge::make_job(std::string_view task, std::string prompt) const {
  ChatJob job;
  job.cache_key = json::array({"judge", endpoint_, task, hex64(fnv1a64(prompt))}).dump();
  job.endpoint = endpoint_;
  job.prompt = std::move(prompt);
  job.temperature = temperature_;
  return job;
}

std::vector<LabelOutcome> Judge::run_labels(LabelFamily family, std::vector<std::string> prompts) {
  std::vector<ChatJob> jobs;
  jobs.reserve(prompts.size());
  for (auto& p : prompts) jobs.push_back(make_job(to_string(family), std::move(p)));
  const auto results = engine_.run(jobs);

  std::vector<LabelOutcome> out(results.size());
  for (std::size_t i = 0; i < results.size(); ++i) {
    auto& o = out[i];
    o.judge_output = results[i].text;
    if (results[i].status != RecordStatus::kOk) {
      o.failure = results[i].status == RecordStatus::kRefused ? "judge refused" : "judge unreachable: " + results[i].error;
      continue;
    }
    o.label = parse_label(family, results[i].text);
    if (!o.label) o.failure = "unparseable judge output";
  }
  return out;
}

std::vector<LabelOutcome> Judge::classify_viewpoints(std::span<const std::string> texts) {
  std::vector<std::string> prompts;
  for (const auto& t : texts) {
    if (trim(t).empty()) throw Error(ErrorKind::kPrecondition, "classify_viewpoint: empty text");
    prompts.push_back(fill_placeholders(rubrics_.viewpoint, {{"text", t}}));
  }
  return run_labels(LabelFamily::kViewpoint, std::move(prompts));
}

std::vector<LabelOutcome> Judge::classify_sentiments(std::span<const SentimentInput> inputs) {
  std::vector<std::string> prompts;
  for (const auto& in : inputs) {
    if (trim(in.text).empty()) throw Error(ErrorKind::kPrecondition, "classify_sentiment: empty text");
    if (trim(in.figure).empty()) throw Error(ErrorKind::kPrecondition, "classify_sentiment: no figure named");
    prompts.push_back(fill_placeholders(rubrics_.sentiment, {{"text", in.text}, {"figure", in.figure}}));
  }
  return run_labels(LabelFamily::kSentiment, std::move(prompts));
}

std::vector<StanceResult> Judge::detect_stances(std::span<const StanceInput> inputs) {
  std::vector<ChatJob> jobs;
  std::vector<std::size_t> sent;  // input index of each job
  std::vector<StanceResult> out(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto& in = inputs[i];
    if (in.allowed_answers.empty()) throw Error(ErrorKind::kPrecondition, "detect_stance: no allowed answers");
    // Empty responses are refusals and need no judge.
    if (trim(in.response).empty()) continue;
    std::string answers;
    for (const auto& a : in.allowed_answers) {
      if (!answers.empty()) answers += ", ";
      answers += a;
    }
    jobs.push_back(make_job("stance", fill_placeholders(rubrics_.stance, {{"statement", in.statement},
                                                                           {"answers", answers},
                                                                           {"response", in.response}})));
    sent.push_back(i);
  }
  const auto results = engine_.run(jobs);
  for (std::size_t k = 0; k < results.size(); ++k) {
    auto& o = out[sent[k]];
    o.judge_output = results[k].text;
    if (results[k].status == RecordStatus::kOk) {
      o.chosen = parse_stance(results[k].text, inputs[sent[k]].allowed_answers);
    }
  }
  return out;
}

LabelOutcome Judge::classify_viewpoint(const std::string& text) {
  return classify_viewpoints(std::span<const std::string>(&text, 1)).front();
}

LabelOutcome Judge::classify_sentiment(const std::string& text, const std::string& figure) {
  const SentimentInput in{text, figure};
  return classify_sentiments(std::span<const SentimentInput>(&in, 1)).front();
}

StanceResult Judge::detect_stance(const std::string& response, const std::string& statement,
                                  std::span<const std::string> allowed_answers) {
  const StanceInput in{response, statement, {allowed_answers.begin(), allowed_answers.end()}};
  return detect_stances(std::span<const StanceInput>(&in, 1)).front();
}

// ---------------------------------------------------------------- persistence

std::string annotation_to_json(const Annotation& a) {
  json j = {{"record_id", a.record_id},
            {"model_id", a.model_id},
            {"slot_value", a.slot_value},
            {"family", std::string(to_string(a.family))},
            {"judge_output", a.outcome.judge_output}};
  if (a.outcome.label) {
    j["label"] = std::string(a.outcome.label->name());
    j["value"] = a.outcome.label->value;
  } else {
    j["label"] = nullptr;
    j["value"] = nullptr;
    j["failure"] = a.outcome.failure;
  }
  return j.dump();
}

Annotation annotation_from_json(std::string_view line, const std::string& source_name, std::size_t line_no) {
  try {
    const json j = json::parse(line);
    Annotation a;
    a.record_id = j.at("record_id").get<std::string>();
    a.model_id = j.at("model_id").get<std::string>();
    a.slot_value = j.at("slot_value").get<std::string>();
    const auto family = j.at("family").get<std::string>();
    if (family == "viewpoint") {
      a.family = LabelFamily::kViewpoint;
    } else if (family == "sentiment") {
      a.family = LabelFamily::kSentiment;
    } else {
      throw ParseError(source_name, line_no, "unknown label family '" + family + "'");
    }
    a.outcome.judge_output = j.value("judge_output", std::string());
    if (!j.at("value").is_null()) {
      const int v = j.at("value").get<int>();
      if (v < -1 || v > 1) throw ParseError(source_name, line_no, "label value outside {-1, 0, 1}");
      a.outcome.label = Label{a.family, v};
    } else {
      a.outcome.failure = j.value("failure", std::string("annotation failure"));
    }
    return a;
  } catch (const json::exception& e) {
    throw ParseError(source_name, line_no, e.what());
  }
}

void write_annotations(const std::filesystem::path& path, std::span<const Annotation> annotations) {
  std::string out;
  for (const auto& a : annotations) out += annotation_to_json(a) + '\n';
  write_file(path, out);
}

std::vector<Annotation> read_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<Annotation> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) out.push_back(annotation_from_json(line, path.string(), line_no));
  }
  return out;
}

// ---------------------------------------------------------------- aggregation

std::vector<GroupAggregate> aggregate_labels(std::span<const LabeledItem> items) {
  if (items.empty()) throw Error(ErrorKind::kEmpty, "aggregate_labels: no labels");
  const LabelFamily family = items.front().family;
  struct Acc {
    long long sum = 0;
    std::size_t n = 0;
    std::size_t failures = 0;
  };
  std::map<std::string, Acc> groups;
  for (const auto& item : items) {
    if (item.family != family) throw Error(ErrorKind::kPrecondition, "aggregate_labels: mixed label families");
    auto& acc = groups[item.group];
    if (item.value) {
      acc.sum += *item.value;
      ++acc.n;
    } else {
      ++acc.failures;
    }
  }
  std::vector<GroupAggregate> out;
  for (const auto& [group, acc] : groups) {
    if (acc.n == 0) {
      throw Error(ErrorKind::kEmpty, "aggregate_labels: group '" + group + "' has no valid labels (" +
                                         std::to_string(acc.failures) + " failures)");
    }
    out.push_back({group, static_cast<double>(acc.sum) / static_cast<double>(acc.n), acc.n, acc.failures});
  }
  return out;
}

std::string aggregates_csv(std::span<const GroupAggregate> rows, std::string_view group_column) {
  CsvWriter w{group_column, "mean", "n", "failures", "failure_warning"};
  for (const auto& r : rows) {
    w.cell(r.group).cell(r.mean).cell(r.n).cell(r.failures).cell(r.failure_warning() ? "true" : "false");
    w.end_row();
  }
  return w.str();
}

std::vector<SentimentAsymmetry> sentiment_asymmetry(std::span<const SentimentObservation> observations,
                                                    double alpha) {
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_model;
  for (const auto& o : observations) {
    auto& groups = by_model[o.model_id];
    if (o.alignment == Alignment::kLeft) groups.first.push_back(o.value);
    if (o.alignment == Alignment::kRight) groups.second.push_back(o.value);
  }
  std::vector<SentimentAsymmetry> out;
  for (const auto& [model, groups] : by_model) {
    const auto& [left, right] = groups;
    if (left.empty() || right.empty()) {
      throw Error(ErrorKind::kEmpty, "sentiment_asymmetry: model '" + model + "' lacks a left or right group");
    }
    SentimentAsymmetry s;
    s.model_id = model;
    s.mean_left = stats::mean(left);
    s.mean_right = stats::mean(right);
    s.n_left = left.size();
    s.n_right = right.size();
    s.test = stats::welch_t_test(left, right);
    s.significant = s.test.p < alpha;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace slantkit
