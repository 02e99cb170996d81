#include <algorithm>
#include <tuple>

#include <json.hpp>

#include "slantkit/aggregate.hpp"
#include "slantkit/text_io.hpp"

namespace slantkit {

namespace {

using json = nlohmann::json;

constexpr std::string_view kAllTopics = "(all)";
constexpr std::string_view kAllTests = "(mean)";

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace

std::string ranking_csv(const AggregateRanking& ranking) {
  CsvWriter w{"rank", "model", "z_slant", "z_viewpoint", "z_sentiment", "z_tests", "combined", "magnitude"};
  for (const auto& row : ranking.rows) {
    w.cell(row.rank).cell(row.model_id);
    for (double z : row.z) w.cell(z);
    w.cell(row.combined).cell(row.magnitude);
    w.end_row();
  }
  return w.str();
}

std::string viewpoints_csv(std::span<const ViewpointRow> rows) {
  CsvWriter w{"model", "topic", "mean", "n", "failures", "failure_warning"};
  for (const auto& r : rows) {
    w.cell(r.model_id).cell(r.topic.empty() ? kAllTopics : std::string_view(r.topic));
    w.cell(r.aggregate.mean).cell(r.aggregate.n).cell(r.aggregate.failures);
    w.cell(r.aggregate.failure_warning() ? "true" : "false");
    w.end_row();
  }
  return w.str();
}

std::string sentiment_csv(std::span<const SentimentAsymmetry> rows) {
  CsvWriter w{"model", "mean_left", "mean_right", "n_left", "n_right", "t", "df", "p", "significant", "degenerate"};
  for (const auto& r : rows) {
    w.cell(r.model_id).cell(r.mean_left).cell(r.mean_right).cell(r.n_left).cell(r.n_right);
    w.cell(r.test.t).cell(r.test.df).cell(r.test.p);
    w.cell(r.significant ? "true" : "false").cell(r.test.degenerate ? "true" : "false");
    w.end_row();
  }
  return w.str();
}

std::string tests_csv(std::span<const ModelOrientation> rows) {
  CsvWriter w{"model", "test", "econ", "social", "runs_used", "runs_excluded"};
  for (const auto& m : rows) {
    std::size_t used = 0, excluded = 0;
    for (const auto& t : m.summary.tests) {
      w.cell(m.model_id).cell(t.test_id).cell(t.econ).cell(t.social).cell(t.runs_used).cell(t.runs_excluded);
      w.end_row();
      used += t.runs_used;
      excluded += t.runs_excluded;
    }
    w.cell(m.model_id).cell(kAllTests).cell(m.summary.econ).cell(m.summary.social).cell(used).cell(excluded);
    w.end_row();
  }
  return w.str();
}

std::string validation_csv(const ValidationReport& report) {
  CsvWriter w{"unit", "rating", "code", "delta"};
  for (const auto& r : report.scatter) {
    w.cell(r.unit).cell(r.rating).cell(r.code).cell(r.delta);
    w.end_row();
  }
  return w.str();
}

std::string ranking_svg(const AggregateRanking& ranking) {
  constexpr int kRowHeight = 28;
  constexpr int kLabelWidth = 220;
  constexpr int kBarWidth = 420;
  constexpr int kTop = 40;
  const int height = kTop + static_cast<int>(ranking.rows.size()) * kRowHeight + 20;
  const int width = kLabelWidth + kBarWidth + 120;

  double max_mag = 0.0;
  for (const auto& r : ranking.rows) max_mag = std::max(max_mag, r.magnitude);
  if (max_mag == 0.0) max_mag = 1.0;

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
       std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) + " " + std::to_string(height) +
       "\" font-family=\"sans-serif\" font-size=\"13\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"10\" y=\"22\" font-size=\"15\" font-weight=\"bold\">Combined bias magnitude |mean z| "
       "(least to most)</text>\n";
  for (std::size_t i = 0; i < ranking.rows.size(); ++i) {
    const auto& r = ranking.rows[i];
    const int y = kTop + static_cast<int>(i) * kRowHeight;
    const double w = kBarWidth * r.magnitude / max_mag;
    // Blue for left-leaning combined scores, red for right-leaning.
    const char* color = r.combined < 0 ? "#3b6fb6" : (r.combined > 0 ? "#c0392b" : "#888888");
    s += "<text x=\"" + std::to_string(kLabelWidth - 8) + "\" y=\"" + std::to_string(y + 18) +
         "\" text-anchor=\"end\">" + std::to_string(r.rank) + ". " + xml_escape(r.model_id) + "</text>\n";
    s += "<rect x=\"" + std::to_string(kLabelWidth) + "\" y=\"" + std::to_string(y + 4) + "\" width=\"" +
         format_fixed(w, 2) + "\" height=\"" + std::to_string(kRowHeight - 8) + "\" fill=\"" + color + "\"/>\n";
    s += "<text x=\"" + format_fixed(kLabelWidth + w + 6, 2) + "\" y=\"" + std::to_string(y + 18) + "\">" +
         format_fixed(r.combined, 3) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

std::string report_metadata_json(const ReportInputs& inputs) {
  json j;
  j["ranking_key"] = "magnitude";
  j["ranking_key_note"] =
      "rows are ordered by |mean z|; z-scores are centered on the evaluated model set, so magnitude is "
      "relative to that population, not to absolute neutrality. The signed combined column is also reported.";
  j["orientation"] = "negative values lean left for every method";
  j["models_ranked"] = inputs.ranking.rows.size();
  json excluded = json::array();
  for (const auto& e : inputs.ranking.excluded) excluded.push_back({{"model", e.model_id}, {"reason", e.reason}});
  j["excluded_models"] = excluded;
  json zero = json::array();
  for (Method m : inputs.ranking.zero_variance) zero.push_back(std::string(to_string(m)));
  j["zero_variance_methods"] = zero;
  json raw = json::array();
  auto scores = inputs.raw_scores;
  std::sort(scores.begin(), scores.end(), [](const MethodScore& a, const MethodScore& b) {
    return std::tie(a.model_id, a.method) < std::tie(b.model_id, b.method);
  });
  for (const auto& s : scores) {
    raw.push_back({{"model", s.model_id}, {"method", std::string(to_string(s.method))}, {"value", format_number(s.value)}});
  }
  j["raw_scores"] = raw;
  if (inputs.validation) j["validation_pearson_r"] = format_number(inputs.validation->r);
  json warnings = json::array();
  for (const auto& v : inputs.viewpoints) {
    if (v.aggregate.failure_warning()) {
      warnings.push_back("viewpoint annotation failures above 5% for " + v.model_id +
                         (v.topic.empty() ? std::string() : " / " + v.topic));
    }
  }
  j["warnings"] = warnings;
  return j.dump(2) + "\n";
}

std::vector<std::string> emit_report(const ReportInputs& inputs, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> written;
  auto emit = [&](std::string name, const std::string& content) {
    write_file(dir / name, content);
    written.push_back(std::move(name));
  };
  emit("ranking.csv", ranking_csv(inputs.ranking));
  if (inputs.slant && !inputs.slant->scored.empty()) emit("slant.csv", slant_scores_csv(*inputs.slant));
  if (!inputs.viewpoints.empty()) emit("viewpoints.csv", viewpoints_csv(inputs.viewpoints));
  if (!inputs.sentiment.empty()) emit("sentiment.csv", sentiment_csv(inputs.sentiment));
  if (!inputs.tests.empty()) emit("tests.csv", tests_csv(inputs.tests));
  if (inputs.validation && !inputs.validation->scatter.empty()) emit("validation.csv", validation_csv(*inputs.validation));
  emit("ranking.svg", ranking_svg(inputs.ranking));
  emit("metadata.json", report_metadata_json(inputs));
  return written;
}

}  // namespace slantkit
