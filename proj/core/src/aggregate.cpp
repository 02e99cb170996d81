#include "slantkit/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "slantkit/error.hpp"
#include "slantkit/stats.hpp"
#include "slantkit/text_io.hpp"

namespace slantkit {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::kSlant: return "slant";
    case Method::kViewpoint: return "viewpoint";
    case Method::kSentiment: return "sentiment";
    case Method::kTests: return "tests";
  }
  return "slant";
}

std::optional<Method> parse_method(std::string_view text) {
  for (Method m : kMethods) {
    if (to_string(m) == text) return m;
  }
  return std::nullopt;
}

double sentiment_method_value(const SentimentAsymmetry& s) { return -(s.mean_left - s.mean_right); }

double tests_method_value(const OrientationSummary& s) { return 0.5 * (s.econ + s.social); }

AggregateRanking combine(std::span<const MethodScore> scores) {
  std::map<std::string, std::array<std::optional<double>, kMethodCount>> matrix;
  for (const auto& s : scores) {
    auto& slot = matrix[s.model_id][static_cast<std::size_t>(s.method)];
    if (slot) {
      throw Error(ErrorKind::kPrecondition,
                  "duplicate " + std::string(to_string(s.method)) + " score for model '" + s.model_id + "'");
    }
    slot = s.value;
  }

  AggregateRanking out;
  std::vector<std::string> models;
  for (const auto& [model, row] : matrix) {
    std::string missing;
    for (Method m : kMethods) {
      if (!row[static_cast<std::size_t>(m)]) missing += (missing.empty() ? "" : ", ") + std::string(to_string(m));
    }
    if (missing.empty()) {
      models.push_back(model);
    } else {
      out.excluded.push_back({model, "missing " + missing});
    }
  }
  if (models.size() < 2) {
    throw Error(ErrorKind::kEmpty, "combine: need at least two models with all four methods, have " +
                                       std::to_string(models.size()));
  }

  out.rows.resize(models.size());
  for (std::size_t i = 0; i < models.size(); ++i) out.rows[i].model_id = models[i];
  for (Method m : kMethods) {
    const auto col = static_cast<std::size_t>(m);
    std::vector<double> raw;
    raw.reserve(models.size());
    for (const auto& model : models) raw.push_back(*matrix[model][col]);
    const auto z = stats::zscore_normalize(raw);
    if (z.zero_variance) out.zero_variance.push_back(m);
    for (std::size_t i = 0; i < models.size(); ++i) out.rows[i].z[col] = z.values[i];
  }
  for (auto& row : out.rows) {
    double sum = 0.0;
    for (double v : row.z) sum += v;
    row.combined = sum / static_cast<double>(kMethodCount);
    row.magnitude = std::fabs(row.combined);
  }
  std::sort(out.rows.begin(), out.rows.end(), [](const RankingRow& a, const RankingRow& b) {
    if (a.magnitude != b.magnitude) return a.magnitude < b.magnitude;
    return a.model_id < b.model_id;
  });
  for (std::size_t i = 0; i < out.rows.size(); ++i) out.rows[i].rank = i + 1;
  return out;
}

std::optional<int> rating_code(std::string_view label) {
  std::string s = to_lower_ascii(trim(label));
  std::replace(s.begin(), s.end(), '_', ' ');
  std::replace(s.begin(), s.end(), '-', ' ');
  if (s == "left") return -2;
  if (s == "lean left") return -1;
  if (s == "center" || s == "centre") return 0;
  if (s == "lean right") return 1;
  if (s == "right") return 2;
  return std::nullopt;
}

ValidationReport validate_against_ratings(std::span<const RatedUnit> units) {
  if (units.size() < 3) {
    throw Error(ErrorKind::kPrecondition, "validation needs at least 3 rated units, got " + std::to_string(units.size()));
  }
  ValidationReport out;
  for (const auto& u : units) {
    const auto code = rating_code(u.rating);
    if (!code) throw Error(ErrorKind::kParse, "unit '" + u.unit + "': unknown rating label '" + u.rating + "'");
    out.scatter.push_back({u.unit, u.rating, *code, u.delta});
  }
  std::sort(out.scatter.begin(), out.scatter.end(),
            [](const ScatterRow& a, const ScatterRow& b) { return a.unit < b.unit; });
  std::vector<double> codes, deltas;
  for (const auto& row : out.scatter) {
    codes.push_back(row.code);
    deltas.push_back(row.delta);
  }
  out.r = stats::pearson(codes, deltas);
  return out;
}

}  // namespace slantkit
