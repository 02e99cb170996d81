#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "helpers.hpp"
#include "slantkit/aggregate.hpp"
#include "slantkit/error.hpp"

using namespace slantkit;

namespace {

std::vector<MethodScore> matrix(const std::map<std::string, std::array<double, 4>>& rows) {
  std::vector<MethodScore> out;
  for (const auto& [model, values] : rows) {
    for (Method m : kMethods) out.push_back({model, m, values[static_cast<std::size_t>(m)]});
  }
  return out;
}

std::vector<std::string> order(const AggregateRanking& r) {
  std::vector<std::string> out;
  for (const auto& row : r.rows) out.push_back(row.model_id);
  return out;
}

// Column-wise z-scores with the population sigma, then row means, all in
// long double, the way one would lay it out in a spreadsheet.
std::map<std::string, long double> spreadsheet_combined(const std::map<std::string, std::array<double, 4>>& rows) {
  std::map<std::string, long double> combined;
  for (std::size_t col = 0; col < 4; ++col) {
    long double mu = 0;
    for (const auto& [_, v] : rows) mu += v[col];
    mu /= rows.size();
    long double ss = 0;
    for (const auto& [_, v] : rows) ss += (v[col] - mu) * (v[col] - mu);
    const long double sigma = std::sqrt(ss / rows.size());
    for (const auto& [model, v] : rows) combined[model] += (v[col] - mu) / sigma / 4;
  }
  return combined;
}

}  // namespace

TEST_SUITE("aggregate") {
  TEST_CASE("method orientation") {
    SentimentAsymmetry s;
    s.mean_left = 0.8;
    s.mean_right = -0.2;
    CHECK(sentiment_method_value(s) == doctest::Approx(-1.0));
    OrientationSummary o;
    o.econ = -0.4;
    o.social = 0.2;
    CHECK(tests_method_value(o) == doctest::Approx(-0.1));
    for (Method m : kMethods) CHECK(parse_method(to_string(m)) == m);
    CHECK_FALSE(parse_method("vibes").has_value());
  }

  TEST_CASE("four-model fixture matches a spreadsheet recomputation") {
    const std::map<std::string, std::array<double, 4>> rows = {
        {"alpha", {-0.02, -0.6, -0.9, -0.3}},
        {"beta", {0.01, 0.1, 0.2, 0.05}},
        {"gamma", {-0.01, -0.2, -0.1, -0.1}},
        {"delta", {0.03, 0.5, 0.4, 0.25}},
    };
    const auto ranking = combine(matrix(rows));
    const auto expected = spreadsheet_combined(rows);
    REQUIRE(ranking.rows.size() == 4);
    std::vector<std::pair<long double, std::string>> by_mag;
    for (const auto& [m, c] : expected) by_mag.emplace_back(std::fabs(c), m);
    std::sort(by_mag.begin(), by_mag.end());
    for (std::size_t i = 0; i < 4; ++i) {
      const auto& row = ranking.rows[i];
      CHECK(row.rank == i + 1);
      CHECK(row.model_id == by_mag[i].second);
      CHECK(row.combined == doctest::Approx(static_cast<double>(expected.at(row.model_id))).epsilon(1e-12));
      CHECK(row.magnitude == std::fabs(row.combined));
    }
    CHECK(ranking.excluded.empty());
  }

  TEST_CASE("mirror-image models tie and break by id") {
    const auto ranking = combine(matrix({{"b", {1, 2, 3, 4}}, {"a", {-1, -2, -3, -4}}}));
    REQUIRE(ranking.rows.size() == 2);
    CHECK(ranking.rows[0].magnitude == ranking.rows[1].magnitude);
    CHECK(ranking.rows[0].model_id == "a");
    CHECK(ranking.rows[1].rank == 2);
  }

  TEST_CASE("gaps exclude a model, duplicates and tiny sets are errors") {
    auto scores = matrix({{"a", {1, 2, 3, 4}}, {"b", {2, 1, 0, 4}}, {"c", {0, 0, 0, 0}}});
    scores.erase(std::remove_if(scores.begin(), scores.end(),
                                [](const MethodScore& s) { return s.model_id == "c" && s.method == Method::kTests; }),
                 scores.end());
    const auto r = combine(scores);
    CHECK(r.rows.size() == 2);
    REQUIRE(r.excluded.size() == 1);
    CHECK(r.excluded[0].model_id == "c");
    CHECK(r.excluded[0].reason.find("tests") != std::string::npos);
    REQUIRE(r.zero_variance.size() == 1);
    CHECK(r.zero_variance[0] == Method::kTests);

    scores.push_back({"a", Method::kSlant, 0.0});
    CHECK_THROWS_AS(combine(scores), Error);
    CHECK_THROWS_AS(combine(matrix({{"only", {1, 2, 3, 4}}})), Error);
  }

  TEST_CASE("property: z columns are centered, ranks are a permutation, negation keeps ranks") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0, 1);
    for (int trial = 0; trial < 100; ++trial) {
      std::map<std::string, std::array<double, 4>> rows, negated;
      for (int m = 0; m < 10; ++m) {
        std::array<double, 4> v{g(rng), g(rng), g(rng), g(rng)};
        rows["m" + std::to_string(m)] = v;
        for (auto& x : v) x = -x;
        negated["m" + std::to_string(m)] = v;
      }
      const auto r = combine(matrix(rows));
      const auto n = combine(matrix(negated));
      std::vector<std::size_t> ranks;
      for (std::size_t col = 0; col < 4; ++col) {
        double sum = 0;
        for (const auto& row : r.rows) sum += row.z[col];
        CHECK(std::fabs(sum / 10) < 1e-12);
      }
      for (const auto& row : r.rows) ranks.push_back(row.rank);
      std::sort(ranks.begin(), ranks.end());
      for (std::size_t i = 0; i < ranks.size(); ++i) CHECK(ranks[i] == i + 1);
      CHECK(order(r) == order(n));
      for (std::size_t i = 0; i < r.rows.size(); ++i) {
        CHECK(n.rows[i].combined == doctest::Approx(-r.rows[i].combined).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("property: positive affine rescaling of one column keeps the ranking") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0, 1);
    std::uniform_real_distribution<double> u(0.01, 100);
    for (int trial = 0; trial < 100; ++trial) {
      std::map<std::string, std::array<double, 4>> rows;
      for (int m = 0; m < 10; ++m) rows["m" + std::to_string(m)] = {g(rng), g(rng), g(rng), g(rng)};
      auto scaled = rows;
      const std::size_t col = rng() % 4;
      const double a = u(rng), b = g(rng) * 10;
      for (auto& [_, v] : scaled) v[col] = a * v[col] + b;
      CHECK(order(combine(matrix(rows))) == order(combine(matrix(scaled))));
    }
  }

  TEST_CASE("rating codes") {
    CHECK(rating_code("left") == -2);
    CHECK(rating_code("Lean Left") == -1);
    CHECK(rating_code("center") == 0);
    CHECK(rating_code("lean-right") == 1);
    CHECK(rating_code("RIGHT") == 2);
    CHECK_FALSE(rating_code("far left").has_value());
  }

  TEST_CASE("validation against ratings") {
    const std::vector<std::string> labels = {"left", "lean left", "center", "lean right", "right"};
    std::vector<RatedUnit> units;
    for (int i = 0; i < 5; ++i) units.push_back({"u" + std::to_string(i), labels[i], -0.1 + 0.05 * i});
    const auto rep = validate_against_ratings(units);
    CHECK(rep.r == doctest::Approx(1.0).epsilon(1e-12));
    REQUIRE(rep.scatter.size() == 5);
    CHECK(rep.scatter[0].code == -2);
    CHECK(validation_csv(rep).rfind("unit,rating,code,delta\n", 0) == 0);

    units[0].rating = "extreme";
    CHECK_THROWS_AS(validate_against_ratings(units), Error);
    units.resize(2);
    CHECK_THROWS_AS(validate_against_ratings(units), Error);
  }

  TEST_CASE("report omits empty sections and is deterministic") {
    ReportInputs in;
    in.raw_scores = matrix({{"a", {1, 2, 3, 4}}, {"b", {2, 1, 0, 4}}});
    in.ranking = combine(in.raw_scores);
    testutil::TempDir dir;
    auto files = emit_report(in, dir / "r1");
    std::sort(files.begin(), files.end());
    CHECK(files == std::vector<std::string>{"metadata.json", "ranking.csv", "ranking.svg"});
    CHECK_FALSE(std::filesystem::exists(dir / "r1" / "viewpoints.csv"));

    GroupAggregate g;
    g.group = "(all)";
    g.mean = -0.5;
    g.n = 10;
    in.viewpoints.push_back({"a", "", g});
    files = emit_report(in, dir / "r2");
    CHECK(std::find(files.begin(), files.end(), "viewpoints.csv") != files.end());
    emit_report(in, dir / "r3");
    for (const auto& f : files) CHECK(read_file(dir / "r2" / f) == read_file(dir / "r3" / f));

    const auto csv = ranking_csv(in.ranking);
    CHECK(csv.rfind("rank,model,z_slant,z_viewpoint,z_sentiment,z_tests,combined,magnitude\n", 0) == 0);
    CHECK(csv.find('\r') == std::string::npos);
    const auto meta = read_file(dir / "r2" / "metadata.json");
    CHECK(meta.find("\"ranking_key\": \"magnitude\"") != std::string::npos);
    CHECK(ranking_svg(in.ranking).rfind("<svg", 0) == 0);
  }
}
