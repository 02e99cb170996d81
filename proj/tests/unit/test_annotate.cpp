#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "helpers.hpp"
#include "oracles/oracles.hpp"
#include "slantkit/annotate.hpp"
#include "slantkit/error.hpp"
#include "slantkit/mock_server.hpp"

using namespace slantkit;

namespace {

const char* kJudge = R"({"models": {"judge": {"rules": [
  {"contains": ["classify the political viewpoint", "tax relief"], "responses": ["Right."]},
  {"contains": ["classify the political viewpoint", "voting rights"], "responses": ["left-leaning"]},
  {"contains": ["classify the political viewpoint", "weather"], "responses": ["I cannot determine"]},
  {"contains": ["classify the political viewpoint"], "responses": ["centrist"]},
  {"contains": ["rate the sentiment", "admired"], "responses": ["positive"]},
  {"contains": ["rate the sentiment"], "responses": ["\"Neutral\""]},
  {"contains": ["determine which", "strongly agree"], "responses": ["agree"]},
  {"contains": ["determine which", "as an ai"], "responses": ["invalid"]},
  {"contains": ["determine which", "maybe"], "responses": ["perhaps"]}
], "default": ["?"]}}})";

struct JudgeRig {
  FixtureTransport transport{MockFixture::parse(kJudge, "judge")};
  ResponseCache cache;
  ExecutionEngine engine{{testutil::endpoint("judge")}, transport, cache, testutil::quiet_engine()};
  Judge judge{engine, "judge", JudgeRubrics::load(testutil::data_dir() / "rubrics")};
};

}  // namespace

TEST_SUITE("annotate") {
  TEST_CASE("label parsing") {
    CHECK(parse_label(LabelFamily::kViewpoint, "left-leaning") == Label{LabelFamily::kViewpoint, -1});
    CHECK(parse_label(LabelFamily::kViewpoint, "Centrist") == Label{LabelFamily::kViewpoint, 0});
    CHECK(parse_label(LabelFamily::kViewpoint, "'RIGHT'.") == Label{LabelFamily::kViewpoint, 1});
    CHECK_FALSE(parse_label(LabelFamily::kViewpoint, "I cannot determine").has_value());
    CHECK_FALSE(parse_label(LabelFamily::kViewpoint, "positive").has_value());
    CHECK(parse_label(LabelFamily::kSentiment, "positive") == Label{LabelFamily::kSentiment, 1});
    CHECK(parse_label(LabelFamily::kSentiment, "neutral")->value == 0);
    CHECK(parse_label(LabelFamily::kSentiment, "Negative!")->value == -1);
  }

  TEST_CASE("label mapping is a bijection") {
    for (auto family : {LabelFamily::kViewpoint, LabelFamily::kSentiment}) {
      std::set<int> values;
      for (int v : {-1, 0, 1}) {
        const Label l{family, v};
        const auto back = parse_label(family, l.name());
        REQUIRE(back.has_value());
        CHECK(*back == l);
        values.insert(back->value);
      }
      CHECK(values.size() == 3);
    }
  }

  TEST_CASE("stance parsing") {
    const std::vector<std::string> allowed = {"Strongly agree", "agree", "disagree"};
    CHECK(parse_stance("AGREE", allowed) == "agree");
    CHECK(parse_stance("strongly agree.", allowed) == "Strongly agree");
    CHECK_FALSE(parse_stance("maybe", allowed).has_value());
  }

  TEST_CASE("placeholders are filled in one pass") {
    CHECK(fill_placeholders("a {x} b {y} {z}", {{"x", "{y}"}, {"y", "2"}}) == "a {y} b 2 {z}");
    CHECK(fill_placeholders("{", {}) == "{");
  }

  TEST_CASE("judge viewpoints through the engine") {
    JudgeRig rig;
    const std::vector<std::string> texts = {"We need tax relief now.", "Protect voting rights.",
                                            "The weather is nice.", "Roads need repair."};
    const auto out = rig.judge.classify_viewpoints(texts);
    REQUIRE(out.size() == 4);
    CHECK(out[0].label->value == 1);
    CHECK(out[1].label->value == -1);
    CHECK_FALSE(out[2].label.has_value());
    CHECK_FALSE(out[2].failure.empty());
    CHECK(out[2].judge_output == "I cannot determine");
    CHECK(out[3].label->value == 0);
    CHECK_THROWS_AS(rig.judge.classify_viewpoint("   "), Error);
  }

  TEST_CASE("judge sentiments") {
    JudgeRig rig;
    CHECK(rig.judge.classify_sentiment("Jane Doe is widely admired.", "Jane Doe").label->value == 1);
    CHECK(rig.judge.classify_sentiment("Jane Doe was born in 1950.", "Jane Doe").label->value == 0);
    CHECK_THROWS_AS(rig.judge.classify_sentiment("", "Jane Doe"), Error);
  }

  TEST_CASE("judge stances") {
    JudgeRig rig;
    const std::vector<std::string> ad = {"agree", "disagree"};
    CHECK(rig.judge.detect_stance("I strongly agree with this statement", "s", ad).chosen == "agree");
    CHECK_FALSE(rig.judge.detect_stance("As an AI I won't opine", "s", ad).valid());
    const auto odd = rig.judge.detect_stance("maybe", "s", ad);
    CHECK_FALSE(odd.valid());
    CHECK(odd.judge_output == "perhaps");
    CHECK_THROWS_AS(rig.judge.detect_stance("x", "s", {}), Error);
  }

  TEST_CASE("annotation jsonl round trip") {
    testutil::TempDir dir;
    std::vector<Annotation> rows(2);
    rows[0] = {"r1", "m", "energy", LabelFamily::kViewpoint, {Label{LabelFamily::kViewpoint, -1}, "left", ""}};
    rows[1] = {"r2", "m", "Jane Doe", LabelFamily::kSentiment, {std::nullopt, "hmm", "unparseable judge output"}};
    write_annotations(dir / "a.jsonl", rows);
    const auto back = read_annotations(dir / "a.jsonl");
    REQUIRE(back.size() == 2);
    CHECK(back[0].outcome.label == rows[0].outcome.label);
    CHECK(back[1].family == LabelFamily::kSentiment);
    CHECK_FALSE(back[1].outcome.label.has_value());
    CHECK(back[1].outcome.failure == rows[1].outcome.failure);
    CHECK(annotation_to_json(back[0]) == annotation_to_json(rows[0]));
    CHECK_THROWS_AS(annotation_from_json("{}", "x", 1), ParseError);
  }

  TEST_CASE("aggregate labels") {
    using V = LabelFamily;
    std::vector<LabeledItem> items = {{"g", V::kViewpoint, -1}, {"g", V::kViewpoint, 0}, {"g", V::kViewpoint, 1}};
    auto out = aggregate_labels(items);
    REQUIRE(out.size() == 1);
    CHECK(out[0].mean == 0.0);
    CHECK(out[0].n == 3);
    items = {{"g", V::kViewpoint, 1}, {"g", V::kViewpoint, 1}};
    CHECK(aggregate_labels(items)[0].mean == 1.0);
    CHECK_THROWS_AS(aggregate_labels(std::vector<LabeledItem>{}), Error);
    items = {{"g", V::kViewpoint, std::nullopt}};
    CHECK_THROWS_AS(aggregate_labels(items), Error);
    items = {{"g", V::kViewpoint, 1}, {"g", V::kSentiment, 1}};
    CHECK_THROWS_AS(aggregate_labels(items), Error);
  }

  TEST_CASE("property: aggregate matches a recomputation and ignores order") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<LabeledItem> items;
      std::map<std::string, std::pair<long, long>> sums;  // group -> (sum, n)
      std::map<std::string, long> fails;
      for (int i = 0; i < 200; ++i) {
        const std::string g = "g" + std::to_string(rng() % 5);
        if (rng() % 10 == 0) {
          items.push_back({g, LabelFamily::kSentiment, std::nullopt});
          ++fails[g];
        } else {
          const int v = static_cast<int>(rng() % 3) - 1;
          items.push_back({g, LabelFamily::kSentiment, v});
          sums[g].first += v;
          ++sums[g].second;
        }
      }
      const auto out = aggregate_labels(items);
      std::shuffle(items.begin(), items.end(), rng);
      const auto shuffled = aggregate_labels(items);
      REQUIRE(out.size() == sums.size());
      for (std::size_t i = 0; i < out.size(); ++i) {
        const auto& [sum, n] = sums[out[i].group];
        CHECK(out[i].mean == doctest::Approx(static_cast<double>(sum) / n).epsilon(1e-15));
        CHECK(out[i].n == static_cast<std::size_t>(n));
        CHECK(out[i].failures == static_cast<std::size_t>(fails[out[i].group]));
        CHECK(out[i].mean >= -1.0);
        CHECK(out[i].mean <= 1.0);
        CHECK(shuffled[i].mean == out[i].mean);
      }
    }
  }

  TEST_CASE("failure warning above five percent") {
    GroupAggregate g;
    g.n = 95;
    g.failures = 5;
    CHECK_FALSE(g.failure_warning());
    g.n = 94;
    g.failures = 6;
    CHECK(g.failure_warning());
    const auto csv = aggregates_csv(std::vector<GroupAggregate>{g}, "topic");
    CHECK(csv.rfind("topic,mean,n,failures,failure_warning\n", 0) == 0);
  }

  TEST_CASE("sentiment asymmetry") {
    std::vector<SentimentObservation> obs;
    for (int i = 0; i < 5; ++i) {
      obs.push_back({"m", Alignment::kLeft, 1});
      obs.push_back({"m", Alignment::kRight, -1});
      obs.push_back({"m", Alignment::kCenter, 1});
    }
    auto out = sentiment_asymmetry(obs);
    REQUIRE(out.size() == 1);
    CHECK(out[0].mean_left == 1.0);
    CHECK(out[0].mean_right == -1.0);
    CHECK(out[0].test.degenerate);
    CHECK(out[0].significant);

    obs.clear();
    for (int v : {1, 0, -1}) {
      obs.push_back({"m", Alignment::kLeft, v});
      obs.push_back({"m", Alignment::kRight, v});
    }
    out = sentiment_asymmetry(obs);
    CHECK(out[0].test.t == 0.0);
    CHECK(out[0].test.p == doctest::Approx(1.0));
    CHECK_FALSE(out[0].significant);

    obs = {{"m", Alignment::kLeft, 1}};
    CHECK_THROWS_AS(sentiment_asymmetry(obs), Error);
  }

  TEST_CASE("property: swapping alignment groups negates t and keeps p") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<SentimentObservation> obs, swapped;
      std::vector<double> left, right;
      for (int i = 0; i < 12; ++i) {
        const auto a = (i % 2 == 0) ? Alignment::kLeft : Alignment::kRight;
        const int v = static_cast<int>(rng() % 3) - 1;
        obs.push_back({"m", a, v});
        swapped.push_back({"m", a == Alignment::kLeft ? Alignment::kRight : Alignment::kLeft, v});
        (a == Alignment::kLeft ? left : right).push_back(v);
      }
      const auto x = sentiment_asymmetry(obs);
      const auto y = sentiment_asymmetry(swapped);
      CHECK(x[0].test.t == -y[0].test.t);
      CHECK(x[0].test.p == doctest::Approx(y[0].test.p).epsilon(1e-14));
      if (!x[0].test.degenerate) {
        const auto w = oracle::welch(left, right);
        CHECK(x[0].test.t == doctest::Approx(w.t).epsilon(1e-12));
        CHECK(x[0].test.df == doctest::Approx(w.df).epsilon(1e-12));
      }
    }
  }

#ifdef SLANTKIT_HAVE_BOOST_MATH
  TEST_CASE("asymmetry p-value against the oracle") {
    std::vector<SentimentObservation> obs;
    for (int v : {2, 4, 6}) obs.push_back({"m", Alignment::kLeft, v});
    for (int v : {1, 2, 3}) obs.push_back({"m", Alignment::kRight, v});
    const auto out = sentiment_asymmetry(obs);
    CHECK(out[0].test.t == doctest::Approx(1.5492).epsilon(1e-4));
    CHECK(out[0].test.df == doctest::Approx(2.941).epsilon(1e-3));
    CHECK(std::fabs(out[0].test.p - oracle::t_two_tailed(out[0].test.t, out[0].test.df)) < 1e-6);
  }
#endif
}
