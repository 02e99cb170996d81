#include <doctest.h>

#include <cmath>

#include "oracles/oracles.hpp"
#include "slantkit/error.hpp"
#include "slantkit/random.hpp"
#include "slantkit/stats.hpp"

using namespace slantkit;

TEST_SUITE("stats") {
  TEST_CASE("mean and sample variance") {
    const std::vector<double> x = {2, 4, 4, 4, 5, 5, 7, 9};
    CHECK(stats::mean(x) == 5.0);
    CHECK(stats::sample_variance(x) == doctest::Approx(32.0 / 7.0));
  }

  TEST_CASE("pearson hand example") {
    const std::vector<double> x = {1, 2, 3, 4, 5}, y = {2, 1, 4, 3, 5};
    CHECK(std::fabs(stats::pearson(x, y) - 0.8) < 1e-12);
  }

  TEST_CASE("pearson preconditions") {
    const std::vector<double> x = {1, 2, 3}, flat = {0.1, 0.1, 0.1}, shorter = {1, 2};
    CHECK_THROWS_AS(stats::pearson(x, shorter), Error);
    try {
      stats::pearson(x, flat);
      FAIL("expected Error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kDegenerate);
    }
    const std::vector<double> one = {1};
    CHECK_THROWS_AS(stats::pearson(one, one), Error);
  }

  TEST_CASE("property: pearson is bounded and invariant under positive affine maps") {
    Rng rng(3);
    for (int t = 0; t < 200; ++t) {
      std::vector<double> x(20), y(20), y2(20);
      for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = rng.uniform01();
        y[i] = x[i] * (t % 2 ? 1 : -1) + rng.uniform01();
        y2[i] = 3.5 * y[i] + 10;
      }
      const double r = stats::pearson(x, y);
      CHECK(r >= -1.0);
      CHECK(r <= 1.0);
      CHECK(stats::pearson(x, y2) == doctest::Approx(r).epsilon(1e-12));
      CHECK(stats::pearson(y, x) == doctest::Approx(r).epsilon(1e-14));
    }
  }

  TEST_CASE("welch worked example") {
    const std::vector<double> a = {2, 4, 6}, b = {1, 2, 3};
    const auto w = stats::welch_t_test(a, b);
    CHECK(w.t == doctest::Approx(1.5491933384829668).epsilon(1e-12));
    CHECK(w.df == doctest::Approx(2.9411764705882346).epsilon(1e-12));
    CHECK(std::fabs(w.p - 0.2208808404940958) < 1e-9);
    CHECK_FALSE(w.degenerate);
  }

  TEST_CASE("welch degenerate groups") {
    const std::vector<double> a = {1, 1, 1}, b = {1, 1}, c = {2, 2};
    auto w = stats::welch_t_test(a, b);
    CHECK(w.degenerate);
    CHECK(w.t == 0.0);
    CHECK(w.p == 1.0);
    CHECK(w.df == 3.0);
    w = stats::welch_t_test(a, c);
    CHECK(w.degenerate);
    CHECK(std::isinf(w.t));
    CHECK(w.t < 0);
    CHECK(w.p == 0.0);
    const std::vector<double> single = {1};
    CHECK_THROWS_AS(stats::welch_t_test(single, b), Error);
  }

  TEST_CASE("welch agrees with an independent oracle") {
    Rng rng(21);
    for (int t = 0; t < 200; ++t) {
      std::vector<double> a(2 + rng.uniform_index(20)), b(2 + rng.uniform_index(20));
      for (auto& v : a) v = rng.uniform01() * 3;
      for (auto& v : b) v = rng.uniform01() * 2 + 0.5;
      const auto w = stats::welch_t_test(a, b);
      const auto o = oracle::welch(a, b);
      CHECK(w.t == doctest::Approx(o.t).epsilon(1e-10));
      CHECK(w.df == doctest::Approx(o.df).epsilon(1e-10));
#ifdef SLANTKIT_HAVE_BOOST_MATH
      CHECK(std::fabs(w.p - oracle::t_two_tailed(o.t, o.df)) < 1e-9);
#endif
    }
  }

  TEST_CASE("student t tail and incomplete beta edges") {
    CHECK(stats::student_t_two_tailed(0.0, 5) == doctest::Approx(1.0));
    CHECK(stats::incomplete_beta(2, 3, 0) == 0.0);
    CHECK(stats::incomplete_beta(2, 3, 1) == 1.0);
    // I_x(1, 1) = x and I_x(a, 1) = x^a.
    CHECK(stats::incomplete_beta(1, 1, 0.3) == doctest::Approx(0.3).epsilon(1e-13));
    CHECK(stats::incomplete_beta(3, 1, 0.5) == doctest::Approx(0.125).epsilon(1e-13));
    // t with 1 df is Cauchy: P(|T| >= 1) = 0.5.
    CHECK(stats::student_t_two_tailed(1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
#ifdef SLANTKIT_HAVE_BOOST_MATH
    for (double df : {1.5, 3.0, 10.0, 57.3, 400.0}) {
      for (double t : {0.1, 0.9, 2.0, 4.5, 12.0}) {
        CHECK(std::fabs(stats::student_t_two_tailed(t, df) - oracle::t_two_tailed(t, df)) < 1e-10);
      }
    }
#endif
  }

  TEST_CASE("zscore worked example") {
    const std::vector<double> x = {1, 2, 3};
    const auto z = stats::zscore_normalize(x);
    CHECK(z.values[0] == doctest::Approx(-1.224744871391589));
    CHECK(z.values[1] == 0.0);
    CHECK(z.values[2] == doctest::Approx(1.224744871391589));
    CHECK(z.mu == 2.0);
  }

  TEST_CASE("zscore of constant input") {
    const std::vector<double> x = {0.1, 0.1, 0.1};
    const auto z = stats::zscore_normalize(x);
    CHECK(z.zero_variance);
    for (double v : z.values) CHECK(v == 0.0);
  }

  TEST_CASE("property: zscore has mean 0 and population sigma 1") {
    Rng rng(8);
    for (int t = 0; t < 200; ++t) {
      std::vector<double> x(2 + rng.uniform_index(50));
      for (auto& v : x) v = rng.uniform01() * 100 - 50;
      const auto z = stats::zscore_normalize(x);
      long double m = 0, ss = 0;
      for (double v : z.values) m += v;
      m /= z.values.size();
      for (double v : z.values) ss += (v - m) * (v - m);
      CHECK(std::fabs(static_cast<double>(m)) < 1e-12);
      CHECK(std::fabs(std::sqrt(static_cast<double>(ss / z.values.size())) - 1.0) < 1e-12);
    }
  }
}
