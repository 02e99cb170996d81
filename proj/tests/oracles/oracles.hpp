#pragma once

// Reference implementations used only to check the library. They follow the
// textbook formulas directly and share no code with core/.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#ifdef SLANTKIT_HAVE_BOOST_MATH
#include <boost/math/distributions/students_t.hpp>
#endif

namespace oracle {

// Pearson chi-square of the 2x2 table
//            party R   party D
//   bigram     a         b
//   other      c         d
inline long double pearson_chi2_2x2(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
  const long double A = a, B = b, C = c, D = d;
  const long double n = A + B + C + D;
  const long double cells[2][2] = {{A, B}, {C, D}};
  const long double rows[2] = {A + B, C + D};
  const long double cols[2] = {A + C, B + D};
  long double chi = 0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const long double expected = rows[i] * cols[j] / n;
      const long double diff = cells[i][j] - expected;
      chi += diff * diff / expected;
    }
  }
  return chi;
}

inline long double kl(const std::vector<double>& p, const std::vector<long double>& m) {
  long double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0) s += static_cast<long double>(p[i]) * std::log(static_cast<long double>(p[i]) / m[i]);
  }
  return s;
}

inline long double jsd(const std::vector<double>& p, const std::vector<double>& q) {
  std::vector<long double> m(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m[i] = (static_cast<long double>(p[i]) + q[i]) / 2;
  return kl(p, m) / 2 + kl(q, m) / 2;
}

// ASCII-only bigram counter: sentences split on . ! ? and newline; tokens are runs of
// [A-Za-z0-9], lowercased; stop words are dropped before pairing.
inline std::map<std::pair<std::string, std::string>, std::uint64_t> count_bigrams(
    const std::vector<std::string>& texts, const std::set<std::string>& stop) {
  std::map<std::pair<std::string, std::string>, std::uint64_t> out;
  for (const auto& text : texts) {
    std::vector<std::string> sentence;
    std::string tok;
    auto end_token = [&] {
      if (!tok.empty() && !stop.count(tok)) sentence.push_back(tok);
      tok.clear();
    };
    auto end_sentence = [&] {
      end_token();
      for (std::size_t i = 1; i < sentence.size(); ++i) ++out[{sentence[i - 1], sentence[i]}];
      sentence.clear();
    };
    for (char ch : text) {
      const unsigned char c = static_cast<unsigned char>(ch);
      if (std::isalnum(c)) {
        tok.push_back(static_cast<char>(std::tolower(c)));
      } else if (c == '.' || c == '!' || c == '?' || c == '\n') {
        end_sentence();
      } else {
        end_token();
      }
    }
    end_sentence();
  }
  return out;
}

struct Welch {
  double t, df;
};

inline Welch welch(const std::vector<double>& a, const std::vector<double>& b) {
  auto moments = [](const std::vector<double>& x) {
    long double m = 0;
    for (double v : x) m += v;
    m /= x.size();
    long double ss = 0;
    for (double v : x) ss += (v - m) * (v - m);
    return std::pair<long double, long double>{m, ss / (x.size() - 1)};
  };
  const auto [ma, va] = moments(a);
  const auto [mb, vb] = moments(b);
  const long double sa = va / a.size(), sb = vb / b.size();
  const long double t = (ma - mb) / std::sqrt(sa + sb);
  const long double df = (sa + sb) * (sa + sb) / (sa * sa / (a.size() - 1) + sb * sb / (b.size() - 1));
  return {static_cast<double>(t), static_cast<double>(df)};
}

// Two-tailed Student t tail by composite Simpson integration of the density
// over [|t|, |t| + 2000] after the substitution x = |t| + u / (1 - u).
inline double t_two_tailed_quadrature(double t, double df) {
  const long double a = std::fabs(t), v = df;
  const long double c = std::exp(std::lgamma((v + 1) / 2) - std::lgamma(v / 2)) / std::sqrt(v * 3.14159265358979323846L);
  auto f = [&](long double u) -> long double {
    if (u >= 1) return 0;
    const long double x = a + u / (1 - u);
    return c * std::pow(1 + x * x / v, -(v + 1) / 2) / ((1 - u) * (1 - u));
  };
  const int n = 200000;
  const long double h = 1.0L / n;
  long double s = f(0) + f(1);
  for (int i = 1; i < n; ++i) s += f(i * h) * (i % 2 ? 4 : 2);
  return static_cast<double>(2 * s * h / 3);
}

#ifdef SLANTKIT_HAVE_BOOST_MATH
inline double t_two_tailed(double t, double df) {
  boost::math::students_t dist(df);
  return 2 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
}
#endif

}  // namespace oracle
