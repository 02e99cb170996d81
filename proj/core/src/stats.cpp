#include "slantkit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "slantkit/error.hpp"

namespace slantkit::stats {

namespace {

void require_at_least(std::span<const double> xs, std::size_t n, const char* what) {
  if (xs.size() < n) {
    throw Error(ErrorKind::kPrecondition,
                std::string(what) + " needs at least " + std::to_string(n) + " values, got " +
                    std::to_string(xs.size()));
  }
}

bool is_constant(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [&](double v) { return v == xs.front(); });
}

double sum_squared_deviations(std::span<const double> xs, double mu) {
  double s = 0.0;
  for (double x : xs) s += (x - mu) * (x - mu);
  return s;
}

// Continued fraction for I_x(a, b); converges for x < (a + 1) / (a + b + 2).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) return h;
  }
  throw Error(ErrorKind::kDegenerate, "incomplete beta continued fraction did not converge");
}

}  // namespace

double mean(std::span<const double> xs) {
  require_at_least(xs, 1, "mean");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
  require_at_least(xs, 2, "sample variance");
  return sum_squared_deviations(xs, mean(xs)) / static_cast<double>(xs.size() - 1);
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw Error(ErrorKind::kPrecondition, "pearson: length mismatch (" + std::to_string(xs.size()) +
                                              " vs " + std::to_string(ys.size()) + ")");
  }
  require_at_least(xs, 2, "pearson");
  const double mx = mean(xs);
  const double my = mean(ys);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (is_constant(xs) || is_constant(ys) || sxx == 0.0 || syy == 0.0) {
    throw Error(ErrorKind::kDegenerate, "pearson: zero variance input");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error(ErrorKind::kPrecondition, "incomplete beta needs a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_tailed(double t, double df) {
  if (!(df > 0.0)) throw Error(ErrorKind::kPrecondition, "t distribution needs df > 0");
  if (std::isinf(t)) return 0.0;
  if (t == 0.0) return 1.0;
  const double x = df / (df + t * t);
  return std::clamp(incomplete_beta(0.5 * df, 0.5, x), 0.0, 1.0);
}

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  require_at_least(a, 2, "welch_t_test (first sample)");
  require_at_least(b, 2, "welch_t_test (second sample)");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = mean(a);
  const double mb = mean(b);
  const double va = is_constant(a) ? 0.0 : sample_variance(a) / na;
  const double vb = is_constant(b) ? 0.0 : sample_variance(b) / nb;

  WelchResult r;
  if (va == 0.0 && vb == 0.0) {
    r.degenerate = true;
    r.df = na + nb - 2.0;
    if (ma == mb) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = ma > mb ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
      r.p = 0.0;
    }
    return r;
  }
  const double se2 = va + vb;
  r.t = (ma - mb) / std::sqrt(se2);
  r.df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  r.p = student_t_two_tailed(r.t, r.df);
  return r;
}

ZScoreVector zscore_normalize(std::span<const double> values) {
  require_at_least(values, 2, "zscore_normalize");
  ZScoreVector out;
  out.mu = mean(values);
  out.sigma = std::sqrt(sum_squared_deviations(values, out.mu) / static_cast<double>(values.size()));
  out.values.resize(values.size(), 0.0);
  if (is_constant(values) || out.sigma == 0.0) {
    out.sigma = 0.0;
    out.zero_variance = true;
    return out;
  }
  for (std::size_t i = 0; i < values.size(); ++i) out.values[i] = (values[i] - out.mu) / out.sigma;
  return out;
}

}  // namespace slantkit::stats
