#pragma once

#include <span>
#include <vector>

namespace slantkit::stats {

double mean(std::span<const double> xs);
// Unbiased (n - 1) sample variance.
double sample_variance(std::span<const double> xs);

// Sample Pearson product-moment correlation. Throws kPrecondition on length
// mismatch or fewer than two points, kDegenerate on zero variance.
double pearson(std::span<const double> xs, std::span<const double> ys);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;  // two-tailed
  // Both groups have zero variance, so the statistic is undefined. With equal
  // means the result is (0, df, 1); otherwise t is +/-inf and p is 0.
  bool degenerate = false;
};

// Welch unequal-variance two-sample t-test with Welch-Satterthwaite degrees
// of freedom. Both samples need at least two values. In the degenerate case
// df falls back to n_a + n_b - 2.
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

struct ZScoreVector {
  std::vector<double> values;
  double mu = 0.0;
  double sigma = 0.0;  // population standard deviation of the input
  bool zero_variance = false;
};

// (x - mu) / sigma with the population sigma. Constant input maps to all
// zeros with zero_variance set. Needs at least two values.
ZScoreVector zscore_normalize(std::span<const double> values);

// Regularized incomplete beta I_x(a, b) via Lentz's continued fraction.
double incomplete_beta(double a, double b, double x);
// Two-tailed tail probability P(|T| >= |t|) for Student's t with df degrees of freedom.
double student_t_two_tailed(double t, double df);

}  // namespace slantkit::stats
