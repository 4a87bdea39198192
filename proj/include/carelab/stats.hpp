#pragma once

#include <span>

namespace carelab::stats {

double mean(std::span<const double> xs);
/// Unbiased (n - 1) sample variance. Requires n >= 2.
double sample_variance(std::span<const double> xs);
double sample_sd(std::span<const double> xs);

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double regularized_incomplete_beta(double a, double b, double x);

/// Student t cumulative distribution P(T <= t) with `df` degrees of freedom.
double student_t_cdf(double t, double df);

/// Cohen's d with the pooled SD sqrt((sd_a^2 + sd_b^2) / 2). Throws
/// InsufficientSample when either group has fewer than two observations.
double cohens_d(std::span<const double> a, std::span<const double> b);

enum class TTestVariant { Student, Welch };

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p_value = 1.0;  // two-sided
};

/// Two-sample t-test. Student's pooled-variance form by default.
TTestResult t_test(std::span<const double> a, std::span<const double> b, TTestVariant variant = TTestVariant::Student);

/// Two-sided p-value of t_test.
double t_test_two_sample(std::span<const double> a, std::span<const double> b,
                         TTestVariant variant = TTestVariant::Student);

struct PairwiseComparison {
  double mean_diff = 0.0;        // mean(a) - mean(b)
  double improvement_pct = 0.0;  // |mean_diff| / mean(b) * 100
  double cohens_d = 0.0;
  double p_value = 1.0;
  int n_per_group = 0;
};

/// `b` is the comparison group; improvement is relative to its mean.
PairwiseComparison compare(std::span<const double> a, std::span<const double> b,
                           TTestVariant variant = TTestVariant::Student);

}  // namespace carelab::stats
