#include "carelab/stats.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "carelab/errors.hpp"

namespace carelab::stats {

namespace {

void require_pair(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2)
    throw InsufficientSample("two-sample statistics need at least 2 observations per group (got " +
                             std::to_string(a.size()) + " and " + std::to_string(b.size()) + ")");
}

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) return h;
  }
  throw std::runtime_error("incomplete beta continued fraction did not converge");
}

}  // namespace

double mean(std::span<const double> xs) {
  if (xs.empty()) throw InsufficientSample("mean of an empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) throw InsufficientSample("sample variance needs at least 2 observations");
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

double sample_sd(std::span<const double> xs) { return std::sqrt(sample_variance(xs)); }

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("incomplete beta needs a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  // Use the symmetry relation where the fraction converges fastest.
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) throw std::invalid_argument("t distribution needs df > 0");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double x = df / (df + t * t);
  const double tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, x);
  return t > 0.0 ? 1.0 - tail : tail;
}

double cohens_d(std::span<const double> a, std::span<const double> b) {
  require_pair(a, b);
  const double diff = mean(a) - mean(b);
  const double pooled = std::sqrt((sample_variance(a) + sample_variance(b)) / 2.0);
  if (pooled == 0.0) {
    if (diff == 0.0) return 0.0;
    return std::copysign(std::numeric_limits<double>::infinity(), diff);
  }
  return diff / pooled;
}

TTestResult t_test(std::span<const double> a, std::span<const double> b, TTestVariant variant) {
  require_pair(a, b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double va = sample_variance(a);
  const double vb = sample_variance(b);
  const double diff = mean(a) - mean(b);

  TTestResult res;
  double se = 0.0;
  if (variant == TTestVariant::Student) {
    res.df = na + nb - 2.0;
    const double pooled_var = ((na - 1.0) * va + (nb - 1.0) * vb) / res.df;
    se = std::sqrt(pooled_var * (1.0 / na + 1.0 / nb));
  } else {
    const double qa = va / na;
    const double qb = vb / nb;
    se = std::sqrt(qa + qb);
    const double denom = qa * qa / (na - 1.0) + qb * qb / (nb - 1.0);
    res.df = denom > 0.0 ? (qa + qb) * (qa + qb) / denom : na + nb - 2.0;
  }

  if (se == 0.0) {
    res.t = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
    res.p_value = diff == 0.0 ? 1.0 : 0.0;
    return res;
  }
  res.t = diff / se;
  // Two-sided p = I_{df/(df+t^2)}(df/2, 1/2).
  res.p_value = regularized_incomplete_beta(res.df / 2.0, 0.5, res.df / (res.df + res.t * res.t));
  return res;
}

double t_test_two_sample(std::span<const double> a, std::span<const double> b, TTestVariant variant) {
  return t_test(a, b, variant).p_value;
}

PairwiseComparison compare(std::span<const double> a, std::span<const double> b, TTestVariant variant) {
  PairwiseComparison c;
  c.cohens_d = cohens_d(a, b);
  c.p_value = t_test_two_sample(a, b, variant);
  c.mean_diff = mean(a) - mean(b);
  c.improvement_pct = std::abs(c.mean_diff) / mean(b) * 100.0;
  c.n_per_group = static_cast<int>(std::min(a.size(), b.size()));
  return c;
}

}  // namespace carelab::stats
