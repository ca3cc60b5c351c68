#pragma once

#include <cmath>
#include <limits>
#include <tuple>
#include <vector>

#include "capstate/core/error.hpp"

namespace capstate::eval {

namespace detail {

// Continued fraction for the regularized incomplete beta (modified Lentz).
inline double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16, kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
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
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw NumericalError("incomplete beta: continued fraction did not converge");
}

} // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw ParameterError("incomplete_beta: a, b must be > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double lbt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                     b * std::log1p(-x);
  const double bt = std::exp(lbt);
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * detail::beta_cf(a, b, x) / a;
  return 1.0 - bt * detail::beta_cf(b, a, 1.0 - x) / b;
}

// Two-sided p-value of Student's t with df degrees of freedom.
inline double t_two_sided_p(double t, double df) {
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

// Upper-tail p-value of F(df1, df2).
inline double f_upper_p(double f, double df1, double df2) {
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  return incomplete_beta(0.5 * df2, 0.5 * df1, df2 / (df2 + df1 * f));
}

struct TTest {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  double mean = 0.0;
  double sd = 0.0; // sample SD
};

namespace detail {
inline std::pair<double, double> mean_sample_sd(const std::vector<double> &v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}
} // namespace detail

inline TTest one_sample_t(const std::vector<double> &values, double mu0) {
  if (values.size() < 2) throw ParameterError("one_sample_t: need n >= 2");
  TTest r;
  std::tie(r.mean, r.sd) = detail::mean_sample_sd(values);
  if (!(r.sd > 0.0)) throw UndefinedMetric("one_sample_t: zero standard deviation");
  r.df = static_cast<double>(values.size() - 1);
  r.t = (r.mean - mu0) / (r.sd / std::sqrt(static_cast<double>(values.size())));
  r.p = t_two_sided_p(r.t, r.df);
  return r;
}

inline double cohens_d(const std::vector<double> &values, double mu0) {
  if (values.size() < 2) throw ParameterError("cohens_d: need n >= 2");
  const auto [m, sd] = detail::mean_sample_sd(values);
  if (!(sd > 0.0)) throw UndefinedMetric("cohens_d: zero standard deviation");
  return (m - mu0) / sd;
}

// One-sample t on the pairwise differences a - b against 0.
inline TTest paired_t(const std::vector<double> &a, const std::vector<double> &b) {
  if (a.size() != b.size()) throw ParameterError("paired_t: length mismatch");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return one_sample_t(d, 0.0);
}

struct AnovaResult {
  double f = 0.0;
  double df1 = 0.0, df2 = 0.0;
  double p = 1.0;
  double partial_eta_sq = 0.0;
  double ss_condition = 0.0, ss_subjects = 0.0, ss_error = 0.0;
};

inline double partial_eta_squared(double f, double df1, double df2) {
  return f * df1 / (f * df1 + df2);
}

// One-way repeated-measures ANOVA; rows are subjects, columns conditions.
inline AnovaResult rm_anova_oneway(const std::vector<std::vector<double>> &m) {
  const std::size_t n = m.size();
  if (n < 2) throw ParameterError("rm_anova: need >= 2 subjects");
  const std::size_t k = m[0].size();
  if (k < 2) throw ParameterError("rm_anova: need >= 2 conditions");
  for (const auto &row : m) {
    if (row.size() != k) throw DataError("rm_anova: incomplete matrix");
    for (double v : row)
      if (!std::isfinite(v)) throw DataError("rm_anova: missing or non-finite cell");
  }
  double grand = 0.0;
  std::vector<double> row_mean(n, 0.0), col_mean(k, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      grand += m[i][j];
      row_mean[i] += m[i][j] / static_cast<double>(k);
      col_mean[j] += m[i][j] / static_cast<double>(n);
    }
  grand /= static_cast<double>(n * k);
  AnovaResult r;
  double ss_total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) ss_total += (m[i][j] - grand) * (m[i][j] - grand);
  for (double v : col_mean) r.ss_condition += static_cast<double>(n) * (v - grand) * (v - grand);
  for (double v : row_mean) r.ss_subjects += static_cast<double>(k) * (v - grand) * (v - grand);
  r.ss_error = std::max(0.0, ss_total - r.ss_subjects - r.ss_condition);
  r.df1 = static_cast<double>(k - 1);
  r.df2 = static_cast<double>((k - 1) * (n - 1));
  if (r.ss_condition == 0.0) {
    r.f = 0.0;
  } else if (r.ss_error == 0.0) {
    r.f = std::numeric_limits<double>::infinity();
  } else {
    r.f = (r.ss_condition / r.df1) / (r.ss_error / r.df2);
  }
  r.p = f_upper_p(r.f, r.df1, r.df2);
  r.partial_eta_sq = std::isinf(r.f) ? 1.0 : partial_eta_squared(r.f, r.df1, r.df2);
  return r;
}

} // namespace capstate::eval
