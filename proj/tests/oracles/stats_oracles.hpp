#pragma once

// Brute-force references for the metric and statistics code. Written in the
// most literal form available, independent of the library's formulation.

#include <cmath>
#include <vector>

namespace oracle {

struct BinaryCounts {
  double tp = 0, tn = 0, fp = 0, fn = 0; // class 1 is the positive class
};

inline BinaryCounts count(const std::vector<int> &pred, const std::vector<int> &truth) {
  BinaryCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (truth[i] == 1 && pred[i] == 1) c.tp += 1;
    if (truth[i] == 0 && pred[i] == 0) c.tn += 1;
    if (truth[i] == 0 && pred[i] == 1) c.fp += 1;
    if (truth[i] == 1 && pred[i] == 0) c.fn += 1;
  }
  return c;
}

inline double balanced_accuracy(const BinaryCounts &c) {
  return 0.5 * (c.tp / (c.tp + c.fn) + c.tn / (c.tn + c.fp));
}

inline double macro_f1(const BinaryCounts &c) {
  // F1 = 2TP / (2TP + FP + FN), per class with the roles swapped.
  const double f_high = 2 * c.tp / (2 * c.tp + c.fp + c.fn);
  const double f_low = 2 * c.tn / (2 * c.tn + c.fn + c.fp);
  return 0.5 * (f_high + f_low);
}

// t from raw power sums.
inline double one_sample_t(const std::vector<double> &x, double mu0) {
  const double n = static_cast<double>(x.size());
  double s1 = 0, s2 = 0;
  for (double v : x) {
    s1 += v - mu0;
    s2 += (v - mu0) * (v - mu0);
  }
  const double var = (s2 - s1 * s1 / n) / (n - 1);
  return (s1 / n) / std::sqrt(var / n);
}

// F from the explicit residual of the additive two-way model.
inline double rm_anova_F(const std::vector<std::vector<double>> &m) {
  const std::size_t n = m.size(), k = m[0].size();
  double g = 0;
  for (auto &r : m)
    for (double v : r) g += v;
  g /= static_cast<double>(n * k);
  std::vector<double> ri(n, 0), cj(k, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      ri[i] += m[i][j];
      cj[j] += m[i][j];
    }
  for (auto &v : ri) v /= static_cast<double>(k);
  for (auto &v : cj) v /= static_cast<double>(n);
  double ss_cond = 0, ss_err = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      ss_cond += (cj[j] - g) * (cj[j] - g);
      const double e = m[i][j] - ri[i] - cj[j] + g;
      ss_err += e * e;
    }
  const double df1 = static_cast<double>(k - 1), df2 = static_cast<double>((k - 1) * (n - 1));
  return (ss_cond / df1) / (ss_err / df2);
}

} // namespace oracle
