#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace capstate::eda {

inline constexpr double kLogCvThreshold = 0.8;

// Per-dimension x -> ln(1 + x - min_train) for dimensions whose training CV
// exceeds the threshold. Fitted on training windows only; held-out values
// below the training minimum are clamped to ln(1) = 0.
struct LogTransform {
  std::vector<bool> flags;
  std::vector<double> train_min;
  std::vector<double> train_cv;

  template <typename Row> void apply(Row &row) const {
    for (std::size_t d = 0; d < flags.size(); ++d)
      if (flags[d]) row[d] = std::log1p(std::max(0.0, row[d] - train_min[d]));
  }

  friend bool operator==(const LogTransform &, const LogTransform &) = default;
};

template <typename Row>
LogTransform fit_log_transform(const std::vector<Row> &training_rows,
                               std::size_t dims,
                               double threshold = kLogCvThreshold) {
  LogTransform t;
  t.flags.assign(dims, false);
  t.train_min.assign(dims, 0.0);
  t.train_cv.assign(dims, 0.0);
  if (training_rows.empty()) return t;
  const double n = static_cast<double>(training_rows.size());
  for (std::size_t d = 0; d < dims; ++d) {
    double m = 0.0, lo = std::numeric_limits<double>::infinity();
    for (const auto &r : training_rows) {
      m += r[d];
      lo = std::min(lo, static_cast<double>(r[d]));
    }
    m /= n;
    double ss = 0.0;
    for (const auto &r : training_rows) ss += (r[d] - m) * (r[d] - m);
    const double sd = std::sqrt(ss / n);
    double cv = 0.0;
    if (std::abs(m) > 0.0) cv = sd / std::abs(m);
    else if (sd > 0.0) cv = std::numeric_limits<double>::infinity();
    t.train_cv[d] = cv;
    t.train_min[d] = lo;
    t.flags[d] = cv > threshold;
  }
  return t;
}

} // namespace capstate::eda
