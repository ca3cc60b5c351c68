#pragma once

#include <utility>

#include "capstate/dsp/series.hpp"

namespace capstate::dsp {

// Least-squares line through (i, v[i]); returns (intercept at i = 0, slope
// per sample).
inline std::pair<double, double> fit_line(const std::vector<double> &v) {
  const std::size_t n = v.size();
  const double tm = 0.5 * static_cast<double>(n - 1);
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dt = static_cast<double>(i) - tm;
    sxy += dt * (v[i] - mean);
    sxx += dt * dt;
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  return {mean - slope * tm, slope};
}

inline UniformSeries detrend_linear(const UniformSeries &x) {
  if (x.size() < 2) throw ParameterError("detrend_linear: need >= 2 samples");
  const auto [a, b] = fit_line(x.values);
  UniformSeries out{x.values, x.rate_hz, x.start_s};
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] -= a + b * static_cast<double>(i);
  return out;
}

} // namespace capstate::dsp
