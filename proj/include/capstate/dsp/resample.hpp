#pragma once

#include <cmath>

#include "capstate/dsp/butterworth.hpp"

namespace capstate::dsp {

// Order of the anti-alias Butterworth used when downsampling; its cutoff is
// 0.45 x the target rate.
inline constexpr int kAntiAliasOrder = 4;

// Linear interpolation of x at absolute time t (clamped to the series span).
inline double interpolate_linear(const UniformSeries &x, double t) {
  const double pos = (t - x.start_s) * x.rate_hz;
  if (pos <= 0.0) return x.values.front();
  const double last = static_cast<double>(x.size() - 1);
  if (pos >= last) return x.values.back();
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(i);
  return x.values[i] + frac * (x.values[i + 1] - x.values[i]);
}

inline UniformSeries resample_uniform(const UniformSeries &x,
                                      double target_hz) {
  require_processable(x, "resample_uniform");
  if (!(target_hz > 0.0))
    throw ParameterError("resample_uniform: target rate must be > 0");
  UniformSeries src = x;
  if (target_hz < x.rate_hz && x.size() > 1)
    src = butterworth_lowpass(x, kAntiAliasOrder, 0.45 * target_hz);
  // Grid k / target_hz from start, covering [start, start + duration]. A small
  // slack absorbs rounding when the span is an exact multiple of the step.
  const double span = x.duration_s();
  const auto count = static_cast<std::size_t>(
                         std::floor(span * target_hz + 1e-9)) + 1;
  UniformSeries out{{}, target_hz, x.start_s};
  out.values.reserve(count);
  for (std::size_t k = 0; k < count; ++k)
    out.values.push_back(
        interpolate_linear(src, x.start_s + static_cast<double>(k) / target_hz));
  return out;
}

} // namespace capstate::dsp
