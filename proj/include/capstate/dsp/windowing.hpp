#pragma once

#include <cmath>
#include <vector>

#include "capstate/dsp/series.hpp"

namespace capstate::dsp {

struct WindowingPlan {
  std::size_t window_len_samples = 120;
  double overlap_fraction = 0.75;

  std::size_t step_samples() const {
    return static_cast<std::size_t>(std::lround(
        static_cast<double>(window_len_samples) * (1.0 - overlap_fraction)));
  }
  void validate() const {
    if (window_len_samples == 0)
      throw ParameterError("windowing: window length must be >= 1");
    if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0))
      throw ParameterError("windowing: overlap must lie in [0, 1)");
    if (step_samples() < 1)
      throw ParameterError("windowing: derived step must be >= 1");
  }
};

inline std::size_t window_count(std::size_t n, const WindowingPlan &plan) {
  const std::size_t len = plan.window_len_samples;
  if (n < len) return 0;
  return (n - len) / plan.step_samples() + 1;
}

// Complete windows starting at 0, step, 2 step, ...
inline std::vector<UniformSeries> window_segment(const UniformSeries &x,
                                                 const WindowingPlan &plan) {
  plan.validate();
  const std::size_t count = window_count(x.size(), plan);
  const std::size_t step = plan.step_samples();
  std::vector<UniformSeries> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t s = k * step;
    out.push_back({std::vector<double>(
                       x.values.begin() + static_cast<std::ptrdiff_t>(s),
                       x.values.begin() +
                           static_cast<std::ptrdiff_t>(s + plan.window_len_samples)),
                   x.rate_hz, x.time_at(s)});
  }
  return out;
}

} // namespace capstate::dsp
