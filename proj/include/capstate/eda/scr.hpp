#pragma once

#include <vector>

#include "capstate/dsp/series.hpp"

namespace capstate::eda {

struct ScrEvent {
  double onset_s = 0.0;
  double peak_s = 0.0;
  double amplitude_us = 0.0;   // peak minus onset value
  double peak_height_us = 0.0; // phasic value at the peak
};

inline constexpr double kDefaultScrThresholdUs = 0.01;

// An event starts where the phasic slope turns positive (after a flat or
// falling stretch) and peaks at the next local maximum.
inline std::vector<ScrEvent> detect_scrs(const dsp::UniformSeries &phasic,
                                         double min_amplitude_us =
                                             kDefaultScrThresholdUs) {
  std::vector<ScrEvent> out;
  const auto &p = phasic.values;
  const std::size_t n = p.size();
  if (n < 2) return out;
  std::size_t i = 0;
  while (i + 1 < n) {
    const bool rising = p[i + 1] > p[i];
    const bool starts = rising && (i == 0 || p[i] <= p[i - 1]);
    if (!starts) {
      ++i;
      continue;
    }
    std::size_t k = i + 1;
    while (k + 1 < n && p[k + 1] > p[k]) ++k;
    const double amp = p[k] - p[i];
    if (amp >= min_amplitude_us)
      out.push_back({phasic.time_at(i), phasic.time_at(k), amp, p[k]});
    i = k;
  }
  return out;
}

} // namespace capstate::eda
