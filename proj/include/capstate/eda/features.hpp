#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string_view>
#include <vector>

#include "capstate/dsp/detrend.hpp"
#include "capstate/eda/scr.hpp"

namespace capstate::eda {

inline constexpr std::size_t kEdaFeatureCount = 12;

inline constexpr std::array<std::string_view, kEdaFeatureCount> kEdaFeatureNames{
    "raw_mean",     "raw_sd",     "raw_min",   "raw_max",
    "scl_mean",     "scl_sd",     "scl_slope", "scl_range",
    "scr_amp_mean", "scr_amp_sd", "scr_count", "scr_peak_mean"};

struct EdaFeatures {
  double raw_mean = 0, raw_sd = 0, raw_min = 0, raw_max = 0;
  double scl_mean = 0, scl_sd = 0, scl_slope = 0, scl_range = 0;
  double scr_amp_mean = 0, scr_amp_sd = 0, scr_count = 0, scr_peak_mean = 0;

  std::array<double, kEdaFeatureCount> to_array() const {
    return {raw_mean, raw_sd, raw_min, raw_max, scl_mean, scl_sd,
            scl_slope, scl_range, scr_amp_mean, scr_amp_sd, scr_count,
            scr_peak_mean};
  }
};

namespace detail {
inline std::pair<double, double> mean_sd(const std::vector<double> &v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / static_cast<double>(v.size()))};
}
} // namespace detail

// Events are the subset of a recording-level list whose onsets fall inside
// the window; selection is the caller's job.
inline EdaFeatures eda_features(const dsp::UniformSeries &raw,
                                const dsp::UniformSeries &tonic,
                                const dsp::UniformSeries &phasic,
                                const std::vector<ScrEvent> &events) {
  if (raw.size() != tonic.size() || raw.size() != phasic.size() ||
      raw.rate_hz != tonic.rate_hz || raw.rate_hz != phasic.rate_hz ||
      std::abs(raw.start_s - tonic.start_s) > 1e-9 ||
      std::abs(raw.start_s - phasic.start_s) > 1e-9)
    throw DataError("eda_features: raw, tonic and phasic windows are misaligned");
  if (raw.size() < 2) throw ParameterError("eda_features: need >= 2 samples");
  EdaFeatures f;
  const auto [rm, rsd] = detail::mean_sd(raw.values);
  f.raw_mean = rm;
  f.raw_sd = rsd;
  const auto [rmin, rmax] = std::minmax_element(raw.values.begin(), raw.values.end());
  f.raw_min = *rmin;
  f.raw_max = *rmax;
  const auto [tm, tsd] = detail::mean_sd(tonic.values);
  f.scl_mean = tm;
  f.scl_sd = tsd;
  f.scl_slope = dsp::fit_line(tonic.values).second * tonic.rate_hz;
  const auto [tmin, tmax] =
      std::minmax_element(tonic.values.begin(), tonic.values.end());
  f.scl_range = *tmax - *tmin;
  if (!events.empty()) {
    std::vector<double> amps, peaks;
    for (const auto &e : events) {
      amps.push_back(e.amplitude_us);
      peaks.push_back(e.peak_height_us);
    }
    const auto [am, asd] = detail::mean_sd(amps);
    f.scr_amp_mean = am;
    f.scr_amp_sd = asd;
    f.scr_count = static_cast<double>(events.size());
    f.scr_peak_mean = detail::mean_sd(peaks).first;
  }
  return f;
}

inline std::vector<ScrEvent> events_in_window(const std::vector<ScrEvent> &all,
                                              double start_s, double end_s) {
  std::vector<ScrEvent> out;
  for (const auto &e : all)
    if (e.onset_s >= start_s && e.onset_s < end_s) out.push_back(e);
  return out;
}

} // namespace capstate::eda
