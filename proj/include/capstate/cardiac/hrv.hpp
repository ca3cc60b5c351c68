#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string_view>
#include <vector>

#include "capstate/dsp/welch.hpp"

namespace capstate::cardiac {

inline constexpr std::size_t kHrvFeatureCount = 14;

inline constexpr std::array<std::string_view, kHrvFeatureCount> kHrvFeatureNames{
    "mean_ibi_ms", "sdnn_ms",  "rmssd_ms",   "pnn50_pct",  "cv",
    "mean_hr_bpm", "sd_hr_bpm", "lf_power",  "hf_power",   "lf_hf_ratio",
    "total_power", "sd1_ms",    "sd2_ms",    "sd1_sd2_ratio"};

struct HrvFeatures {
  double mean_ibi_ms = 0, sdnn_ms = 0, rmssd_ms = 0, pnn50_pct = 0, cv = 0,
         mean_hr_bpm = 0, sd_hr_bpm = 0;
  double lf_power = 0, hf_power = 0, lf_hf_ratio = 0, total_power = 0;
  double sd1_ms = 0, sd2_ms = 0, sd1_sd2_ratio = 0;

  std::array<double, kHrvFeatureCount> to_array() const {
    return {mean_ibi_ms, sdnn_ms,  rmssd_ms,    pnn50_pct, cv,
            mean_hr_bpm, sd_hr_bpm, lf_power,   hf_power,  lf_hf_ratio,
            total_power, sd1_ms,    sd2_ms,     sd1_sd2_ratio};
  }
};

struct HrvTimeDomain {
  double mean_ibi_ms, sdnn_ms, rmssd_ms, pnn50_pct, cv, mean_hr_bpm, sd_hr_bpm;
};
struct HrvFrequencyDomain {
  double lf_power, hf_power, lf_hf_ratio, total_power;
};
struct HrvNonlinear {
  double sd1_ms, sd2_ms, sd1_sd2_ratio;
};

// Frequency bands (Hz) and PSD settings for 2 Hz IBI windows.
struct HrvSpectralParams {
  double lf_lo = 0.04, lf_hi = 0.15;
  double hf_lo = 0.15, hf_hi = 0.40;
  double total_lo = 0.0033, total_hi = 0.40;
  std::size_t welch_segment = 64;
  double welch_overlap = 0.5;
};

inline constexpr double kPnnThresholdMs = 50.0;
inline constexpr double kRatioFloor = 1e-12;

namespace detail {
// Population mean and standard deviation.
inline std::pair<double, double> mean_sd(const std::vector<double> &v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / static_cast<double>(v.size()))};
}
} // namespace detail

inline HrvTimeDomain hrv_time_features(const std::vector<double> &ibi_ms) {
  if (ibi_ms.size() < 2)
    throw ParameterError("hrv_time_features: need >= 2 samples");
  for (double v : ibi_ms)
    if (!(v > 0.0) || !std::isfinite(v))
      throw DataError("hrv_time_features: IBI values must be finite and > 0");
  HrvTimeDomain f{};
  const auto [m, sd] = detail::mean_sd(ibi_ms);
  f.mean_ibi_ms = m;
  f.sdnn_ms = sd;
  double ss = 0.0;
  std::size_t over = 0;
  for (std::size_t i = 1; i < ibi_ms.size(); ++i) {
    const double d = ibi_ms[i] - ibi_ms[i - 1];
    ss += d * d;
    if (std::abs(d) > kPnnThresholdMs) ++over;
  }
  const double nd = static_cast<double>(ibi_ms.size() - 1);
  f.rmssd_ms = std::sqrt(ss / nd);
  f.pnn50_pct = 100.0 * static_cast<double>(over) / nd;
  f.cv = m > 0.0 ? sd / m : 0.0;
  std::vector<double> hr(ibi_ms.size());
  for (std::size_t i = 0; i < hr.size(); ++i) hr[i] = 60000.0 / ibi_ms[i];
  const auto [hm, hsd] = detail::mean_sd(hr);
  f.mean_hr_bpm = hm;
  f.sd_hr_bpm = hsd;
  return f;
}

inline HrvFrequencyDomain
hrv_frequency_features(const dsp::UniformSeries &window,
                       const HrvSpectralParams &p = {}) {
  dsp::require_processable(window, "hrv_frequency_features");
  dsp::UniformSeries centred = window;
  double m = 0.0;
  for (double v : centred.values) m += v;
  m /= static_cast<double>(centred.size());
  for (double &v : centred.values) v -= m;
  const auto seg = std::min(p.welch_segment, centred.size());
  const auto psd = dsp::welch_psd(centred, seg, p.welch_overlap);
  HrvFrequencyDomain f{};
  f.lf_power = dsp::band_power(psd, p.lf_lo, p.lf_hi);
  f.hf_power = dsp::band_power(psd, p.hf_lo, p.hf_hi);
  f.total_power = dsp::band_power(psd, p.total_lo, p.total_hi);
  f.lf_hf_ratio = f.hf_power < kRatioFloor ? 0.0 : f.lf_power / f.hf_power;
  return f;
}

// Poincare descriptors from successive pairs (x_i, x_{i+1}).
inline HrvNonlinear hrv_nonlinear_features(const std::vector<double> &ibi_ms) {
  if (ibi_ms.size() < 2)
    throw ParameterError("hrv_nonlinear_features: need >= 2 samples");
  std::vector<double> diff(ibi_ms.size() - 1), sum(ibi_ms.size() - 1);
  for (std::size_t i = 0; i + 1 < ibi_ms.size(); ++i) {
    diff[i] = ibi_ms[i + 1] - ibi_ms[i];
    sum[i] = ibi_ms[i + 1] + ibi_ms[i];
  }
  HrvNonlinear f{};
  // SD1 is taken about zero rather than the sample mean of the differences,
  // which makes SD1 = RMSSD / sqrt(2) an identity.
  double ss = 0.0;
  for (double d : diff) ss += d * d;
  // The 1/sqrt(2) rotation is applied after the spread so that constant
  // windows give exact zeros.
  f.sd1_ms = std::sqrt(ss / static_cast<double>(diff.size())) / std::numbers::sqrt2;
  f.sd2_ms = detail::mean_sd(sum).second / std::numbers::sqrt2;
  f.sd1_sd2_ratio = f.sd2_ms < kRatioFloor ? 0.0 : f.sd1_ms / f.sd2_ms;
  return f;
}

inline HrvFeatures hrv_features(const dsp::UniformSeries &window,
                                const HrvSpectralParams &p = {}) {
  const auto t = hrv_time_features(window.values);
  const auto fr = hrv_frequency_features(window, p);
  const auto nl = hrv_nonlinear_features(window.values);
  return {t.mean_ibi_ms, t.sdnn_ms,  t.rmssd_ms,    t.pnn50_pct,  t.cv,
          t.mean_hr_bpm, t.sd_hr_bpm, fr.lf_power,  fr.hf_power,  fr.lf_hf_ratio,
          fr.total_power, nl.sd1_ms,  nl.sd2_ms,    nl.sd1_sd2_ratio};
}

} // namespace capstate::cardiac
