#pragma once

#include <vector>

#include "capstate/cardiac/r_peaks.hpp"
#include "capstate/dsp/spline.hpp"

namespace capstate::cardiac {

inline constexpr double kMinIbiMs = 300.0;
inline constexpr double kMaxIbiMs = 2000.0;

// ibis_ms[i] spans beat_times_s[i] -> beat_times_s[i + 1] and is attributed
// to the later beat. filled_ms equals ibis_ms on valid entries and holds the
// spline estimate on invalid ones.
struct IbiSeries {
  std::vector<double> beat_times_s;
  std::vector<double> ibis_ms;
  std::vector<bool> valid;
  std::vector<double> filled_ms;

  std::vector<double> interval_times() const {
    return {beat_times_s.begin() + 1, beat_times_s.end()};
  }
};

inline IbiSeries build_ibi(const PeakList &peaks) {
  const auto &t = peaks.times_s;
  if (t.size() < 5) throw DataError("build_ibi: need >= 5 R peaks");
  IbiSeries s;
  s.beat_times_s = t;
  s.ibis_ms.resize(t.size() - 1);
  s.valid.resize(t.size() - 1);
  std::vector<bool> invalid(t.size() - 1);
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    s.ibis_ms[i] = (t[i + 1] - t[i]) * 1000.0;
    s.valid[i] = s.ibis_ms[i] >= kMinIbiMs && s.ibis_ms[i] <= kMaxIbiMs;
    invalid[i] = !s.valid[i];
  }
  s.filled_ms = s.ibis_ms;
  const auto times = s.interval_times();
  std::vector<double> kt, kv;
  for (std::size_t i = 0; i < times.size(); ++i)
    if (s.valid[i]) {
      kt.push_back(times[i]);
      kv.push_back(s.ibis_ms[i]);
    }
  if (kt.size() < 4)
    throw DataError("build_ibi: fewer than 4 plausible intervals");
  const dsp::NaturalCubicSpline spline(std::move(kt), std::move(kv));
  for (std::size_t i = 0; i < times.size(); ++i)
    if (!s.valid[i]) s.filled_ms[i] = spline(times[i]);
  return s;
}

// Artifact-corrected IBI sampled on the k / grid_hz grid.
inline dsp::UniformSeries ibi_to_uniform(const IbiSeries &s, double grid_hz) {
  const auto times = s.interval_times();
  std::vector<bool> invalid(s.valid.size());
  for (std::size_t i = 0; i < invalid.size(); ++i) invalid[i] = !s.valid[i];
  return dsp::spline_fill(times, s.ibis_ms, invalid, grid_hz);
}

} // namespace capstate::cardiac
