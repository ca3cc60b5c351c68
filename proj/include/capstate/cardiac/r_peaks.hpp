#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "capstate/dsp/butterworth.hpp"
#include "capstate/dsp/series.hpp"

namespace capstate::cardiac {

struct PeakList {
  std::vector<double> times_s;
};

struct PanTompkinsParams {
  double band_lo_hz = 5.0;
  double band_hi_hz = 15.0;
  int band_order = 2;
  double integration_window_s = 0.150;
  double refractory_s = 0.200;
  double twave_window_s = 0.360;
  double searchback_factor = 1.66;
  double refine_radius_s = 0.050;
  double init_window_s = 2.0;
};

namespace detail {

// Moving average with a centred window of w samples (edges use the part of
// the window that is inside the signal).
inline std::vector<double> centred_moving_average(const std::vector<double> &x,
                                                  std::size_t w) {
  const std::size_t n = x.size();
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i];
  std::vector<double> out(n);
  const std::size_t half = w / 2;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n, i + (w - half));
    out[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(w);
  }
  return out;
}

inline std::size_t argmax_in(const std::vector<double> &x, long lo, long hi) {
  lo = std::max(0L, lo);
  hi = std::min(static_cast<long>(x.size()) - 1, hi);
  std::size_t best = static_cast<std::size_t>(lo);
  for (long i = lo; i <= hi; ++i)
    if (x[static_cast<std::size_t>(i)] > x[best]) best = static_cast<std::size_t>(i);
  return best;
}

} // namespace detail

// Pan-Tompkins QRS detector: band-pass, five-point derivative, squaring,
// moving-window integration, then adaptive dual thresholds with refractory
// blanking, T-wave discrimination and search-back. Peak times are refined to
// the ECG maximum near each detection.
inline PeakList detect_r_peaks(const dsp::UniformSeries &ecg,
                               const PanTompkinsParams &p = {}) {
  dsp::require_processable(ecg, "detect_r_peaks");
  const double fs = ecg.rate_hz;
  if (fs < 200.0) throw ParameterError("detect_r_peaks: rate must be >= 200 Hz");
  if (static_cast<double>(ecg.size()) / fs < 10.0)
    throw ParameterError("detect_r_peaks: need >= 10 s of ECG");

  auto band = dsp::butterworth_highpass(ecg, p.band_order, p.band_lo_hz);
  band = dsp::butterworth_lowpass(band, p.band_order, p.band_hi_hz);
  const auto &b = band.values;
  const std::size_t n = b.size();

  std::vector<double> deriv(n, 0.0);
  for (std::size_t i = 2; i + 2 < n; ++i)
    deriv[i] = (2.0 * b[i + 1] + b[i + 2] - b[i - 2] - 2.0 * b[i - 1]) * fs / 8.0;
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = deriv[i] * deriv[i];
  const auto w = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(p.integration_window_s * fs)));
  const auto mwi = detail::centred_moving_average(sq, w);

  const auto refractory = static_cast<long>(std::lround(p.refractory_s * fs));
  const auto twave = static_cast<long>(std::lround(p.twave_window_s * fs));
  const auto slope_radius = static_cast<long>(std::lround(0.075 * fs));

  // Candidate fiducial marks: MWI local maxima, keeping only the largest
  // within any refractory span.
  std::vector<std::size_t> cand;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(mwi[i] > mwi[i - 1] && mwi[i] >= mwi[i + 1])) continue;
    if (!cand.empty() && static_cast<long>(i - cand.back()) < refractory) {
      if (mwi[i] > mwi[cand.back()]) cand.back() = i;
      continue;
    }
    cand.push_back(i);
  }
  PeakList out;
  if (cand.empty()) return out;

  const auto init_len = std::min<std::size_t>(
      n, static_cast<std::size_t>(std::lround(p.init_window_s * fs)));
  const double init_max = *std::max_element(mwi.begin(), mwi.begin() + init_len);
  const double init_mean =
      std::accumulate(mwi.begin(), mwi.begin() + init_len, 0.0) /
      static_cast<double>(init_len);
  double spki = init_max / 3.0;
  double npki = init_mean / 2.0;
  double thr1 = npki + 0.25 * (spki - npki);
  double thr2 = 0.5 * thr1;
  auto update_thresholds = [&] {
    thr1 = npki + 0.25 * (spki - npki);
    thr2 = 0.5 * thr1;
  };
  auto max_slope = [&](std::size_t i) {
    double m = 0.0;
    for (long j = static_cast<long>(i) - slope_radius;
         j <= static_cast<long>(i) + slope_radius; ++j)
      if (j >= 0 && j < static_cast<long>(n))
        m = std::max(m, std::abs(deriv[static_cast<std::size_t>(j)]));
    return m;
  };

  std::vector<std::size_t> qrs;
  std::vector<bool> taken(cand.size(), false);
  std::vector<double> rr;
  double last_slope = 0.0;
  std::size_t last_cand = 0; // index into cand of the last accepted QRS

  auto rr_average = [&] {
    const std::size_t k = std::min<std::size_t>(8, rr.size());
    double s = 0.0;
    for (std::size_t i = rr.size() - k; i < rr.size(); ++i) s += rr[i];
    return s / static_cast<double>(k);
  };
  auto accept = [&](std::size_t ci, double weight) {
    const std::size_t i = cand[ci];
    if (!qrs.empty()) rr.push_back(static_cast<double>(i - qrs.back()));
    qrs.push_back(i);
    taken[ci] = true;
    last_cand = ci;
    last_slope = max_slope(i);
    spki = weight * mwi[i] + (1.0 - weight) * spki;
    update_thresholds();
  };

  for (std::size_t ci = 0; ci < cand.size(); ++ci) {
    const std::size_t i = cand[ci];
    // Search-back for a missed beat before looking at this candidate.
    if (!rr.empty() &&
        static_cast<double>(i - qrs.back()) > p.searchback_factor * rr_average()) {
      std::size_t best = cand.size();
      for (std::size_t cj = last_cand + 1; cj < ci; ++cj) {
        const std::size_t j = cand[cj];
        if (taken[cj] || static_cast<long>(j - qrs.back()) < refractory) continue;
        if (mwi[j] > thr2 && (best == cand.size() || mwi[j] > mwi[cand[best]]))
          best = cj;
      }
      if (best != cand.size()) accept(best, 0.25);
    }
    if (!qrs.empty() && static_cast<long>(i) - static_cast<long>(qrs.back()) <
                            refractory)
      continue;
    const double v = mwi[i];
    if (v > thr1) {
      if (!qrs.empty() &&
          static_cast<long>(i) - static_cast<long>(qrs.back()) < twave &&
          max_slope(i) < 0.5 * last_slope) {
        npki = 0.125 * v + 0.875 * npki;
        update_thresholds();
        continue;
      }
      accept(ci, 0.125);
    } else {
      npki = 0.125 * v + 0.875 * npki;
      update_thresholds();
    }
  }

  const auto radius = static_cast<long>(std::lround(p.refine_radius_s * fs));
  out.times_s.reserve(qrs.size());
  for (std::size_t i : qrs) {
    const std::size_t r = detail::argmax_in(ecg.values, static_cast<long>(i) - radius,
                                            static_cast<long>(i) + radius);
    const double t = ecg.time_at(r);
    if (out.times_s.empty() || t > out.times_s.back()) out.times_s.push_back(t);
  }
  return out;
}

} // namespace capstate::cardiac
