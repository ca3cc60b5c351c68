#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "capstate/dsp/series.hpp"

namespace capstate::dsp {

// Digital Butterworth filter as a cascade of second-order sections designed
// from the analog prototype with a prewarped bilinear transform. Odd orders
// carry one first-order section (b2 = a2 = 0).
struct Biquad {
  double b0, b1, b2, a1, a2;
};

enum class FilterKind { LowPass, HighPass };

struct SosFilter {
  std::vector<Biquad> sections;
};

inline SosFilter design_butterworth(int order, double cutoff_hz,
                                    double rate_hz, FilterKind kind) {
  if (order < 1) throw ParameterError("butterworth: order must be >= 1");
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < rate_hz / 2.0))
    throw ParameterError("butterworth: cutoff must lie in (0, Nyquist)");
  // Prewarped analog cutoff for sample period T = 2 (so K = tan(w/2)).
  const double k = std::tan(std::numbers::pi * cutoff_hz / rate_hz);
  SosFilter f;
  const int pairs = order / 2;
  for (int i = 0; i < pairs; ++i) {
    // Pole pair angle of the normalized prototype.
    const double theta =
        std::numbers::pi * (2.0 * i + 1.0 + order) / (2.0 * order);
    const double q2 = -2.0 * std::cos(theta); // 1/Q
    const double k2 = k * k;
    const double norm = 1.0 / (1.0 + q2 * k + k2);
    Biquad s{};
    if (kind == FilterKind::LowPass) {
      s.b0 = k2 * norm;
      s.b1 = 2.0 * s.b0;
      s.b2 = s.b0;
    } else {
      s.b0 = norm;
      s.b1 = -2.0 * norm;
      s.b2 = norm;
    }
    s.a1 = 2.0 * (k2 - 1.0) * norm;
    s.a2 = (1.0 - q2 * k + k2) * norm;
    f.sections.push_back(s);
  }
  if (order % 2 == 1) {
    const double norm = 1.0 / (1.0 + k);
    Biquad s{};
    if (kind == FilterKind::LowPass) {
      s.b0 = k * norm;
      s.b1 = s.b0;
    } else {
      s.b0 = norm;
      s.b1 = -norm;
    }
    s.b2 = 0.0;
    s.a1 = (k - 1.0) * norm;
    s.a2 = 0.0;
    f.sections.push_back(s);
  }
  return f;
}

namespace detail {

// Direct form II transposed; the initial state places the section in steady
// state for a constant input equal to x0.
inline void run_section(const Biquad &s, std::vector<double> &x) {
  if (x.empty()) return;
  const double dc_den = 1.0 + s.a1 + s.a2;
  const double dc_gain = dc_den != 0.0 ? (s.b0 + s.b1 + s.b2) / dc_den : 0.0;
  const double x0 = x.front();
  const double y0 = dc_gain * x0;
  double z2 = s.b2 * x0 - s.a2 * y0;
  double z1 = y0 - s.b0 * x0;
  for (double &v : x) {
    const double in = v;
    const double out = s.b0 * in + z1;
    z1 = s.b1 * in - s.a1 * out + z2;
    z2 = s.b2 * in - s.a2 * out;
    v = out;
  }
}

inline void run_cascade(const SosFilter &f, std::vector<double> &x) {
  for (const auto &s : f.sections) run_section(s, x);
}

} // namespace detail

// Single forward pass (causal), used by tests of the one-pass response.
inline std::vector<double> sos_filter(const SosFilter &f,
                                      std::vector<double> x) {
  detail::run_cascade(f, x);
  return x;
}

// Zero-phase forward-backward application with odd-symmetric edge extension.
// The extension is long enough (several time constants of the slowest pole)
// that edge transients are negligible for signals longer than the pad.
inline std::vector<double> filtfilt(const SosFilter &f,
                                    const std::vector<double> &x,
                                    double cutoff_hz, double rate_hz) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  if (n == 1) return x;
  const std::size_t want = static_cast<std::size_t>(
      std::ceil(8.0 * rate_hz / cutoff_hz) + 6.0 * f.sections.size());
  const std::size_t pad = std::min(want, n - 1);
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i)
    ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);
  detail::run_cascade(f, ext);
  std::reverse(ext.begin(), ext.end());
  detail::run_cascade(f, ext);
  std::reverse(ext.begin(), ext.end());
  return std::vector<double>(ext.begin() + static_cast<std::ptrdiff_t>(pad),
                             ext.begin() + static_cast<std::ptrdiff_t>(pad + n));
}

inline UniformSeries butterworth_lowpass(const UniformSeries &x, int order,
                                         double cutoff_hz) {
  require_processable(x, "butterworth_lowpass");
  const auto f = design_butterworth(order, cutoff_hz, x.rate_hz,
                                    FilterKind::LowPass);
  return {filtfilt(f, x.values, cutoff_hz, x.rate_hz), x.rate_hz, x.start_s};
}

inline UniformSeries butterworth_highpass(const UniformSeries &x, int order,
                                          double cutoff_hz) {
  require_processable(x, "butterworth_highpass");
  const auto f = design_butterworth(order, cutoff_hz, x.rate_hz,
                                    FilterKind::HighPass);
  return {filtfilt(f, x.values, cutoff_hz, x.rate_hz), x.rate_hz, x.start_s};
}

// |H|^2 of the digital design at frequency f (bilinear-warped Butterworth).
inline double butterworth_power_response(int order, double cutoff_hz,
                                         double rate_hz, double f_hz) {
  const double w = std::tan(std::numbers::pi * f_hz / rate_hz) /
                   std::tan(std::numbers::pi * cutoff_hz / rate_hz);
  return 1.0 / (1.0 + std::pow(w, 2.0 * order));
}

} // namespace capstate::dsp
