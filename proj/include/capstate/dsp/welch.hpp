#pragma once

#include <cmath>
#include <numbers>

#include "capstate/dsp/fft.hpp"
#include "capstate/dsp/series.hpp"

namespace capstate::dsp {

enum class Taper { Hann };

// Symmetric Hann window.
inline std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (n < 2) return w;
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                static_cast<double>(n - 1));
  return w;
}

// One-sided tapered periodogram, density scaling (units^2 / Hz). Segments
// that are not a power of two are zero-padded to the next one.
inline Spectrum periodogram(const std::vector<double> &segment, double rate_hz,
                            Taper taper = Taper::Hann) {
  (void)taper;
  const std::size_t n = segment.size();
  if (n == 0) throw ParameterError("periodogram: empty segment");
  const auto w = hann_window(n);
  double wss = 0.0;
  std::vector<double> tapered(n);
  for (std::size_t i = 0; i < n; ++i) {
    tapered[i] = segment[i] * w[i];
    wss += w[i] * w[i];
  }
  const std::size_t nfft = next_pow2(n);
  const auto spec = rfft(tapered, nfft);
  const std::size_t bins = nfft / 2 + 1;
  Spectrum s;
  s.freqs_hz.resize(bins);
  s.power.resize(bins);
  const double scale = 1.0 / (rate_hz * wss);
  for (std::size_t k = 0; k < bins; ++k) {
    s.freqs_hz[k] = static_cast<double>(k) * rate_hz / static_cast<double>(nfft);
    double p = std::norm(spec[k]) * scale;
    if (k != 0 && !(nfft % 2 == 0 && k == nfft / 2)) p *= 2.0;
    s.power[k] = p;
  }
  return s;
}

inline Spectrum welch_psd(const UniformSeries &x, std::size_t segment_len,
                          double segment_overlap, Taper taper = Taper::Hann) {
  require_processable(x, "welch_psd");
  if (segment_len == 0 || segment_len > x.size())
    throw ParameterError("welch_psd: segment length exceeds signal length");
  if (!(segment_overlap >= 0.0 && segment_overlap < 1.0))
    throw ParameterError("welch_psd: overlap must lie in [0, 1)");
  const auto step = std::max<std::size_t>(
      1, segment_len - static_cast<std::size_t>(std::lround(
                           segment_overlap * static_cast<double>(segment_len))));
  Spectrum acc;
  std::size_t count = 0;
  for (std::size_t start = 0; start + segment_len <= x.size(); start += step) {
    std::vector<double> seg(x.values.begin() + static_cast<std::ptrdiff_t>(start),
                            x.values.begin() +
                                static_cast<std::ptrdiff_t>(start + segment_len));
    auto p = periodogram(seg, x.rate_hz, taper);
    if (count == 0) {
      acc.freqs_hz = std::move(p.freqs_hz);
      acc.power.assign(p.power.size(), 0.0);
    }
    for (std::size_t k = 0; k < p.power.size(); ++k) acc.power[k] += p.power[k];
    ++count;
  }
  for (double &p : acc.power) p /= static_cast<double>(count);
  return acc;
}

// Trapezoidal integral of the PSD over [lo, hi]. The band edges are included
// as linearly interpolated points so adjacent bands partition the total.
inline double band_power(const Spectrum &s, double lo, double hi) {
  const auto &f = s.freqs_hz;
  const auto &p = s.power;
  if (f.size() < 2 || !(hi > lo)) return 0.0;
  auto at = [&](double q) {
    if (q <= f.front()) return p.front();
    if (q >= f.back()) return p.back();
    std::size_t i = 1;
    while (f[i] < q) ++i;
    const double fr = (q - f[i - 1]) / (f[i] - f[i - 1]);
    return p[i - 1] + fr * (p[i] - p[i - 1]);
  };
  lo = std::max(lo, f.front());
  hi = std::min(hi, f.back());
  if (!(hi > lo)) return 0.0;
  double area = 0.0;
  double prev_f = lo, prev_p = at(lo);
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (f[k] <= lo) continue;
    if (f[k] >= hi) break;
    area += 0.5 * (prev_p + p[k]) * (f[k] - prev_f);
    prev_f = f[k];
    prev_p = p[k];
  }
  area += 0.5 * (prev_p + at(hi)) * (hi - prev_f);
  return area;
}

} // namespace capstate::dsp
