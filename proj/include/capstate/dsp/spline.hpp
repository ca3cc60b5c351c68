#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "capstate/dsp/series.hpp"

namespace capstate::dsp {

// Natural cubic spline (zero second derivative at both ends). Outside the
// knot range it extends linearly, which is what the natural boundary implies.
class NaturalCubicSpline {
public:
  NaturalCubicSpline(std::vector<double> t, std::vector<double> v)
      : t_(std::move(t)), v_(std::move(v)) {
    const std::size_t n = t_.size();
    if (n != v_.size())
      throw ParameterError("spline: knot and value counts differ");
    if (n < 4) throw ParameterError("spline: need >= 4 knots");
    for (std::size_t i = 1; i < n; ++i)
      if (!(t_[i] > t_[i - 1]))
        throw ParameterError("spline: knots must be strictly increasing");
    m_.assign(n, 0.0);
    // Tridiagonal system for interior second derivatives (Thomas algorithm).
    std::vector<double> diag(n, 0.0), upper(n, 0.0), rhs(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = t_[i] - t_[i - 1];
      const double h1 = t_[i + 1] - t_[i];
      diag[i] = 2.0 * (h0 + h1);
      upper[i] = h1;
      rhs[i] = 6.0 * ((v_[i + 1] - v_[i]) / h1 - (v_[i] - v_[i - 1]) / h0);
    }
    for (std::size_t i = 2; i + 1 < n; ++i) {
      const double lower = t_[i] - t_[i - 1];
      const double w = lower / diag[i - 1];
      diag[i] -= w * upper[i - 1];
      rhs[i] -= w * rhs[i - 1];
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
      m_[i] = (rhs[i] - upper[i] * m_[i + 1]) / diag[i];
      if (i == 1) break;
    }
  }

  double operator()(double t) const {
    const std::size_t n = t_.size();
    if (t <= t_.front()) {
      const double h = t_[1] - t_[0];
      const double slope = (v_[1] - v_[0]) / h - h * (2.0 * m_[0] + m_[1]) / 6.0;
      return v_[0] + slope * (t - t_[0]);
    }
    if (t >= t_.back()) {
      const double h = t_[n - 1] - t_[n - 2];
      const double slope =
          (v_[n - 1] - v_[n - 2]) / h + h * (2.0 * m_[n - 1] + m_[n - 2]) / 6.0;
      return v_[n - 1] + slope * (t - t_[n - 1]);
    }
    const auto it = std::upper_bound(t_.begin(), t_.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - t_.begin()) - 1;
    const double h = t_[i + 1] - t_[i];
    const double a = (t_[i + 1] - t) / h;
    const double b = (t - t_[i]) / h;
    return a * v_[i] + b * v_[i + 1] +
           ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
  }

  const std::vector<double> &knots() const noexcept { return t_; }

private:
  std::vector<double> t_, v_, m_;
};

// Spline through the valid (t, v) pairs, sampled on the grid k / grid_hz that
// lies within [t.front(), t.back()].
inline UniformSeries spline_fill(std::span<const double> t,
                                 std::span<const double> v,
                                 const std::vector<bool> &invalid,
                                 double grid_hz) {
  if (t.size() != v.size() || t.size() != invalid.size())
    throw ParameterError("spline_fill: length mismatch");
  if (!(grid_hz > 0.0)) throw ParameterError("spline_fill: grid rate must be > 0");
  for (std::size_t i = 1; i < t.size(); ++i)
    if (!(t[i] > t[i - 1]))
      throw ParameterError("spline_fill: times must be strictly increasing");
  std::vector<double> kt, kv;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (!invalid[i]) {
      kt.push_back(t[i]);
      kv.push_back(v[i]);
    }
  if (kt.size() < 4) throw ParameterError("spline_fill: need >= 4 valid points");
  const NaturalCubicSpline s(std::move(kt), std::move(kv));
  const double k0 = std::ceil(t.front() * grid_hz - 1e-9);
  const double k1 = std::floor(t.back() * grid_hz + 1e-9);
  UniformSeries out{{}, grid_hz, k0 / grid_hz};
  for (double k = k0; k <= k1; k += 1.0) out.values.push_back(s(k / grid_hz));
  if (out.values.empty())
    throw ParameterError("spline_fill: time span shorter than one grid step");
  return out;
}

} // namespace capstate::dsp
