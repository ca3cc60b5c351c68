#pragma once

#include <cmath>
#include <vector>

#include "capstate/core/error.hpp"

namespace capstate::eda {

// SCR impulse response h(t) = (exp(-t/tau1) - exp(-t/tau0)) / (tau1 - tau0),
// zero for t < 0. Integrates to one.
inline double bateman(double t, double tau0, double tau1) {
  if (t <= 0.0) return 0.0;
  return (std::exp(-t / tau1) - std::exp(-t / tau0)) / (tau1 - tau0);
}

inline double bateman_peak_time(double tau0, double tau1) {
  return std::log(tau1 / tau0) * tau0 * tau1 / (tau1 - tau0);
}

inline double bateman_peak(double tau0, double tau1) {
  return bateman(bateman_peak_time(tau0, tau1), tau0, tau1);
}

// Sampled kernel h(k dt) dt, truncated after ten slow time constants.
inline std::vector<double> bateman_kernel(double rate_hz, double tau0,
                                          double tau1) {
  if (!(tau1 > tau0 && tau0 > 0.0))
    throw ParameterError("bateman: require tau1 > tau0 > 0");
  const double dt = 1.0 / rate_hz;
  const auto len = static_cast<std::size_t>(std::ceil(10.0 * tau1 * rate_hz)) + 1;
  std::vector<double> k(len);
  for (std::size_t i = 0; i < len; ++i)
    k[i] = bateman(static_cast<double>(i) * dt, tau0, tau1) * dt;
  return k;
}

} // namespace capstate::eda
