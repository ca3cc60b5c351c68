#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "capstate/core/error.hpp"

namespace capstate::dsp {

// Uniformly sampled signal. Sample i sits at start_s + i / rate_hz.
struct UniformSeries {
  std::vector<double> values;
  double rate_hz = 1.0;
  double start_s = 0.0;

  std::size_t size() const noexcept { return values.size(); }
  bool empty() const noexcept { return values.empty(); }
  double time_at(std::size_t i) const {
    return start_s + static_cast<double>(i) / rate_hz;
  }
  double duration_s() const {
    return values.empty() ? 0.0
                          : static_cast<double>(values.size() - 1) / rate_hz;
  }
};

inline void require_processable(const UniformSeries &x, const char *op) {
  if (!(x.rate_hz > 0.0) || !std::isfinite(x.rate_hz))
    throw ParameterError(std::string(op) + ": sampling rate must be > 0");
  if (x.values.empty())
    throw ParameterError(std::string(op) + ": empty input series");
}

// One-sided power spectral density.
struct Spectrum {
  std::vector<double> freqs_hz;
  std::vector<double> power;
};

} // namespace capstate::dsp
