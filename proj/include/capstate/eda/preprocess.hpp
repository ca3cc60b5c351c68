#pragma once

#include "capstate/dsp/butterworth.hpp"
#include "capstate/dsp/detrend.hpp"
#include "capstate/dsp/resample.hpp"

namespace capstate::eda {

struct EdaPreprocessParams {
  int lowpass_order = 4;
  double lowpass_hz = 1.0;
  double target_hz = 2.0;
  double min_duration_s = 60.0;
};

// Detrend, low-pass, then downsample.
inline dsp::UniformSeries preprocess_eda(const dsp::UniformSeries &raw,
                                         const EdaPreprocessParams &p = {}) {
  dsp::require_processable(raw, "preprocess_eda");
  if (static_cast<double>(raw.size()) / raw.rate_hz < p.min_duration_s)
    throw DataError("preprocess_eda: EDA shorter than " +
                    std::to_string(p.min_duration_s) + " s");
  auto x = dsp::detrend_linear(raw);
  x = dsp::butterworth_lowpass(x, p.lowpass_order, p.lowpass_hz);
  return dsp::resample_uniform(x, p.target_hz);
}

} // namespace capstate::eda
