#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "capstate/cardiac/hrv.hpp"
#include "capstate/cardiac/ibi.hpp"
#include "capstate/cardiac/r_peaks.hpp"
#include "capstate/dsp/butterworth.hpp"
#include "capstate/dsp/resample.hpp"
#include "capstate/dsp/windowing.hpp"
#include "capstate/eda/cvxeda.hpp"
#include "capstate/eda/features.hpp"
#include "capstate/eda/preprocess.hpp"
#include "capstate/eda/scr.hpp"
#include "capstate/ingest/labels.hpp"
#include "capstate/ingest/sample.hpp"

namespace capstate::pipeline {

struct FeaturizeConfig {
  dsp::WindowingPlan windowing; // 120 samples at 2 Hz, 75% overlap
  double grid_hz = 2.0;
  double trim_head_s = 0.0; // discarded at the start of every recording
  double trim_tail_s = 0.0;
  cardiac::PanTompkinsParams peaks;
  cardiac::HrvSpectralParams spectral;
  eda::EdaPreprocessParams eda;
  eda::CvxEdaParams cvxeda;
  double scr_threshold_us = eda::kDefaultScrThresholdUs;

  void validate() const {
    windowing.validate();
    if (windowing.window_len_samples != ingest::kWindowSamples)
      throw ParameterError("featurize: the model expects windows of " +
                           std::to_string(ingest::kWindowSamples) + " samples");
    if (grid_hz != eda.target_hz)
      throw ParameterError("featurize: IBI grid and EDA rate must agree");
    if (trim_head_s < 0.0 || trim_tail_s < 0.0)
      throw ParameterError("featurize: trims must be >= 0");
    cvxeda.validate();
  }
};

namespace detail {

inline dsp::UniformSeries crop(const dsp::UniformSeries &x, double t0, std::size_t n) {
  const double pos = (t0 - x.start_s) * x.rate_hz;
  const auto i0 = static_cast<std::size_t>(std::llround(pos));
  if (std::abs(pos - static_cast<double>(i0)) > 1e-6 || i0 + n > x.size())
    throw DataError("featurize: series are not on a common grid");
  return {{x.values.begin() + static_cast<std::ptrdiff_t>(i0),
           x.values.begin() + static_cast<std::ptrdiff_t>(i0 + n)},
          x.rate_hz, t0};
}

} // namespace detail

// One recording to labeled windows. IBI and EDA share the k / grid_hz time
// grid; windows cover the span where both exist, after the trims.
//   X_IBI  artifact-corrected IBI, ms
//   X_EDA  conditioned EDA (detrended, low-passed, 2 Hz), uS
// The raw-signal EDA statistics use the low-passed 2 Hz trace before
// detrending, so they keep the absolute conductance level.
inline std::vector<ingest::WindowedSample>
featurize_recording(const ingest::RawRecording &rec, const FeaturizeConfig &cfg = {}) {
  cfg.validate();
  const dsp::UniformSeries ecg{rec.ecg, rec.ecg_rate_hz, 0.0};
  const dsp::UniformSeries eda_raw{rec.eda, rec.eda_rate_hz, 0.0};

  const auto ibi = cardiac::build_ibi(cardiac::detect_r_peaks(ecg, cfg.peaks));
  const auto ibi_grid = cardiac::ibi_to_uniform(ibi, cfg.grid_hz);

  const auto eda_clean = eda::preprocess_eda(eda_raw, cfg.eda);
  const auto eda_level = dsp::resample_uniform(
      dsp::butterworth_lowpass(eda_raw, cfg.eda.lowpass_order, cfg.eda.lowpass_hz),
      cfg.eda.target_hz);
  const auto dec = eda::cvxeda_decompose(eda_clean, cfg.cvxeda);
  const auto events = eda::detect_scrs(dec.phasic, cfg.scr_threshold_us);

  const double dt = 1.0 / cfg.grid_hz;
  const double end_ibi = ibi_grid.start_s + static_cast<double>(ibi_grid.size() - 1) * dt;
  const double end_eda = eda_clean.start_s + static_cast<double>(eda_clean.size() - 1) * dt;
  const double t0 = std::ceil(std::max({ibi_grid.start_s, eda_clean.start_s, cfg.trim_head_s}) *
                                  cfg.grid_hz - 1e-9) /
                    cfg.grid_hz;
  const double t1 = std::min({end_ibi, end_eda, rec.duration_s - cfg.trim_tail_s});
  if (t1 < t0) return {};
  const auto n = static_cast<std::size_t>(std::floor((t1 - t0) * cfg.grid_hz + 1e-9)) + 1;

  const auto x_ibi = dsp::window_segment(detail::crop(ibi_grid, t0, n), cfg.windowing);
  const auto x_eda = dsp::window_segment(detail::crop(eda_clean, t0, n), cfg.windowing);
  const auto level = dsp::window_segment(detail::crop(eda_level, t0, n), cfg.windowing);
  const auto tonic = dsp::window_segment(detail::crop(dec.tonic, t0, n), cfg.windowing);
  const auto phasic = dsp::window_segment(detail::crop(dec.phasic, t0, n), cfg.windowing);

  const auto labels = ingest::assign_labels(rec.condition);
  const double span = static_cast<double>(cfg.windowing.window_len_samples) / cfg.grid_hz;
  std::vector<ingest::WindowedSample> out;
  for (std::size_t k = 0; k < x_ibi.size(); ++k) {
    ingest::WindowedSample s;
    s.subject_id = rec.subject_id;
    s.condition = rec.condition;
    s.window_start_s = x_ibi[k].start_s;
    s.x_ibi = x_ibi[k].values;
    s.x_eda = x_eda[k].values;
    s.f_hrv = cardiac::hrv_features(x_ibi[k], cfg.spectral).to_array();
    s.f_eda = eda::eda_features(level[k], tonic[k], phasic[k],
                                eda::events_in_window(events, s.window_start_s,
                                                      s.window_start_s + span))
                  .to_array();
    s.labels = labels;
    for (double v : s.f_hrv)
      if (!std::isfinite(v)) throw NumericalError("featurize: non-finite HRV feature");
    for (double v : s.f_eda)
      if (!std::isfinite(v)) throw NumericalError("featurize: non-finite EDA feature");
    out.push_back(std::move(s));
  }
  return out;
}

} // namespace capstate::pipeline
