#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "capstate/core/random.hpp"
#include "capstate/eda/bateman.hpp"
#include "capstate/ingest/types.hpp"

namespace capstate::ingest {

// Mean IBI in force from start_s until the next segment starts.
struct IbiSegment {
  double start_s = 0.0;
  double mean_ibi_ms = 800.0;
};

struct ScrEventSpec {
  double onset_s = 0.0;
  double amplitude_us = 0.0; // peak height of the phasic response
};

struct SyntheticSpec {
  std::string subject_id = "synth";
  Condition condition = Condition::C1;
  double duration_s = 60.0;
  std::vector<IbiSegment> heart_rate_profile{{0.0, 800.0}};
  double ibi_jitter_ms = 0.0;
  // Respiratory sinus arrhythmia: sinusoidal IBI modulation.
  double rsa_amplitude_ms = 0.0;
  double rsa_freq_hz = 0.25;
  std::vector<ScrEventSpec> scr_events;
  double tonic_level_us = 2.0;
  double tonic_drift_slope = 0.0; // uS per second
  double noise_sd = 0.0;          // EDA noise, uS
  double ecg_noise_sd = 0.0;      // ECG noise, mV
  double ecg_amplitude_mv = 1.0;
  double scr_tau0_s = 0.7;
  double scr_tau1_s = 2.0;
  double ecg_rate_hz = kNominalEcgRateHz;
  double eda_rate_hz = kNominalEdaRateHz;
  std::uint64_t seed = 42;

  void validate() const {
    if (!(duration_s > 0.0)) throw ParameterError("synthetic: duration must be > 0");
    if (heart_rate_profile.empty())
      throw ParameterError("synthetic: empty heart rate profile");
    for (const auto &e : scr_events) {
      if (e.amplitude_us < 0.0)
        throw ParameterError("synthetic: SCR amplitude must be >= 0");
      if (e.onset_s < 0.0 || e.onset_s > duration_s)
        throw ParameterError("synthetic: SCR onset outside the recording");
    }
    if (ibi_jitter_ms < 0.0 || noise_sd < 0.0 || ecg_noise_sd < 0.0)
      throw ParameterError("synthetic: noise levels must be >= 0");
  }
};

struct GroundTruth {
  std::vector<double> r_peak_times_s;
  std::vector<double> true_ibis_ms;
  std::vector<ScrEventSpec> scr_events;
  std::vector<double> tonic_trace; // at the EDA rate
};

// Beat template centred on the R wave: small Q dip, sharp R, deeper S and a
// broad T wave. The QRS complex spans roughly 100 ms.
inline double beat_template(double t) {
  auto g = [](double x, double sd) { return std::exp(-0.5 * x * x / (sd * sd)); };
  return -0.15 * g(t + 0.025, 0.008) + 1.0 * g(t, 0.010) -
         0.30 * g(t - 0.030, 0.010) + 0.25 * g(t - 0.250, 0.040);
}

inline double profile_mean_ibi(const std::vector<IbiSegment> &profile, double t) {
  double m = profile.front().mean_ibi_ms;
  for (const auto &s : profile)
    if (t >= s.start_s) m = s.mean_ibi_ms;
  return m;
}

inline std::pair<RawRecording, GroundTruth>
generate_synthetic_recording(const SyntheticSpec &spec) {
  spec.validate();
  const Rng root(spec.seed);
  Rng ibi_rng = root.substream("ibi");
  Rng ecg_rng = root.substream("ecg_noise");
  Rng eda_rng = root.substream("eda_noise");

  GroundTruth truth;
  auto next_ibi = [&](double t) {
    double ibi = profile_mean_ibi(spec.heart_rate_profile, t);
    if (spec.rsa_amplitude_ms != 0.0)
      ibi += spec.rsa_amplitude_ms *
             std::sin(2.0 * std::numbers::pi * spec.rsa_freq_hz * t);
    if (spec.ibi_jitter_ms > 0.0) ibi += spec.ibi_jitter_ms * ibi_rng.normal();
    return std::max(ibi, 200.0);
  };
  double t = 0.5 * next_ibi(0.0) / 1000.0;
  while (t < spec.duration_s) {
    truth.r_peak_times_s.push_back(t);
    t += next_ibi(t) / 1000.0;
  }
  for (std::size_t i = 1; i < truth.r_peak_times_s.size(); ++i)
    truth.true_ibis_ms.push_back(
        (truth.r_peak_times_s[i] - truth.r_peak_times_s[i - 1]) * 1000.0);

  RawRecording rec;
  rec.subject_id = spec.subject_id;
  rec.condition = spec.condition;
  rec.ecg_rate_hz = spec.ecg_rate_hz;
  rec.eda_rate_hz = spec.eda_rate_hz;
  rec.duration_s = spec.duration_s;
  const auto n_ecg =
      static_cast<std::size_t>(std::llround(spec.duration_s * spec.ecg_rate_hz));
  rec.ecg.assign(n_ecg, 0.0);
  const auto half = static_cast<long>(std::ceil(0.5 * spec.ecg_rate_hz));
  for (double beat : truth.r_peak_times_s) {
    const auto centre = static_cast<long>(std::llround(beat * spec.ecg_rate_hz));
    for (long i = std::max(0L, centre - half);
         i < std::min<long>(static_cast<long>(n_ecg), centre + half); ++i)
      rec.ecg[static_cast<std::size_t>(i)] +=
          spec.ecg_amplitude_mv *
          beat_template(static_cast<double>(i) / spec.ecg_rate_hz - beat);
  }
  if (spec.ecg_noise_sd > 0.0)
    for (double &v : rec.ecg) v += spec.ecg_noise_sd * ecg_rng.normal();

  const auto n_eda =
      static_cast<std::size_t>(std::llround(spec.duration_s * spec.eda_rate_hz));
  rec.eda.resize(n_eda);
  truth.tonic_trace.resize(n_eda);
  const double hmax = eda::bateman_peak(spec.scr_tau0_s, spec.scr_tau1_s);
  for (std::size_t i = 0; i < n_eda; ++i) {
    const double ti = static_cast<double>(i) / spec.eda_rate_hz;
    const double tonic = spec.tonic_level_us + spec.tonic_drift_slope * ti;
    truth.tonic_trace[i] = tonic;
    double v = tonic;
    for (const auto &e : spec.scr_events)
      v += e.amplitude_us *
           eda::bateman(ti - e.onset_s, spec.scr_tau0_s, spec.scr_tau1_s) / hmax;
    if (spec.noise_sd > 0.0) v += spec.noise_sd * eda_rng.normal();
    rec.eda[i] = v;
  }
  truth.scr_events = spec.scr_events;
  return {std::move(rec), std::move(truth)};
}

} // namespace capstate::ingest
