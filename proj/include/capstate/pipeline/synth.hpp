#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "capstate/core/random.hpp"
#include "capstate/ingest/synthetic.hpp"

namespace capstate::pipeline {

// Study-level generator: every subject gets its own autonomic baseline, and
// each condition shifts heart rate, vagal modulation and SCR frequency by a
// demand-graded step (c1 < c2 < c3).
struct SynthStudySpec {
  std::size_t subjects = 10;
  double duration_s = 240.0;
  double ibi_step_ms = 70.0;      // mean IBI drop per demand level
  double rsa_base_ms = 40.0;      // RSA amplitude at c1
  double rsa_step_ms = 10.0;      // RSA reduction per level
  double scr_rate_base_per_min = 2.0;
  double scr_rate_step_per_min = 2.0;
  double ecg_rate_hz = ingest::kNominalEcgRateHz;
  double eda_rate_hz = ingest::kNominalEdaRateHz;
  std::uint64_t seed = 42;
};

inline std::string synth_subject_id(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "s%02zu", i + 1);
  return buf;
}

inline std::vector<ingest::RawRecording> generate_study(const SynthStudySpec &spec) {
  std::vector<ingest::RawRecording> out;
  const Rng root(spec.seed);
  for (std::size_t s = 0; s < spec.subjects; ++s) {
    const auto id = synth_subject_id(s);
    auto subj = root.substream("subject", s);
    const double base_ibi = 850.0 + 50.0 * subj.normal();
    const double base_tonic = 3.0 + 0.8 * subj.normal();
    for (auto c : kAllConditions) {
      const double level = static_cast<double>(index_of(c));
      auto rng = subj.substream("condition", index_of(c));
      ingest::SyntheticSpec rs;
      rs.subject_id = id;
      rs.condition = c;
      rs.duration_s = spec.duration_s;
      rs.heart_rate_profile = {{0.0, base_ibi - spec.ibi_step_ms * level}};
      rs.ibi_jitter_ms = 12.0;
      rs.rsa_amplitude_ms = spec.rsa_base_ms - spec.rsa_step_ms * level;
      rs.rsa_freq_hz = 0.25 + 0.02 * rng.normal();
      rs.tonic_level_us = std::max(0.5, base_tonic + 0.4 * level);
      rs.tonic_drift_slope = 0.0005 * rng.normal();
      rs.noise_sd = 0.005;
      rs.ecg_noise_sd = 0.02;
      rs.ecg_rate_hz = spec.ecg_rate_hz;
      rs.eda_rate_hz = spec.eda_rate_hz;
      rs.seed = rng.next_u64();
      const double rate = (spec.scr_rate_base_per_min + spec.scr_rate_step_per_min * level) / 60.0;
      for (double t = 2.0 + rng.uniform() / rate; t < spec.duration_s - 5.0;
           t += (0.5 + rng.uniform()) / rate)
        rs.scr_events.push_back({t, 0.15 + 0.25 * rng.uniform()});
      out.push_back(ingest::generate_synthetic_recording(rs).first);
    }
  }
  return out;
}

} // namespace capstate::pipeline
