#pragma once

#include <array>
#include <string>
#include <vector>

#include "capstate/ingest/types.hpp"

namespace capstate::ingest {

inline constexpr std::size_t kWindowSamples = 120;
inline constexpr std::size_t kHrvDims = 14;
inline constexpr std::size_t kEdaDims = 12;

// One 60 s analysis window at 2 Hz.
struct WindowedSample {
  std::string subject_id;
  Condition condition = Condition::C1;
  double window_start_s = 0.0;
  std::vector<double> x_ibi;           // kWindowSamples, ms
  std::vector<double> x_eda;           // kWindowSamples, uS
  std::array<double, kHrvDims> f_hrv{};
  std::array<double, kEdaDims> f_eda{};
  LabelPair labels;

  friend bool operator==(const WindowedSample &, const WindowedSample &) = default;
};

} // namespace capstate::ingest
