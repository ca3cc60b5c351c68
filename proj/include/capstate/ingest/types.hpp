#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "capstate/core/error.hpp"

namespace capstate {

enum class Condition { C1, C2, C3 };

inline constexpr std::array<Condition, 3> kAllConditions{
    Condition::C1, Condition::C2, Condition::C3};

inline std::string_view to_string(Condition c) {
  switch (c) {
  case Condition::C1: return "c1";
  case Condition::C2: return "c2";
  case Condition::C3: return "c3";
  }
  return "?";
}

inline Condition parse_condition(std::string_view s) {
  if (s == "c1" || s == "C1") return Condition::C1;
  if (s == "c2" || s == "C2") return Condition::C2;
  if (s == "c3" || s == "C3") return Condition::C3;
  throw DataError("unknown condition '" + std::string(s) + "'");
}

inline std::size_t index_of(Condition c) { return static_cast<std::size_t>(c); }

enum class StressLabel { Low = 0, High = 1 };
enum class EffortLabel { Low = 0, High = 1, Undefined = 2 };

// Per-window supervision. mask == 0 exactly when effort is Undefined.
struct LabelPair {
  StressLabel stress = StressLabel::Low;
  EffortLabel effort = EffortLabel::Low;
  int mask = 1;

  friend bool operator==(const LabelPair &, const LabelPair &) = default;
};

namespace ingest {

inline constexpr double kNominalEcgRateHz = 2048.0;
inline constexpr double kNominalEdaRateHz = 32.0;

struct RawRecording {
  std::string subject_id;
  Condition condition = Condition::C1;
  std::vector<double> ecg; // mV
  double ecg_rate_hz = kNominalEcgRateHz;
  std::vector<double> eda; // uS
  double eda_rate_hz = kNominalEdaRateHz;
  double duration_s = 0.0;
};

} // namespace ingest
} // namespace capstate
