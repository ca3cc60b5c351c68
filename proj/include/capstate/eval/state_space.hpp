#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "capstate/core/error.hpp"
#include "capstate/ingest/types.hpp"

namespace capstate::eval {

inline constexpr double kStateThreshold = 0.5;
inline constexpr double kFlatDelta = 0.05;

enum class Quadrant { Underutilized, MotivatedEngagement, BoundaryHighLoad, OverloadStrain };

inline constexpr std::array<Quadrant, 4> kAllQuadrants{
    Quadrant::Underutilized, Quadrant::MotivatedEngagement, Quadrant::BoundaryHighLoad,
    Quadrant::OverloadStrain};

inline std::string to_string(Quadrant q) {
  switch (q) {
  case Quadrant::Underutilized: return "underutilized";
  case Quadrant::MotivatedEngagement: return "motivated_engagement";
  case Quadrant::BoundaryHighLoad: return "boundary_high_load";
  case Quadrant::OverloadStrain: return "overload_strain";
  }
  return "?";
}

struct StateSpacePoint {
  double U = 0.0, O = 0.0;
  Quadrant quadrant = Quadrant::Underutilized;
  double c_ops = 0.0;
};

// Values exactly at the threshold count as high.
inline StateSpacePoint map_state(double U, double O) {
  if (!(U >= 0.0 && U <= 1.0 && O >= 0.0 && O <= 1.0))
    throw ParameterError("map_state: U and O must lie in [0, 1]");
  const bool hu = U >= kStateThreshold, ho = O >= kStateThreshold;
  Quadrant q = hu ? (ho ? Quadrant::BoundaryHighLoad : Quadrant::MotivatedEngagement)
                  : (ho ? Quadrant::OverloadStrain : Quadrant::Underutilized);
  return {U, O, q, 0.5 * (U + O)};
}

enum class Trajectory { Monotonic, Rising, PeakC2, FlatCeiling, Inverted };

inline constexpr std::array<Trajectory, 5> kAllTrajectories{
    Trajectory::Monotonic, Trajectory::Rising, Trajectory::PeakC2, Trajectory::FlatCeiling,
    Trajectory::Inverted};

inline std::string to_string(Trajectory t) {
  switch (t) {
  case Trajectory::Monotonic: return "monotonic";
  case Trajectory::Rising: return "rising";
  case Trajectory::PeakC2: return "peak_c2";
  case Trajectory::FlatCeiling: return "flat_ceiling";
  case Trajectory::Inverted: return "inverted";
  }
  return "?";
}

inline Trajectory parse_trajectory(const std::string &s) {
  for (auto t : kAllTrajectories)
    if (to_string(t) == s) return t;
  throw DataError("unknown trajectory pattern '" + s + "'");
}

struct Centroid {
  double U = 0.0, O = 0.0;
};

// First matching rule wins:
//   1 FlatCeiling  |dU| < 0.05 and |dO| < 0.05
//   2 Inverted     dU < 0 and dO < 0
//   3 PeakC2       mean(U, O) at c2 above c1 and c3, and dU + dO > 0
//   4 Monotonic    U and O both strictly increase c1 -> c2 -> c3
//   5 Rising       dU > 0 and dO > 0
// Mixed signs fall to Rising or Inverted by the sign of dU + dO (0 -> Flat).
// Deltas are c3 - c1.
inline Trajectory classify_trajectory(const Centroid &c1, const Centroid &c2,
                                      const Centroid &c3) {
  const double du = c3.U - c1.U, dO = c3.O - c1.O;
  if (std::abs(du) < kFlatDelta && std::abs(dO) < kFlatDelta) return Trajectory::FlatCeiling;
  if (du < 0.0 && dO < 0.0) return Trajectory::Inverted;
  const double m1 = 0.5 * (c1.U + c1.O), m2 = 0.5 * (c2.U + c2.O), m3 = 0.5 * (c3.U + c3.O);
  if (m2 > m1 && m2 > m3 && du + dO > 0.0) return Trajectory::PeakC2;
  if (c1.U < c2.U && c2.U < c3.U && c1.O < c2.O && c2.O < c3.O) return Trajectory::Monotonic;
  if (du > 0.0 && dO > 0.0) return Trajectory::Rising;
  const double s = du + dO;
  if (s > 0.0) return Trajectory::Rising;
  if (s < 0.0) return Trajectory::Inverted;
  return Trajectory::FlatCeiling;
}

struct ConditionCentroid {
  Centroid mean;
  Centroid sd; // population SD over windows
  std::size_t windows = 0;
};

struct TrajectorySummary {
  std::string subject_id;
  std::array<std::optional<ConditionCentroid>, 3> centroids;
  std::optional<double> delta_U, delta_O; // c3 - c1
  std::optional<Trajectory> pattern;      // only when all three are present
};

struct StatePrediction {
  Condition condition = Condition::C1;
  double U = 0.0, O = 0.0;
};

inline TrajectorySummary condition_centroids(const std::string &subject,
                                             const std::vector<StatePrediction> &windows) {
  TrajectorySummary s;
  s.subject_id = subject;
  for (auto c : kAllConditions) {
    double su = 0, so = 0;
    std::size_t n = 0;
    for (const auto &w : windows)
      if (w.condition == c) {
        su += w.U;
        so += w.O;
        ++n;
      }
    if (n == 0) continue;
    ConditionCentroid cc;
    cc.windows = n;
    cc.mean = {su / static_cast<double>(n), so / static_cast<double>(n)};
    double vu = 0, vo = 0;
    for (const auto &w : windows)
      if (w.condition == c) {
        vu += (w.U - cc.mean.U) * (w.U - cc.mean.U);
        vo += (w.O - cc.mean.O) * (w.O - cc.mean.O);
      }
    cc.sd = {std::sqrt(vu / static_cast<double>(n)), std::sqrt(vo / static_cast<double>(n))};
    s.centroids[index_of(c)] = cc;
  }
  const auto &a = s.centroids[0], &b = s.centroids[1], &c = s.centroids[2];
  if (a && c) {
    s.delta_U = c->mean.U - a->mean.U;
    s.delta_O = c->mean.O - a->mean.O;
  }
  if (a && b && c) s.pattern = classify_trajectory(a->mean, b->mean, c->mean);
  return s;
}

} // namespace capstate::eval
