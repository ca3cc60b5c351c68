#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "capstate/core/error.hpp"

namespace capstate::cardiac {

inline constexpr double kSdFloor = 1e-8;

// Per-dimension location/scale. apply() maps x -> (x - mean) / max(sd, 1e-8).
struct ZScoreStats {
  std::vector<double> mean;
  std::vector<double> sd;

  template <typename Row> void apply(Row &row) const {
    for (std::size_t d = 0; d < mean.size(); ++d)
      row[d] = (row[d] - mean[d]) / std::max(sd[d], kSdFloor);
  }

  friend bool operator==(const ZScoreStats &, const ZScoreStats &) = default;
};

// Population statistics over rows; each row must have `dims` entries.
template <typename Row>
ZScoreStats fit_zscore(const std::vector<Row> &rows, std::size_t dims) {
  if (rows.size() < 2) throw DataError("z-score: need >= 2 windows");
  ZScoreStats s{std::vector<double>(dims, 0.0), std::vector<double>(dims, 0.0)};
  for (const auto &r : rows)
    for (std::size_t d = 0; d < dims; ++d) s.mean[d] += r[d];
  for (auto &m : s.mean) m /= static_cast<double>(rows.size());
  for (const auto &r : rows)
    for (std::size_t d = 0; d < dims; ++d) {
      const double c = r[d] - s.mean[d];
      s.sd[d] += c * c;
    }
  for (auto &v : s.sd) v = std::sqrt(v / static_cast<double>(rows.size()));
  return s;
}

template <typename Row> struct NormalizedGroups {
  std::map<std::string, std::vector<Row>> rows;
  std::map<std::string, ZScoreStats> stats;
};

// Each subject is standardized with its own statistics over all of its
// windows. Label-free, so it is safe to apply to a held-out subject.
template <typename Row>
NormalizedGroups<Row>
normalize_per_subject(const std::map<std::string, std::vector<Row>> &groups,
                      std::size_t dims) {
  NormalizedGroups<Row> out;
  for (const auto &[subject, rows] : groups) {
    if (rows.size() < 2)
      throw DataError("normalize_per_subject: subject '" + subject +
                      "' has fewer than 2 windows");
    auto stats = fit_zscore(rows, dims);
    auto normalized = rows;
    for (auto &r : normalized) stats.apply(r);
    out.rows.emplace(subject, std::move(normalized));
    out.stats.emplace(subject, std::move(stats));
  }
  return out;
}

} // namespace capstate::cardiac
