#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "capstate/core/csv.hpp"
#include "capstate/ingest/types.hpp"

namespace capstate::ingest {

namespace fs = std::filesystem;

// Relative tolerance on every sample step versus the nominal rate.
inline constexpr double kRateTolerance = 0.05;

struct SessionEntry {
  std::string subject_id;
  Condition condition;
  fs::path ecg_file; // relative to the data root
  fs::path eda_file;
};

inline fs::path default_ecg_path(const std::string &subject, Condition c) {
  return fs::path(subject) / ("ecg_" + std::string(to_string(c)) + ".csv");
}
inline fs::path default_eda_path(const std::string &subject, Condition c) {
  return fs::path(subject) / ("eda_" + std::string(to_string(c)) + ".csv");
}

inline std::vector<SessionEntry> read_sessions(const fs::path &root) {
  const fs::path file = root / "sessions.csv";
  const auto table = csv::read_table(file);
  const auto fn = file.string();
  const auto cs = table.column("subject_id", fn);
  const auto cc = table.column("condition", fn);
  const auto ce = table.column("ecg_file", fn);
  const auto cd = table.column("eda_file", fn);
  std::vector<SessionEntry> out;
  long row = 2;
  for (const auto &r : table.rows) {
    if (r.size() != table.header.size())
      throw DataError("wrong field count", fn, row);
    try {
      out.push_back({r[cs], parse_condition(r[cc]), r[ce], r[cd]});
    } catch (const DataError &e) {
      throw DataError(e.what(), fn, row);
    }
    ++row;
  }
  return out;
}

// Reads a two-column (t_s, value) trace and verifies strictly increasing,
// uniformly spaced timestamps at the nominal rate.
inline std::vector<double> read_trace(const fs::path &file,
                                      const std::string &value_column,
                                      double nominal_rate_hz) {
  std::ifstream in(file);
  const auto fn = file.string();
  if (!in) throw DataError("missing file", fn);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty file", fn, 1);
  const auto header = csv::split(csv::trim(line));
  if (header.size() != 2 || csv::trim(header[0]) != "t_s" ||
      csv::trim(header[1]) != value_column)
    throw DataError("bad header, expected 't_s," + value_column + "'", fn, 1);
  const double step = 1.0 / nominal_rate_hz;
  std::vector<double> values;
  double prev_t = 0.0;
  long row = 1;
  while (std::getline(in, line)) {
    ++row;
    const auto tl = csv::trim(line);
    if (tl.empty()) continue;
    const auto f = csv::split(tl);
    if (f.size() != 2) throw DataError("wrong field count", fn, row);
    const double t = csv::parse_double(f[0], fn, row);
    const double v = csv::parse_double(f[1], fn, row);
    if (!values.empty()) {
      const double dt = t - prev_t;
      if (!(dt > 0.0)) throw DataError("non-monotonic timestamps", fn, row);
      if (std::abs(dt - step) > kRateTolerance * step)
        throw DataError("sample rate mismatch: step " + csv::format_double(dt) +
                            " s vs nominal " + csv::format_double(step) + " s",
                        fn, row);
    }
    prev_t = t;
    values.push_back(v);
  }
  if (values.empty()) throw DataError("no samples", fn, 2);
  return values;
}

inline RawRecording load_recording(const fs::path &root,
                                   const std::string &subject_id,
                                   Condition condition,
                                   double ecg_rate_hz = kNominalEcgRateHz,
                                   double eda_rate_hz = kNominalEdaRateHz) {
  fs::path ecg_rel = default_ecg_path(subject_id, condition);
  fs::path eda_rel = default_eda_path(subject_id, condition);
  if (fs::exists(root / "sessions.csv")) {
    for (const auto &s : read_sessions(root))
      if (s.subject_id == subject_id && s.condition == condition) {
        ecg_rel = s.ecg_file;
        eda_rel = s.eda_file;
      }
  }
  RawRecording rec;
  rec.subject_id = subject_id;
  rec.condition = condition;
  rec.ecg_rate_hz = ecg_rate_hz;
  rec.eda_rate_hz = eda_rate_hz;
  rec.ecg = read_trace(root / ecg_rel, "mv", ecg_rate_hz);
  rec.eda = read_trace(root / eda_rel, "us", eda_rate_hz);
  rec.duration_s = static_cast<double>(rec.ecg.size()) / ecg_rate_hz;
  const double eda_expected = rec.duration_s * eda_rate_hz;
  // Both traces must cover the same session; allow one EDA sample of rounding
  // plus the step tolerance accumulated over the trace.
  if (std::abs(static_cast<double>(rec.eda.size()) - eda_expected) >
      1.0 + kRateTolerance * eda_expected)
    throw DataError("ECG and EDA durations disagree",
                    (root / eda_rel).string());
  return rec;
}

// Canonical writers, the inverse of the readers above.
inline void write_trace(const fs::path &file, const std::string &value_column,
                        const std::vector<double> &values, double rate_hz) {
  fs::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw DataError("cannot write file", file.string());
  out << "t_s," << value_column << '\n';
  char buf[64];
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.9f,%.6f\n",
                  static_cast<double>(i) / rate_hz, values[i]);
    out << buf;
  }
}

inline void write_recording(const fs::path &root, const RawRecording &rec) {
  write_trace(root / default_ecg_path(rec.subject_id, rec.condition), "mv",
              rec.ecg, rec.ecg_rate_hz);
  write_trace(root / default_eda_path(rec.subject_id, rec.condition), "us",
              rec.eda, rec.eda_rate_hz);
}

inline void write_sessions(const fs::path &root,
                           const std::vector<SessionEntry> &sessions) {
  fs::create_directories(root);
  std::ofstream out(root / "sessions.csv");
  out << "subject_id,condition,ecg_file,eda_file\n";
  for (const auto &s : sessions)
    out << s.subject_id << ',' << to_string(s.condition) << ','
        << s.ecg_file.generic_string() << ',' << s.eda_file.generic_string()
        << '\n';
}

} // namespace capstate::ingest
