#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "capstate/cardiac/hrv.hpp"
#include "capstate/core/csv.hpp"
#include "capstate/eda/features.hpp"
#include "capstate/ingest/sample.hpp"

namespace capstate::pipeline {

namespace fs = std::filesystem;

inline std::string effort_to_string(EffortLabel e) {
  switch (e) {
  case EffortLabel::Low: return "low";
  case EffortLabel::High: return "high";
  case EffortLabel::Undefined: return "undefined";
  }
  return "?";
}

inline EffortLabel parse_effort(const std::string &s) {
  if (s == "low") return EffortLabel::Low;
  if (s == "high") return EffortLabel::High;
  if (s == "undefined") return EffortLabel::Undefined;
  throw DataError("unknown effort label '" + s + "'");
}

inline std::string stress_to_string(StressLabel s) { return s == StressLabel::High ? "high" : "low"; }

inline StressLabel parse_stress(const std::string &s) {
  if (s == "low") return StressLabel::Low;
  if (s == "high") return StressLabel::High;
  throw DataError("unknown stress label '" + s + "'");
}

inline std::vector<std::string> window_columns() {
  std::vector<std::string> h{"subject", "condition", "window_start_s", "stress_label",
                             "effort_label", "mask"};
  for (std::size_t i = 0; i < ingest::kWindowSamples; ++i) h.push_back("ibi_" + std::to_string(i));
  for (std::size_t i = 0; i < ingest::kWindowSamples; ++i) h.push_back("eda_" + std::to_string(i));
  for (auto n : cardiac::kHrvFeatureNames) h.emplace_back("hrv_" + std::string(n));
  for (auto n : eda::kEdaFeatureNames) h.emplace_back("edaf_" + std::string(n));
  return h;
}

inline fs::path windows_file(const fs::path &dir, const std::string &subject) {
  return dir / ("windows_" + subject + ".csv");
}

// Doubles are written in shortest round-trip form, so read(write(x)) == x.
inline void write_windows_csv(const fs::path &file, const std::vector<ingest::WindowedSample> &w) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw DataError("cannot write file", file.string());
  const auto cols = window_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto &s : w) {
    out << s.subject_id << ',' << to_string(s.condition) << ','
        << csv::format_double(s.window_start_s) << ',' << stress_to_string(s.labels.stress) << ','
        << effort_to_string(s.labels.effort) << ',' << s.labels.mask;
    for (double v : s.x_ibi) out << ',' << csv::format_double(v);
    for (double v : s.x_eda) out << ',' << csv::format_double(v);
    for (double v : s.f_hrv) out << ',' << csv::format_double(v);
    for (double v : s.f_eda) out << ',' << csv::format_double(v);
    out << '\n';
  }
}

inline std::vector<ingest::WindowedSample> read_windows_csv(const fs::path &file) {
  const auto t = csv::read_table(file);
  const auto fn = file.string();
  if (t.header != window_columns()) throw DataError("unexpected window file header", fn, 1);
  std::vector<ingest::WindowedSample> out;
  long row = 2;
  for (const auto &r : t.rows) {
    if (r.size() != t.header.size()) throw DataError("wrong field count", fn, row);
    try {
      ingest::WindowedSample s;
      s.subject_id = r[0];
      s.condition = parse_condition(r[1]);
      s.window_start_s = csv::parse_double(r[2], fn, row);
      s.labels.stress = parse_stress(r[3]);
      s.labels.effort = parse_effort(r[4]);
      s.labels.mask = r[5] == "1" ? 1 : r[5] == "0" ? 0 : throw DataError("mask must be 0 or 1");
      if ((s.labels.mask == 0) != (s.labels.effort == EffortLabel::Undefined))
        throw DataError("mask must be 0 exactly when effort is undefined");
      std::size_t c = 6;
      for (std::size_t i = 0; i < ingest::kWindowSamples; ++i)
        s.x_ibi.push_back(csv::parse_double(r[c++], fn, row));
      for (std::size_t i = 0; i < ingest::kWindowSamples; ++i)
        s.x_eda.push_back(csv::parse_double(r[c++], fn, row));
      for (auto &v : s.f_hrv) v = csv::parse_double(r[c++], fn, row);
      for (auto &v : s.f_eda) v = csv::parse_double(r[c++], fn, row);
      out.push_back(std::move(s));
    } catch (const DataError &e) {
      if (!e.file().empty()) throw;
      throw DataError(e.what(), fn, row);
    }
    ++row;
  }
  return out;
}

} // namespace capstate::pipeline
