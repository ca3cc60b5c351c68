#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "capstate/core/error.hpp"

namespace capstate::csv {

inline std::vector<std::string_view> split(std::string_view line,
                                           char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline double parse_double(std::string_view field, const std::string &file,
                           long row) {
  field = trim(field);
  double v = 0.0;
  const auto *first = field.data();
  const auto *last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || field.empty())
    throw DataError("malformed number '" + std::string(field) + "'", file, row);
  return v;
}

// Whole-file reader. Row numbers reported in errors are 1-based file lines.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name, const std::string &file) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw DataError("missing column '" + std::string(name) + "'", file, 1);
  }
};

inline Table read_table(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw DataError("missing file", path.string());
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty file", path.string(), 1);
  for (auto f : split(trim(line))) t.header.emplace_back(trim(f));
  while (std::getline(in, line)) {
    auto tl = trim(line);
    if (tl.empty()) continue;
    std::vector<std::string> row;
    for (auto f : split(tl)) row.emplace_back(trim(f));
    t.rows.push_back(std::move(row));
  }
  return t;
}

// Shortest representation that round-trips a double.
inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

} // namespace capstate::csv
