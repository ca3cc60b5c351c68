#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>

#include "capstate/core/error.hpp"
#include "capstate/core/random.hpp"

namespace capstate {

// 64-bit FNV-1a content digest rendered as 16 hex digits. Used for run
// manifests; not a cryptographic hash.
inline std::string hex_digest(std::string_view bytes) {
  const std::uint64_t h = fnv1a64(bytes);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string file_digest(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file for digest", path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return hex_digest(bytes);
}

} // namespace capstate
