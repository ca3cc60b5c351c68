#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include <json.hpp>

#include "capstate/core/digest.hpp"
#include "capstate/pipeline/config.hpp"

namespace capstate::pipeline {

struct StageRecord {
  std::string config_hash;
  std::string started_utc, finished_utc;
  std::map<std::string, std::string> inputs, outputs; // relative path -> digest
};

// One manifest per output directory; each stage overwrites its own record
// and notes the config it ran under. The top-level config is the one of the
// most recent stage. Timestamps vary between runs, digests do not.
struct RunManifest {
  std::string config_hash;
  std::uint64_t seed = 0;
  json config;
  std::map<std::string, StageRecord> stages;
};

inline std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::map<std::string, std::string> digest_files(const std::filesystem::path &root,
                                                       const std::vector<std::filesystem::path> &files) {
  std::map<std::string, std::string> out;
  for (const auto &f : files)
    out[std::filesystem::relative(f, root).generic_string()] = file_digest(f);
  return out;
}

inline json to_json(const RunManifest &m) {
  json stages = json::object();
  for (const auto &[name, s] : m.stages)
    stages[name] = {{"config_hash", s.config_hash},
                    {"started_utc", s.started_utc},
                    {"finished_utc", s.finished_utc},
                    {"inputs", s.inputs},
                    {"outputs", s.outputs}};
  return {{"config_hash", m.config_hash}, {"seed", m.seed}, {"config", m.config}, {"stages", stages}};
}

inline RunManifest manifest_from_json(const json &j) {
  RunManifest m;
  try {
    m.config_hash = j.at("config_hash").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.config = j.at("config");
    for (const auto &[name, s] : j.at("stages").items())
      m.stages[name] = {s.at("config_hash").get<std::string>(),
                        s.at("started_utc").get<std::string>(), s.at("finished_utc").get<std::string>(),
                        s.at("inputs").get<std::map<std::string, std::string>>(),
                        s.at("outputs").get<std::map<std::string, std::string>>()};
  } catch (const json::exception &e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

inline std::filesystem::path manifest_path(const std::filesystem::path &dir) {
  return dir / "manifest.json";
}

inline RunManifest read_manifest(const std::filesystem::path &dir) {
  std::ifstream in(manifest_path(dir));
  if (!in) throw DataError("missing manifest", manifest_path(dir).string());
  try {
    return manifest_from_json(json::parse(in));
  } catch (const json::parse_error &e) {
    throw DataError(std::string("malformed manifest: ") + e.what(), manifest_path(dir).string());
  }
}

inline void record_stage(const std::filesystem::path &dir, const PipelineConfig &cfg,
                         const std::string &stage, StageRecord rec) {
  RunManifest m;
  if (std::filesystem::exists(manifest_path(dir))) m = read_manifest(dir);
  rec.config_hash = config_hash(cfg);
  m.config_hash = config_hash(cfg);
  m.seed = cfg.train.seed;
  m.config = to_json(cfg);
  m.stages[stage] = std::move(rec);
  std::filesystem::create_directories(dir);
  std::ofstream out(manifest_path(dir));
  if (!out) throw DataError("cannot write manifest", manifest_path(dir).string());
  out << to_json(m).dump(2) << '\n';
}

} // namespace capstate::pipeline
