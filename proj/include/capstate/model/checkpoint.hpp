#pragma once

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "capstate/model/params.hpp"

namespace capstate::model {

inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json params_to_json(const ModelParams &p) {
  nlohmann::json j;
  j["format"] = "capstate-checkpoint";
  j["version"] = kCheckpointVersion;
  auto &tensors = j["params"];
  tensors = nlohmann::json::object();
  for (const auto &[path, t] : p.tensors)
    tensors[path] = {{"shape", t.shape}, {"values", t.data}};
  return j;
}

inline ModelParams params_from_json(const nlohmann::json &j) {
  if (j.value("format", "") != "capstate-checkpoint")
    throw DataError("checkpoint: not a capstate checkpoint");
  if (j.value("version", 0) != kCheckpointVersion)
    throw DataError("checkpoint: unsupported version");
  ModelParams p;
  for (const auto &[path, t] : j.at("params").items()) {
    p.tensors[path] = Tensor(t.at("shape").get<std::vector<std::size_t>>(),
                             t.at("values").get<std::vector<double>>());
  }
  return p;
}

inline void save_checkpoint(const std::filesystem::path &file, const ModelParams &p) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw DataError("cannot write checkpoint", file.string());
  out << params_to_json(p).dump();
}

inline ModelParams load_checkpoint(const std::filesystem::path &file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open checkpoint", file.string());
  try {
    return params_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception &e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what(), file.string());
  }
}

} // namespace capstate::model
