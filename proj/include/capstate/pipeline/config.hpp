#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "capstate/core/digest.hpp"
#include "capstate/core/error.hpp"
#include "capstate/eval/loso.hpp"
#include "capstate/pipeline/featurize.hpp"

namespace capstate::pipeline {

using nlohmann::json;

struct PipelineConfig {
  std::filesystem::path data_root = "data";
  std::filesystem::path output_root = "out";
  FeaturizeConfig featurize;
  eval::NormalizationMode normalization_mode = eval::NormalizationMode::SelfPerSubject;
  ingest::LabelScheme sensitivity_scheme = ingest::LabelScheme::Primary;
  std::size_t inner_val_subjects = 3;
  std::size_t parallel_folds = 1;
  // Backbone, modality and feature switches live in arch.
  model::ArchConfig arch;
  model::TrainConfig train;

  void validate() const {
    featurize.validate();
    arch.validate();
    train.validate();
    if (arch.seq_len != featurize.windowing.window_len_samples)
      throw ParameterError("config: arch.seq_len must equal the window length");
    if (parallel_folds < 1) throw ParameterError("config: parallel_folds must be >= 1");
    if (inner_val_subjects < 1) throw ParameterError("config: inner_val_subjects must be >= 1");
  }

  eval::LosoConfig loso() const {
    return {arch, train, normalization_mode, sensitivity_scheme, inner_val_subjects};
  }

  friend bool operator==(const PipelineConfig &a, const PipelineConfig &b);
};

namespace detail {

inline void check_keys(const json &j, std::initializer_list<const char *> allowed,
                       const std::string &where) {
  if (!j.is_object()) throw ParameterError("config: '" + where + "' must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto &[k, v] : j.items())
    if (!ok.count(k)) throw ParameterError("config: unknown key '" + where + k + "'");
}

template <typename T> void read(const json &j, const char *key, T &out, const std::string &where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception &) {
    throw ParameterError("config: bad value for '" + where + key + "'");
  }
}

inline json conv_to_json(const model::ConvStack &c) {
  return {{"kernel", c.kernel}, {"channels", c.channels}, {"layers", c.layers}};
}

inline model::ConvStack conv_from_json(const json &j, const std::string &where) {
  check_keys(j, {"kernel", "channels", "layers"}, where);
  model::ConvStack c;
  read(j, "kernel", c.kernel, where);
  read(j, "channels", c.channels, where);
  read(j, "layers", c.layers, where);
  return c;
}

} // namespace detail

inline json to_json(const PipelineConfig &c) {
  const auto &a = c.arch;
  const auto &t = c.train;
  std::vector<std::string> modalities;
  if (a.use_ibi) modalities.push_back("ibi");
  if (a.use_eda) modalities.push_back("eda");
  return {
      {"data_root", c.data_root.generic_string()},
      {"output_root", c.output_root.generic_string()},
      {"windowing",
       {{"window_len_samples", c.featurize.windowing.window_len_samples},
        {"overlap_fraction", c.featurize.windowing.overlap_fraction},
        {"trim_head_s", c.featurize.trim_head_s},
        {"trim_tail_s", c.featurize.trim_tail_s}}},
      {"normalization_mode", eval::to_string(c.normalization_mode)},
      {"sensitivity_scheme", eval::to_string(c.sensitivity_scheme)},
      {"inner_val_subjects", c.inner_val_subjects},
      {"parallel_folds", c.parallel_folds},
      {"ablation",
       {{"backbone", model::to_string(a.backbone)},
        {"modalities", modalities},
        {"use_handcrafted_features", a.use_features}}},
      {"arch",
       {{"seq_len", a.seq_len},
        {"ibi_conv", detail::conv_to_json(a.ibi_conv)},
        {"eda_conv", detail::conv_to_json(a.eda_conv)},
        {"tcn_dilations", a.tcn_dilations},
        {"tcn_channels", a.tcn_channels},
        {"tcn_kernel", a.tcn_kernel},
        {"tcn_pooling", model::to_string(a.tcn_pooling)},
        {"lstm_hidden", a.lstm_hidden},
        {"attention_dim", a.attention_dim},
        {"feature_embed", a.feature_embed},
        {"fusion_hidden", a.fusion_hidden},
        {"fusion_out", a.fusion_out},
        {"head_hidden", a.head_hidden},
        {"dropout_fusion", a.dropout_fusion},
        {"dropout_head", a.dropout_head}}},
      {"train",
       {{"gamma", t.gamma},
        {"label_smoothing", t.label_smoothing},
        {"lambda_effort", t.lambda_effort},
        {"lr", t.lr},
        {"weight_decay", t.weight_decay},
        {"batch_size", t.batch_size},
        {"grad_clip_norm", t.grad_clip_norm},
        {"max_epochs", t.max_epochs},
        {"early_stop_warmup", t.early_stop.warmup},
        {"early_stop_patience", t.early_stop.patience},
        {"plateau_factor", t.plateau.factor},
        {"plateau_patience", t.plateau.patience},
        {"plateau_min_lr", t.plateau.min_lr},
        {"seed", t.seed}}},
  };
}

// Missing keys keep their defaults; unknown keys are rejected.
inline PipelineConfig config_from_json(const json &j) {
  using detail::read;
  detail::check_keys(j,
                     {"data_root", "output_root", "windowing", "normalization_mode",
                      "sensitivity_scheme", "inner_val_subjects", "parallel_folds", "ablation",
                      "arch", "train"},
                     "");
  PipelineConfig c;
  std::string s;
  if (j.contains("data_root")) {
    read(j, "data_root", s, "");
    c.data_root = s;
  }
  if (j.contains("output_root")) {
    read(j, "output_root", s, "");
    c.output_root = s;
  }
  if (j.contains("windowing")) {
    const auto &w = j["windowing"];
    detail::check_keys(w, {"window_len_samples", "overlap_fraction", "trim_head_s", "trim_tail_s"},
                       "windowing.");
    read(w, "window_len_samples", c.featurize.windowing.window_len_samples, "windowing.");
    read(w, "overlap_fraction", c.featurize.windowing.overlap_fraction, "windowing.");
    read(w, "trim_head_s", c.featurize.trim_head_s, "windowing.");
    read(w, "trim_tail_s", c.featurize.trim_tail_s, "windowing.");
  }
  if (j.contains("normalization_mode")) {
    read(j, "normalization_mode", s, "");
    c.normalization_mode = eval::parse_normalization_mode(s);
  }
  if (j.contains("sensitivity_scheme")) {
    read(j, "sensitivity_scheme", s, "");
    c.sensitivity_scheme = eval::parse_label_scheme(s);
  }
  read(j, "inner_val_subjects", c.inner_val_subjects, "");
  read(j, "parallel_folds", c.parallel_folds, "");
  auto &a = c.arch;
  if (j.contains("ablation")) {
    const auto &ab = j["ablation"];
    detail::check_keys(ab, {"backbone", "modalities", "use_handcrafted_features"}, "ablation.");
    if (ab.contains("backbone")) {
      read(ab, "backbone", s, "ablation.");
      a.backbone = model::parse_backbone(s);
    }
    if (ab.contains("modalities")) {
      std::vector<std::string> m;
      read(ab, "modalities", m, "ablation.");
      a.use_ibi = a.use_eda = false;
      for (const auto &x : m) {
        if (x == "ibi") a.use_ibi = true;
        else if (x == "eda") a.use_eda = true;
        else throw ParameterError("config: unknown modality '" + x + "'");
      }
      if (m.empty()) throw ParameterError("config: ablation.modalities must be non-empty");
    }
    read(ab, "use_handcrafted_features", a.use_features, "ablation.");
  }
  if (j.contains("arch")) {
    const auto &x = j["arch"];
    const std::string w = "arch.";
    detail::check_keys(x,
                       {"seq_len", "ibi_conv", "eda_conv", "tcn_dilations", "tcn_channels",
                        "tcn_kernel", "tcn_pooling", "lstm_hidden", "attention_dim",
                        "feature_embed", "fusion_hidden", "fusion_out", "head_hidden",
                        "dropout_fusion", "dropout_head"},
                       w);
    read(x, "seq_len", a.seq_len, w);
    if (x.contains("ibi_conv")) a.ibi_conv = detail::conv_from_json(x["ibi_conv"], w + "ibi_conv.");
    if (x.contains("eda_conv")) a.eda_conv = detail::conv_from_json(x["eda_conv"], w + "eda_conv.");
    read(x, "tcn_dilations", a.tcn_dilations, w);
    read(x, "tcn_channels", a.tcn_channels, w);
    read(x, "tcn_kernel", a.tcn_kernel, w);
    if (x.contains("tcn_pooling")) {
      read(x, "tcn_pooling", s, w);
      a.tcn_pooling = model::parse_pooling(s);
    }
    read(x, "lstm_hidden", a.lstm_hidden, w);
    read(x, "attention_dim", a.attention_dim, w);
    read(x, "feature_embed", a.feature_embed, w);
    read(x, "fusion_hidden", a.fusion_hidden, w);
    read(x, "fusion_out", a.fusion_out, w);
    read(x, "head_hidden", a.head_hidden, w);
    read(x, "dropout_fusion", a.dropout_fusion, w);
    read(x, "dropout_head", a.dropout_head, w);
  }
  if (j.contains("train")) {
    const auto &x = j["train"];
    const std::string w = "train.";
    auto &t = c.train;
    detail::check_keys(x,
                       {"gamma", "label_smoothing", "lambda_effort", "lr", "weight_decay",
                        "batch_size", "grad_clip_norm", "max_epochs", "early_stop_warmup",
                        "early_stop_patience", "plateau_factor", "plateau_patience",
                        "plateau_min_lr", "seed"},
                       w);
    read(x, "gamma", t.gamma, w);
    read(x, "label_smoothing", t.label_smoothing, w);
    read(x, "lambda_effort", t.lambda_effort, w);
    read(x, "lr", t.lr, w);
    read(x, "weight_decay", t.weight_decay, w);
    read(x, "batch_size", t.batch_size, w);
    read(x, "grad_clip_norm", t.grad_clip_norm, w);
    read(x, "max_epochs", t.max_epochs, w);
    read(x, "early_stop_warmup", t.early_stop.warmup, w);
    read(x, "early_stop_patience", t.early_stop.patience, w);
    read(x, "plateau_factor", t.plateau.factor, w);
    read(x, "plateau_patience", t.plateau.patience, w);
    read(x, "plateau_min_lr", t.plateau.min_lr, w);
    read(x, "seed", t.seed, w);
  }
  c.validate();
  return c;
}

inline bool operator==(const PipelineConfig &a, const PipelineConfig &b) {
  return to_json(a) == to_json(b);
}

inline PipelineConfig load_config(const std::filesystem::path &file) {
  std::ifstream in(file);
  if (!in) throw ParameterError("cannot open config file '" + file.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error &e) {
    throw ParameterError("config '" + file.string() + "': " + e.what());
  }
  return config_from_json(j);
}

// key=value with a dotted key into the serialized config. The value is read
// as JSON when it parses as JSON and as a string otherwise.
inline void apply_override(json &j, const std::string &assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ParameterError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  json *node = &j;
  std::size_t pos = 0;
  while (true) {
    const auto dot = key.find('.', pos);
    const std::string part = key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (!node->is_object() || !node->contains(part))
      throw ParameterError("unknown config key '" + key + "'");
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error &) {
    value = text;
  }
  *node = value;
}

inline PipelineConfig with_overrides(const PipelineConfig &base,
                                     const std::vector<std::string> &assignments) {
  auto j = to_json(base);
  for (const auto &a : assignments) apply_override(j, a);
  return config_from_json(j);
}

inline std::string config_hash(const PipelineConfig &c) { return hex_digest(to_json(c).dump()); }

} // namespace capstate::pipeline
