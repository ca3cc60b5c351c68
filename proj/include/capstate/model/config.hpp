#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "capstate/core/error.hpp"

namespace capstate::model {

enum class Backbone { TCN, LSTMAttention };
enum class Pooling { Last, Mean };

inline std::string to_string(Backbone b) { return b == Backbone::TCN ? "tcn" : "lstm_attention"; }
inline Backbone parse_backbone(const std::string &s) {
  if (s == "tcn" || s == "TCN") return Backbone::TCN;
  if (s == "lstm_attention" || s == "LSTMAttention") return Backbone::LSTMAttention;
  throw ParameterError("unknown backbone '" + s + "'");
}
inline std::string to_string(Pooling p) { return p == Pooling::Last ? "last" : "mean"; }
inline Pooling parse_pooling(const std::string &s) {
  if (s == "last") return Pooling::Last;
  if (s == "mean") return Pooling::Mean;
  throw ParameterError("unknown pooling '" + s + "'");
}

struct ConvStack {
  std::size_t kernel = 5;
  std::size_t channels = 16;
  std::size_t layers = 2;
  friend bool operator==(const ConvStack &, const ConvStack &) = default;
};

struct ArchConfig {
  Backbone backbone = Backbone::LSTMAttention;
  std::size_t seq_len = 120;
  std::size_t hrv_features = 14;
  std::size_t eda_features = 12;
  ConvStack ibi_conv{5, 16, 2};
  ConvStack eda_conv{9, 16, 2};
  std::vector<std::size_t> tcn_dilations{1, 2, 4, 8, 16};
  std::size_t tcn_channels = 24;
  std::size_t tcn_kernel = 3;
  Pooling tcn_pooling = Pooling::Last;
  std::size_t lstm_hidden = 32;
  std::size_t attention_dim = 32;
  std::size_t feature_embed = 32; // phi / psi output width
  std::size_t fusion_hidden = 64;
  std::size_t fusion_out = 32;
  std::size_t head_hidden = 16;
  double dropout_fusion = 0.4;
  double dropout_head = 0.3;
  // Ablation switches.
  bool use_ibi = true;
  bool use_eda = true;
  bool use_features = true;

  void validate() const {
    if (!use_ibi && !use_eda) throw ParameterError("arch: at least one modality is required");
    auto pos = [](std::size_t v, const char *what) {
      if (v < 1) throw ParameterError(std::string("arch: ") + what + " must be >= 1");
    };
    pos(seq_len, "seq_len");
    for (const auto *c : {&ibi_conv, &eda_conv}) {
      pos(c->kernel, "conv kernel");
      pos(c->channels, "conv channels");
    }
    pos(tcn_channels, "tcn_channels");
    pos(tcn_kernel, "tcn_kernel");
    pos(lstm_hidden, "lstm_hidden");
    pos(attention_dim, "attention_dim");
    pos(feature_embed, "feature_embed");
    pos(fusion_hidden, "fusion_hidden");
    pos(fusion_out, "fusion_out");
    pos(head_hidden, "head_hidden");
    if (tcn_dilations.empty()) throw ParameterError("arch: tcn_dilations is empty");
    for (std::size_t i = 0; i < tcn_dilations.size(); ++i) {
      const auto d = tcn_dilations[i];
      if (d == 0 || (d & (d - 1)) != 0)
        throw ParameterError("arch: dilations must be powers of two");
      if (i > 0 && d <= tcn_dilations[i - 1])
        throw ParameterError("arch: dilations must be strictly increasing");
    }
    for (double p : {dropout_fusion, dropout_head})
      if (!(p >= 0.0 && p < 1.0)) throw ParameterError("arch: dropout must be in [0, 1)");
  }

  friend bool operator==(const ArchConfig &, const ArchConfig &) = default;
};

struct EarlyStopConfig {
  std::size_t warmup = 15;
  std::size_t patience = 25;
  friend bool operator==(const EarlyStopConfig &, const EarlyStopConfig &) = default;
};

struct PlateauConfig {
  double factor = 0.5;
  std::size_t patience = 8;
  double min_lr = 0.0;
  friend bool operator==(const PlateauConfig &, const PlateauConfig &) = default;
};

struct TrainConfig {
  double gamma = 1.5;
  double label_smoothing = 0.05;
  double lambda_effort = 1.0;
  double lr = 2e-4;
  double weight_decay = 1e-3;
  std::size_t batch_size = 64;
  double grad_clip_norm = 1.0;
  std::size_t max_epochs = 200;
  EarlyStopConfig early_stop;
  PlateauConfig plateau;
  std::uint64_t seed = 42;

  void validate() const {
    if (!(gamma >= 0.0)) throw ParameterError("train: gamma must be >= 0");
    if (!(label_smoothing >= 0.0 && label_smoothing < 0.5))
      throw ParameterError("train: label_smoothing must be in [0, 0.5)");
    if (!(lr > 0.0)) throw ParameterError("train: lr must be > 0");
    if (weight_decay < 0.0) throw ParameterError("train: weight_decay must be >= 0");
    if (batch_size < 1) throw ParameterError("train: batch_size must be >= 1");
    if (max_epochs < 1) throw ParameterError("train: max_epochs must be >= 1");
    if (!(plateau.factor > 0.0 && plateau.factor <= 1.0))
      throw ParameterError("train: plateau factor must be in (0, 1]");
  }

  friend bool operator==(const TrainConfig &, const TrainConfig &) = default;
};

} // namespace capstate::model
