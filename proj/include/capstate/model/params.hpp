#pragma once

#include <cmath>
#include <map>
#include <string>

#include "capstate/core/random.hpp"
#include "capstate/model/config.hpp"
#include "capstate/model/tensor.hpp"

namespace capstate::model {

// Parameter tensors keyed by stable path, e.g. "ibi.conv0.w", "head_stress.fc1.b".
struct ModelParams {
  std::map<std::string, Tensor> tensors;

  std::size_t count() const {
    std::size_t n = 0;
    for (const auto &[k, v] : tensors) n += v.size();
    return n;
  }
  Tensor &at(const std::string &path) {
    const auto it = tensors.find(path);
    if (it == tensors.end()) throw ParameterError("unknown parameter '" + path + "'");
    return it->second;
  }
  const Tensor &at(const std::string &path) const {
    return const_cast<ModelParams *>(this)->at(path);
  }

  friend bool operator==(const ModelParams &, const ModelParams &) = default;
};

namespace detail {

struct ParamBuilder {
  ModelParams &p;
  Rng &rng;

  // Glorot-uniform weights with the given fan-in / fan-out.
  void weight(const std::string &path, std::vector<std::size_t> shape, std::size_t fan_in,
              std::size_t fan_out) {
    Tensor t(std::move(shape));
    const double lim = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto &v : t.data) v = rng.uniform(-lim, lim);
    p.tensors[path] = std::move(t);
  }
  void bias(const std::string &path, std::size_t n, double fill = 0.0) {
    p.tensors[path] = Tensor({n}, fill);
  }
  void dense(const std::string &prefix, std::size_t in, std::size_t out) {
    weight(prefix + ".w", {in, out}, in, out);
    bias(prefix + ".b", out);
  }
  void conv(const std::string &prefix, std::size_t k, std::size_t in, std::size_t out) {
    weight(prefix + ".w", {k, in, out}, k * in, k * out);
    bias(prefix + ".b", out);
  }
};

// Width of the temporal summary emitted by a stream's backbone.
inline std::size_t temporal_width(const ArchConfig &a) {
  return a.backbone == Backbone::TCN ? a.tcn_channels : a.lstm_hidden;
}

inline void build_stream(ParamBuilder &pb, const ArchConfig &a, const std::string &name,
                         const ConvStack &conv, std::size_t feature_dims) {
  std::size_t ch = 1;
  for (std::size_t l = 0; l < conv.layers; ++l) {
    pb.conv(name + ".conv" + std::to_string(l), conv.kernel, ch, conv.channels);
    ch = conv.channels;
  }
  if (a.backbone == Backbone::TCN) {
    for (std::size_t i = 0; i < a.tcn_dilations.size(); ++i) {
      const std::string blk = name + ".tcn" + std::to_string(i);
      pb.conv(blk + ".conv1", a.tcn_kernel, ch, a.tcn_channels);
      pb.conv(blk + ".conv2", a.tcn_kernel, a.tcn_channels, a.tcn_channels);
      if (ch != a.tcn_channels) pb.conv(blk + ".down", 1, ch, a.tcn_channels);
      ch = a.tcn_channels;
    }
  } else {
    const std::size_t h = a.lstm_hidden;
    pb.weight(name + ".lstm.wx", {ch, 4 * h}, ch, 4 * h);
    pb.weight(name + ".lstm.wh", {h, 4 * h}, h, 4 * h);
    Tensor bias({4 * h}, 0.0);
    for (std::size_t j = h; j < 2 * h; ++j) bias[j] = 1.0; // forget gate
    pb.p.tensors[name + ".lstm.b"] = std::move(bias);
    pb.dense(name + ".attn", h, a.attention_dim);
    pb.weight(name + ".attn.v", {a.attention_dim}, a.attention_dim, 1);
  }
  if (a.use_features) pb.dense(name + ".feat", feature_dims, a.feature_embed);
}

} // namespace detail

inline std::size_t fusion_input_width(const ArchConfig &a) {
  const std::size_t per = detail::temporal_width(a) + (a.use_features ? a.feature_embed : 0);
  return per * ((a.use_ibi ? 1 : 0) + (a.use_eda ? 1 : 0));
}

inline ModelParams init_params(const ArchConfig &a, std::uint64_t seed) {
  a.validate();
  ModelParams p;
  Rng rng(seed);
  detail::ParamBuilder pb{p, rng};
  if (a.use_ibi) detail::build_stream(pb, a, "ibi", a.ibi_conv, a.hrv_features);
  if (a.use_eda) detail::build_stream(pb, a, "eda", a.eda_conv, a.eda_features);
  pb.dense("fusion.fc1", fusion_input_width(a), a.fusion_hidden);
  pb.dense("fusion.fc2", a.fusion_hidden, a.fusion_out);
  for (const std::string head : {"head_stress", "head_effort"}) {
    pb.dense(head + ".fc1", a.fusion_out, a.head_hidden);
    pb.dense(head + ".fc2", a.head_hidden, 2);
  }
  return p;
}

} // namespace capstate::model
