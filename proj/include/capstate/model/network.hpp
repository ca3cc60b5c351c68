#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "capstate/core/random.hpp"
#include "capstate/ingest/sample.hpp"
#include "capstate/model/loss.hpp"
#include "capstate/model/params.hpp"
#include "capstate/model/recurrent.hpp"

namespace capstate::model {

enum class Mode { Train, Infer };

struct Batch {
  Tensor x_ibi; // (B, T, 1)
  Tensor x_eda; // (B, T, 1)
  Tensor f_hrv; // (B, 14)
  Tensor f_eda; // (B, 12)
  std::vector<int> y_stress, y_effort, mask;

  std::size_t size() const { return y_stress.size(); }
};

inline Batch make_batch(const std::vector<ingest::WindowedSample> &samples,
                        const std::vector<std::size_t> &index) {
  if (index.empty()) throw ParameterError("make_batch: empty batch");
  const std::size_t B = index.size();
  const std::size_t T = samples.at(index[0]).x_ibi.size();
  const std::size_t nh = samples[index[0]].f_hrv.size(), ne = samples[index[0]].f_eda.size();
  Batch b{Tensor({B, T, 1}), Tensor({B, T, 1}), Tensor({B, nh}), Tensor({B, ne}), {}, {}, {}};
  for (std::size_t i = 0; i < B; ++i) {
    const auto &s = samples.at(index[i]);
    if (s.x_ibi.size() != T || s.x_eda.size() != T)
      throw ParameterError("make_batch: window length mismatch");
    std::copy(s.x_ibi.begin(), s.x_ibi.end(), b.x_ibi.data.begin() + i * T);
    std::copy(s.x_eda.begin(), s.x_eda.end(), b.x_eda.data.begin() + i * T);
    std::copy(s.f_hrv.begin(), s.f_hrv.end(), b.f_hrv.data.begin() + i * nh);
    std::copy(s.f_eda.begin(), s.f_eda.end(), b.f_eda.data.begin() + i * ne);
    b.y_stress.push_back(s.labels.stress == StressLabel::High ? 1 : 0);
    b.y_effort.push_back(s.labels.effort == EffortLabel::High ? 1 : 0);
    b.mask.push_back(s.labels.mask ? 1 : 0);
  }
  return b;
}

inline Batch make_batch(const std::vector<ingest::WindowedSample> &samples) {
  std::vector<std::size_t> all(samples.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return make_batch(samples, all);
}

struct ForwardOutput {
  std::vector<Prob2> p_stress, p_effort;
  std::vector<double> U, O; // U = P(effort high), O = P(stress high)
};

struct Graph {
  std::map<std::string, Var> params;
  Var logits_stress = 0, logits_effort = 0;
};

namespace detail {

inline void check_inputs(const ArchConfig &a, const Batch &b) {
  const std::size_t B = b.size();
  auto check = [&](const Tensor &t, std::vector<std::size_t> want, const char *name) {
    if (t.shape != want)
      throw ParameterError(std::string("forward: ") + name + " has shape " +
                           shape_string(t.shape) + ", expected " + shape_string(want));
    for (double v : t.data)
      if (!std::isfinite(v)) throw DataError(std::string("forward: non-finite ") + name);
  };
  if (B == 0) throw ParameterError("forward: empty batch");
  if (b.y_effort.size() != B || b.mask.size() != B)
    throw ParameterError("forward: label length mismatch");
  if (a.use_ibi) {
    check(b.x_ibi, {B, a.seq_len, 1}, "x_ibi");
    if (a.use_features) check(b.f_hrv, {B, a.hrv_features}, "f_hrv");
  }
  if (a.use_eda) {
    check(b.x_eda, {B, a.seq_len, 1}, "x_eda");
    if (a.use_features) check(b.f_eda, {B, a.eda_features}, "f_eda");
  }
}

class GraphBuilder {
public:
  GraphBuilder(Tape &t, Graph &g, const ArchConfig &a, Mode mode, std::uint64_t seed)
      : t_(t), g_(g), a_(a), mode_(mode), rng_(seed) {}

  Var p(const std::string &path) { return g_.params.at(path); }

  Var tagged(Var v, const std::string &tag) {
    t_.tag(v, tag);
    return v;
  }

  Var dense(Var x, const std::string &prefix) {
    return linear(t_, x, p(prefix + ".w"), p(prefix + ".b"));
  }

  Var drop(Var x, double rate, const std::string &site) {
    if (mode_ != Mode::Train || rate == 0.0) return x;
    auto r = rng_.substream(site);
    std::vector<unsigned char> keep(t_.value(x).size());
    for (auto &k : keep) k = r.uniform() >= rate;
    return dropout(t_, x, keep, rate);
  }

  Var stream(Var x, Var feats, const std::string &name, const ConvStack &conv) {
    Var h = x;
    for (std::size_t l = 0; l < conv.layers; ++l) {
      const std::string pre = name + ".conv" + std::to_string(l);
      h = tagged(relu(t_, conv1d_causal(t_, h, p(pre + ".w"), p(pre + ".b"), 1)), pre);
    }
    Var summary;
    if (a_.backbone == Backbone::TCN) {
      for (std::size_t i = 0; i < a_.tcn_dilations.size(); ++i) {
        const std::string blk = name + ".tcn" + std::to_string(i);
        const std::size_t d = a_.tcn_dilations[i];
        Var c1 = tagged(relu(t_, conv1d_causal(t_, h, p(blk + ".conv1.w"), p(blk + ".conv1.b"), d)),
                        blk + ".conv1");
        Var c2 = tagged(relu(t_, conv1d_causal(t_, c1, p(blk + ".conv2.w"), p(blk + ".conv2.b"), d)),
                        blk + ".conv2");
        Var res = g_.params.count(blk + ".down.w")
                      ? conv1d_causal(t_, h, p(blk + ".down.w"), p(blk + ".down.b"), 1)
                      : h;
        h = tagged(relu(t_, add(t_, c2, res)), blk + ".out");
      }
      summary = a_.tcn_pooling == Pooling::Last ? last_step(t_, h) : mean_step(t_, h);
    } else {
      Var hs = tagged(lstm(t_, h, p(name + ".lstm.wx"), p(name + ".lstm.wh"), p(name + ".lstm.b")),
                      name + ".lstm");
      summary = additive_attention(t_, hs, p(name + ".attn.w"), p(name + ".attn.b"),
                                   p(name + ".attn.v"));
    }
    if (!a_.use_features) return summary;
    Var z = relu(t_, dense(feats, name + ".feat"));
    return concat_last(t_, {summary, z});
  }

  void build(const Batch &b) {
    std::vector<Var> parts;
    if (a_.use_ibi)
      parts.push_back(stream(t_.leaf(b.x_ibi), a_.use_features ? t_.leaf(b.f_hrv) : 0, "ibi",
                             a_.ibi_conv));
    if (a_.use_eda)
      parts.push_back(stream(t_.leaf(b.x_eda), a_.use_features ? t_.leaf(b.f_eda) : 0, "eda",
                             a_.eda_conv));
    Var h = parts.size() == 1 ? parts[0] : concat_last(t_, parts);
    h = drop(relu(t_, dense(h, "fusion.fc1")), a_.dropout_fusion, "fusion.fc1");
    h = drop(relu(t_, dense(h, "fusion.fc2")), a_.dropout_fusion, "fusion.fc2");
    for (const std::string head : {"head_stress", "head_effort"}) {
      Var z = drop(relu(t_, dense(h, head + ".fc1")), a_.dropout_head, head + ".fc1");
      z = dense(z, head + ".fc2");
      (head == "head_stress" ? g_.logits_stress : g_.logits_effort) = z;
    }
  }

private:
  Tape &t_;
  Graph &g_;
  const ArchConfig &a_;
  Mode mode_;
  Rng rng_;
};

} // namespace detail

// Records the full network on `tape`. Dropout masks are drawn from
// `dropout_seed` and only in Train mode.
inline Graph build_graph(Tape &tape, const ModelParams &params, const ArchConfig &arch,
                         const Batch &batch, Mode mode, std::uint64_t dropout_seed,
                         bool params_require_grad) {
  arch.validate();
  detail::check_inputs(arch, batch);
  Graph g;
  for (const auto &[path, value] : params.tensors)
    g.params[path] = tape.leaf(value, params_require_grad);
  detail::GraphBuilder builder(tape, g, arch, mode, dropout_seed);
  try {
    builder.build(batch);
  } catch (const std::out_of_range &) {
    throw ParameterError("forward: parameters do not match the architecture");
  }
  return g;
}

inline ForwardOutput collect_output(const Tape &tape, const Graph &g) {
  const auto &zs = tape.value(g.logits_stress);
  const auto &ze = tape.value(g.logits_effort);
  ForwardOutput out;
  for (std::size_t i = 0; i < zs.rows(); ++i) {
    out.p_stress.push_back(softmax2(zs[2 * i], zs[2 * i + 1]));
    out.p_effort.push_back(softmax2(ze[2 * i], ze[2 * i + 1]));
    out.O.push_back(out.p_stress.back()[1]);
    out.U.push_back(out.p_effort.back()[1]);
  }
  return out;
}

inline ForwardOutput forward(const ModelParams &params, const ArchConfig &arch,
                             const Batch &batch, Mode mode = Mode::Infer,
                             std::uint64_t dropout_seed = 0) {
  Tape tape;
  const auto g = build_graph(tape, params, arch, batch, mode, dropout_seed, false);
  return collect_output(tape, g);
}

struct GradientResult {
  ModelParams grads;
  LossTerms loss;
};

// Loss and reverse-mode gradients for one batch.
inline GradientResult compute_gradients(const ModelParams &params, const ArchConfig &arch,
                                        const TrainConfig &cfg, const Batch &batch,
                                        Mode mode = Mode::Train,
                                        std::uint64_t dropout_seed = 0) {
  Tape tape;
  const auto g = build_graph(tape, params, arch, batch, mode, dropout_seed, true);
  GradientResult r;
  const Var loss = multitask_loss_node(tape, g.logits_stress, g.logits_effort, batch.y_stress,
                                       batch.y_effort, batch.mask, cfg, &r.loss);
  tape.backward(loss);
  for (const auto &[path, v] : g.params) {
    Tensor grad = tape.has_grad(v) ? tape.grad(v) : Tensor(params.at(path).shape, 0.0);
    for (double x : grad.data)
      if (!std::isfinite(x))
        throw NumericalError("non-finite gradient in parameter '" + path + "'");
    r.grads.tensors.emplace(path, std::move(grad));
  }
  return r;
}

} // namespace capstate::model
