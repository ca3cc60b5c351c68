#pragma once

#include <cmath>

#include "capstate/model/params.hpp"

namespace capstate::model {

struct AdamWState {
  ModelParams m, v;
  std::size_t step = 0;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

inline double global_norm(const ModelParams &g) {
  double ss = 0.0;
  for (const auto &[k, t] : g.tensors)
    for (double x : t.data) ss += x * x;
  return std::sqrt(ss);
}

// Rescales all gradients together so their joint L2 norm is at most max_norm.
// Returns the norm before clipping. max_norm <= 0 disables clipping.
inline double clip_global_norm(ModelParams &g, double max_norm) {
  const double n = global_norm(g);
  if (max_norm > 0.0 && n > max_norm) {
    const double s = max_norm / n;
    for (auto &[k, t] : g.tensors)
      for (double &x : t.data) x *= s;
  }
  return n;
}

// One decoupled-weight-decay Adam step (step index advances to state.step + 1):
//   theta <- theta - lr * (m_hat / (sqrt(v_hat) + eps) + wd * theta)
// Gradients are clipped in place first.
inline void adamw_step(ModelParams &params, ModelParams &grads, AdamWState &state, double lr,
                       double weight_decay, double clip_norm) {
  clip_global_norm(grads, clip_norm);
  if (state.step == 0) {
    state.m = grads;
    state.v = grads;
    for (auto *s : {&state.m, &state.v})
      for (auto &[k, t] : s->tensors) std::fill(t.data.begin(), t.data.end(), 0.0);
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
  for (auto &[path, theta] : params.tensors) {
    const auto &g = grads.at(path);
    auto &m = state.m.at(path);
    auto &v = state.v.at(path);
    if (g.shape != theta.shape)
      throw ParameterError("adamw: gradient shape mismatch for '" + path + "'");
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * g[i];
      v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * g[i] * g[i];
      const double mhat = m[i] / c1, vhat = v[i] / c2;
      theta[i] -= lr * (mhat / (std::sqrt(vhat) + kAdamEps) + weight_decay * theta[i]);
    }
  }
}

} // namespace capstate::model
