#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "capstate/model/config.hpp"
#include "capstate/model/tape.hpp"

namespace capstate::model {

inline constexpr double kProbFloor = 1e-12;

using Prob2 = std::array<double, 2>;

inline Prob2 smoothed_target(int y, double eps) {
  Prob2 q{eps / 2.0, eps / 2.0};
  q[static_cast<std::size_t>(y)] += 1.0 - eps;
  return q;
}

//   loss = -sum_c q_c (1 - p_c)^gamma ln p_c,  q = (1 - eps) onehot(y) + eps / 2
// with p_c clamped to >= 1e-12 inside the log.
inline double focal_loss(const Prob2 &p, int y, double gamma, double eps) {
  const auto q = smoothed_target(y, eps);
  double loss = 0.0;
  for (std::size_t c = 0; c < 2; ++c) {
    if (q[c] == 0.0) continue;
    const double pc = std::max(p[c], kProbFloor);
    const double w = std::pow(std::max(0.0, 1.0 - p[c]), gamma);
    loss -= q[c] * w * std::log(pc);
  }
  return loss;
}

// d loss / d p_c. The clamp is treated as the identity.
inline Prob2 focal_loss_grad(const Prob2 &p, int y, double gamma, double eps) {
  const auto q = smoothed_target(y, eps);
  Prob2 g{0.0, 0.0};
  for (std::size_t c = 0; c < 2; ++c) {
    if (q[c] == 0.0) continue;
    const double pc = std::max(p[c], kProbFloor);
    const double om = std::max(0.0, 1.0 - p[c]);
    const double w = std::pow(om, gamma);
    const double dw = (gamma == 0.0 || om == 0.0) ? 0.0 : gamma * std::pow(om, gamma - 1.0);
    g[c] = -q[c] * (w / pc - dw * std::log(pc));
  }
  return g;
}

inline Prob2 softmax2(double z0, double z1) {
  const double m = std::max(z0, z1);
  const double e0 = std::exp(z0 - m), e1 = std::exp(z1 - m);
  return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

struct LossTerms {
  double total = 0.0;
  double stress = 0.0;
  double effort = 0.0;
};

// Stress term: batch mean. Effort term: mask-weighted mean, 0 when no sample
// carries a valid effort label. total = stress + lambda * effort.
inline LossTerms masked_multitask_loss(const std::vector<Prob2> &p_stress,
                                       const std::vector<Prob2> &p_effort,
                                       const std::vector<int> &y_stress,
                                       const std::vector<int> &y_effort,
                                       const std::vector<int> &mask, const TrainConfig &cfg) {
  const std::size_t n = p_stress.size();
  if (p_effort.size() != n || y_stress.size() != n || y_effort.size() != n || mask.size() != n)
    throw ParameterError("masked_multitask_loss: length mismatch");
  if (n == 0) throw ParameterError("masked_multitask_loss: empty batch");
  LossTerms out;
  double msum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.stress += focal_loss(p_stress[i], y_stress[i], cfg.gamma, cfg.label_smoothing);
    if (mask[i]) {
      out.effort += focal_loss(p_effort[i], y_effort[i], cfg.gamma, cfg.label_smoothing);
      msum += 1.0;
    }
  }
  out.stress /= static_cast<double>(n);
  out.effort = msum > 0.0 ? out.effort / msum : 0.0;
  out.total = out.stress + cfg.lambda_effort * out.effort;
  return out;
}

// Tape op: the masked multitask loss as a function of the two heads' logits
// (B, 2). Returns a scalar node.
inline Var multitask_loss_node(Tape &t, Var logits_stress, Var logits_effort,
                               const std::vector<int> &y_stress,
                               const std::vector<int> &y_effort, const std::vector<int> &mask,
                               const TrainConfig &cfg, LossTerms *terms = nullptr) {
  const auto &Zs = t.value(logits_stress);
  const auto &Ze = t.value(logits_effort);
  const std::size_t n = Zs.rows();
  std::vector<Prob2> ps(n), pe(n);
  for (std::size_t i = 0; i < n; ++i) {
    ps[i] = softmax2(Zs[2 * i], Zs[2 * i + 1]);
    pe[i] = softmax2(Ze[2 * i], Ze[2 * i + 1]);
  }
  const auto lt = masked_multitask_loss(ps, pe, y_stress, y_effort, mask, cfg);
  if (terms) *terms = lt;
  double msum = 0.0;
  for (int m : mask) msum += m ? 1.0 : 0.0;
  return t.push(Tensor({1}, lt.total), {logits_stress, logits_effort},
                [=](Tape &tp, Var self) {
                  const double g = tp.grad(self)[0];
                  // Softmax Jacobian: dz_j = p_j (dp_j - sum_c p_c dp_c).
                  auto push = [](Tensor &gz, std::size_t i, const Prob2 &p, const Prob2 &dp,
                                 double scale) {
                    const double dot = p[0] * dp[0] + p[1] * dp[1];
                    gz[2 * i] += scale * p[0] * (dp[0] - dot);
                    gz[2 * i + 1] += scale * p[1] * (dp[1] - dot);
                  };
                  if (tp.requires_grad(logits_stress)) {
                    auto &gz = tp.grad(logits_stress);
                    for (std::size_t i = 0; i < n; ++i)
                      push(gz, i, ps[i],
                           focal_loss_grad(ps[i], y_stress[i], cfg.gamma, cfg.label_smoothing),
                           g / static_cast<double>(n));
                  }
                  if (tp.requires_grad(logits_effort) && msum > 0.0 && cfg.lambda_effort != 0.0) {
                    auto &gz = tp.grad(logits_effort);
                    for (std::size_t i = 0; i < n; ++i)
                      if (mask[i])
                        push(gz, i, pe[i],
                             focal_loss_grad(pe[i], y_effort[i], cfg.gamma, cfg.label_smoothing),
                             g * cfg.lambda_effort / msum);
                  }
                });
}

} // namespace capstate::model
