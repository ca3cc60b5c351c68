#pragma once

#include <cmath>
#include <memory>

#include "capstate/model/ops.hpp"

namespace capstate::model {

namespace detail {
inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
} // namespace detail

// Single-layer LSTM over (B, T, C) returning every hidden state (B, T, H).
// Gate blocks in Wx (C, 4H), Wh (H, 4H) and b (4H) are ordered i, f, g, o.
inline Var lstm(Tape &t, Var x, Var wx, Var wh, Var b) {
  const auto &X = t.value(x);
  const auto &Wx = t.value(wx);
  const auto &Wh = t.value(wh);
  require_shape(X.rank() == 3 && Wx.rank() == 2 && Wx.dim(0) == X.dim(2) &&
                    Wh.rank() == 2 && Wh.dim(1) == Wx.dim(1) && Wh.dim(1) == 4 * Wh.dim(0),
                "lstm", X.shape);
  const std::size_t B = X.dim(0), T = X.dim(1), C = X.dim(2), H = Wh.dim(0), G4 = 4 * H;
  const auto eB = static_cast<Eigen::Index>(B), eH = static_cast<Eigen::Index>(H),
             eG = static_cast<Eigen::Index>(G4);

  struct Cache {
    RowMat gates; // (T * B, 4H) post-activation, time-major
    RowMat c;     // ((T + 1) * B, H)
    RowMat h;     // ((T + 1) * B, H)
  };
  auto cache = std::make_shared<Cache>();
  cache->gates.resize(static_cast<Eigen::Index>(T * B), eG);
  cache->c = RowMat::Zero(static_cast<Eigen::Index>((T + 1) * B), eH);
  cache->h = RowMat::Zero(static_cast<Eigen::Index>((T + 1) * B), eH);

  const RowMat xw = as_matrix(X, B * T, C) * as_matrix(Wx, C, G4);
  const CMapMat WhM = as_matrix(Wh, H, G4);
  const CMapVec bias(t.value(b).data.data(), eG);
  Tensor y({B, T, H});
  RowMat z(eB, eG);
  for (std::size_t s = 0; s < T; ++s) {
    for (std::size_t bb = 0; bb < B; ++bb)
      z.row(static_cast<Eigen::Index>(bb)) = xw.row(static_cast<Eigen::Index>(bb * T + s));
    z.noalias() += cache->h.middleRows(static_cast<Eigen::Index>(s * B), eB) * WhM;
    z.rowwise() += bias.transpose();
    auto gates = cache->gates.middleRows(static_cast<Eigen::Index>(s * B), eB);
    for (Eigen::Index r = 0; r < eB; ++r)
      for (Eigen::Index j = 0; j < eG; ++j) {
        const double v = z(r, j);
        gates(r, j) = (j >= 2 * eH && j < 3 * eH) ? std::tanh(v) : detail::sigmoid(v);
      }
    auto cprev = cache->c.middleRows(static_cast<Eigen::Index>(s * B), eB);
    auto cnext = cache->c.middleRows(static_cast<Eigen::Index>((s + 1) * B), eB);
    auto hnext = cache->h.middleRows(static_cast<Eigen::Index>((s + 1) * B), eB);
    for (Eigen::Index r = 0; r < eB; ++r)
      for (Eigen::Index j = 0; j < eH; ++j) {
        const double i = gates(r, j), f = gates(r, eH + j), g = gates(r, 2 * eH + j),
                     o = gates(r, 3 * eH + j);
        const double c = f * cprev(r, j) + i * g;
        cnext(r, j) = c;
        const double h = o * std::tanh(c);
        hnext(r, j) = h;
        y[(static_cast<std::size_t>(r) * T + s) * H + static_cast<std::size_t>(j)] = h;
      }
  }

  return t.push(std::move(y), {x, wx, wh, b}, [=](Tape &tp, Var self) {
    const auto &Gy = tp.grad(self);
    const CMapMat WhM = as_matrix(tp.value(wh), H, G4);
    RowMat dxw(static_cast<Eigen::Index>(B * T), eG);
    RowMat dWh = RowMat::Zero(eH, eG);
    RowMat dh_next = RowMat::Zero(eB, eH), dc_next = RowMat::Zero(eB, eH);
    RowMat dz(eB, eG);
    for (std::size_t s = T; s-- > 0;) {
      const auto gates = cache->gates.middleRows(static_cast<Eigen::Index>(s * B), eB);
      const auto cprev = cache->c.middleRows(static_cast<Eigen::Index>(s * B), eB);
      const auto ccur = cache->c.middleRows(static_cast<Eigen::Index>((s + 1) * B), eB);
      for (Eigen::Index r = 0; r < eB; ++r)
        for (Eigen::Index j = 0; j < eH; ++j) {
          const double dh =
              dh_next(r, j) +
              Gy[(static_cast<std::size_t>(r) * T + s) * H + static_cast<std::size_t>(j)];
          const double i = gates(r, j), f = gates(r, eH + j), g = gates(r, 2 * eH + j),
                       o = gates(r, 3 * eH + j);
          const double tc = std::tanh(ccur(r, j));
          const double dc = dc_next(r, j) + dh * o * (1.0 - tc * tc);
          dz(r, j) = dc * g * i * (1.0 - i);
          dz(r, eH + j) = dc * cprev(r, j) * f * (1.0 - f);
          dz(r, 2 * eH + j) = dc * i * (1.0 - g * g);
          dz(r, 3 * eH + j) = dh * tc * o * (1.0 - o);
          dc_next(r, j) = dc * f;
        }
      dWh.noalias() += cache->h.middleRows(static_cast<Eigen::Index>(s * B), eB).transpose() * dz;
      dh_next.noalias() = dz * WhM.transpose();
      for (std::size_t bb = 0; bb < B; ++bb)
        dxw.row(static_cast<Eigen::Index>(bb * T + s)) = dz.row(static_cast<Eigen::Index>(bb));
    }
    if (tp.requires_grad(wh)) as_matrix(tp.grad(wh), H, G4) += dWh;
    if (tp.requires_grad(wx))
      as_matrix(tp.grad(wx), C, G4).noalias() +=
          as_matrix(tp.value(x), B * T, C).transpose() * dxw;
    if (tp.requires_grad(x))
      as_matrix(tp.grad(x), B * T, C).noalias() +=
          dxw * as_matrix(tp.value(wx), C, G4).transpose();
    if (tp.requires_grad(b)) MapVec(tp.grad(b).data.data(), eG) += dxw.colwise().sum().transpose();
  });
}

// Additive attention pooling over time: u = tanh(h W + b), score = u v,
// weights = softmax over time, output = sum_t weight_t h_t. (B, T, H) -> (B, H).
inline Var additive_attention(Tape &t, Var h, Var w, Var b, Var v) {
  const auto &Hs = t.value(h);
  const auto &W = t.value(w);
  require_shape(Hs.rank() == 3 && W.rank() == 2 && W.dim(0) == Hs.dim(2),
                "additive_attention", Hs.shape);
  const std::size_t B = Hs.dim(0), T = Hs.dim(1), H = Hs.dim(2), A = W.dim(1);
  const auto eA = static_cast<Eigen::Index>(A);

  struct Cache {
    RowMat u;               // (B * T, A)
    std::vector<double> a;  // (B * T)
  };
  auto cache = std::make_shared<Cache>();
  const CMapMat hm = as_matrix(Hs, B * T, H);
  cache->u = hm * as_matrix(W, H, A);
  cache->u.rowwise() += CMapVec(t.value(b).data.data(), eA).transpose();
  cache->u = cache->u.array().tanh();
  const Eigen::VectorXd score = cache->u * CMapVec(t.value(v).data.data(), eA);
  cache->a.resize(B * T);
  Tensor y({B, H});
  for (std::size_t bb = 0; bb < B; ++bb) {
    double mx = -INFINITY;
    for (std::size_t s = 0; s < T; ++s)
      mx = std::max(mx, score(static_cast<Eigen::Index>(bb * T + s)));
    double z = 0.0;
    for (std::size_t s = 0; s < T; ++s) {
      const double e = std::exp(score(static_cast<Eigen::Index>(bb * T + s)) - mx);
      cache->a[bb * T + s] = e;
      z += e;
    }
    for (std::size_t s = 0; s < T; ++s) {
      const double a = cache->a[bb * T + s] /= z;
      for (std::size_t c = 0; c < H; ++c) y[bb * H + c] += a * Hs[(bb * T + s) * H + c];
    }
  }

  return t.push(std::move(y), {h, w, b, v}, [=](Tape &tp, Var self) {
    const auto &G = tp.grad(self);
    const auto &Hs = tp.value(h);
    Eigen::VectorXd ds(static_cast<Eigen::Index>(B * T));
    RowMat dh = RowMat::Zero(static_cast<Eigen::Index>(B * T), static_cast<Eigen::Index>(H));
    for (std::size_t bb = 0; bb < B; ++bb) {
      double dot = 0.0;
      for (std::size_t s = 0; s < T; ++s) {
        double da = 0.0;
        const double a = cache->a[bb * T + s];
        for (std::size_t c = 0; c < H; ++c) {
          da += G[bb * H + c] * Hs[(bb * T + s) * H + c];
          dh(static_cast<Eigen::Index>(bb * T + s), static_cast<Eigen::Index>(c)) =
              a * G[bb * H + c];
        }
        ds(static_cast<Eigen::Index>(bb * T + s)) = da;
        dot += a * da;
      }
      for (std::size_t s = 0; s < T; ++s) {
        auto &e = ds(static_cast<Eigen::Index>(bb * T + s));
        e = cache->a[bb * T + s] * (e - dot);
      }
    }
    if (tp.requires_grad(v))
      MapVec(tp.grad(v).data.data(), eA) += cache->u.transpose() * ds;
    const CMapVec vv(tp.value(v).data.data(), eA);
    RowMat dpre = (ds * vv.transpose()).array() * (1.0 - cache->u.array().square());
    if (tp.requires_grad(w))
      as_matrix(tp.grad(w), H, A).noalias() += as_matrix(Hs, B * T, H).transpose() * dpre;
    if (tp.requires_grad(b)) MapVec(tp.grad(b).data.data(), eA) += dpre.colwise().sum().transpose();
    if (tp.requires_grad(h)) {
      dh.noalias() += dpre * as_matrix(tp.value(w), H, A).transpose();
      as_matrix(tp.grad(h), B * T, H) += dh;
    }
  });
}

} // namespace capstate::model
