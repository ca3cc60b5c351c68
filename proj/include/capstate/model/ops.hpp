#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <vector>

#include "capstate/model/tape.hpp"

namespace capstate::model {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;
using MapVec = Eigen::Map<Eigen::VectorXd>;
using CMapVec = Eigen::Map<const Eigen::VectorXd>;

inline MapMat as_matrix(Tensor &t, std::size_t rows, std::size_t cols) {
  return {t.data.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}
inline CMapMat as_matrix(const Tensor &t, std::size_t rows, std::size_t cols) {
  return {t.data.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

inline void require_shape(bool ok, const char *op, const std::vector<std::size_t> &got) {
  if (!ok) throw ParameterError(std::string(op) + ": unexpected shape " + shape_string(got));
}

// y = x W + b over the last dimension; x is (..., in), W is (in, out).
inline Var linear(Tape &t, Var x, Var w, Var b) {
  const auto &X = t.value(x);
  const auto &W = t.value(w);
  require_shape(W.rank() == 2 && X.last() == W.dim(0), "linear", X.shape);
  const std::size_t n = X.rows(), in = W.dim(0), out = W.dim(1);
  auto shape = X.shape;
  shape.back() = out;
  Tensor y(shape);
  auto Y = as_matrix(y, n, out);
  Y.noalias() = as_matrix(X, n, in) * as_matrix(W, in, out);
  Y.rowwise() += CMapVec(t.value(b).data.data(), static_cast<Eigen::Index>(out)).transpose();
  return t.push(std::move(y), {x, w, b}, [x, w, b, n, in, out](Tape &tp, Var self) {
    const auto G = as_matrix(tp.grad(self), n, out);
    if (tp.requires_grad(x))
      as_matrix(tp.grad(x), n, in).noalias() += G * as_matrix(tp.value(w), in, out).transpose();
    if (tp.requires_grad(w))
      as_matrix(tp.grad(w), in, out).noalias() += as_matrix(tp.value(x), n, in).transpose() * G;
    if (tp.requires_grad(b))
      MapVec(tp.grad(b).data.data(), static_cast<Eigen::Index>(out)) += G.colwise().sum().transpose();
  });
}

inline Var relu(Tape &t, Var x) {
  const auto &X = t.value(x);
  Tensor y(X.shape);
  auto &sig = t.relu_signature();
  for (std::size_t i = 0; i < X.size(); ++i) {
    y[i] = X[i] > 0.0 || std::isnan(X[i]) ? X[i] : 0.0;
    sig.push_back(X[i] > 0.0);
  }
  return t.push(std::move(y), {x}, [x](Tape &tp, Var self) {
    const auto &X = tp.value(x);
    const auto &G = tp.grad(self);
    auto &gx = tp.grad(x);
    for (std::size_t i = 0; i < X.size(); ++i)
      if (X[i] > 0.0) gx[i] += G[i];
  });
}

inline Var add(Tape &t, Var a, Var b) {
  require_shape(t.value(a).shape == t.value(b).shape, "add", t.value(b).shape);
  Tensor y = t.value(a);
  const auto &B = t.value(b);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += B[i];
  return t.push(std::move(y), {a, b}, [a, b](Tape &tp, Var self) {
    const auto &G = tp.grad(self);
    for (Var v : {a, b})
      if (tp.requires_grad(v)) {
        auto &g = tp.grad(v);
        for (std::size_t i = 0; i < G.size(); ++i) g[i] += G[i];
      }
  });
}

// Concatenation along the last dimension; leading dimensions must agree.
inline Var concat_last(Tape &t, const std::vector<Var> &parts) {
  if (parts.empty()) throw ParameterError("concat_last: nothing to concatenate");
  const std::size_t rows = t.value(parts[0]).rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (Var p : parts) {
    require_shape(t.value(p).rows() == rows, "concat_last", t.value(p).shape);
    widths.push_back(t.value(p).last());
    total += widths.back();
  }
  auto shape = t.value(parts[0]).shape;
  shape.back() = total;
  Tensor y(shape);
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto &P = t.value(parts[k]);
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(P.data.begin() + r * widths[k], widths[k],
                  y.data.begin() + r * total + off);
    off += widths[k];
  }
  return t.push(std::move(y), parts, [parts, widths, rows, total](Tape &tp, Var self) {
    const auto &G = tp.grad(self);
    std::size_t off = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      if (tp.requires_grad(parts[k])) {
        auto &g = tp.grad(parts[k]);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < widths[k]; ++c)
            g[r * widths[k] + c] += G[r * total + off + c];
      }
      off += widths[k];
    }
  });
}

// Inverted dropout with a caller-supplied keep mask (1 = keep).
inline Var dropout(Tape &t, Var x, const std::vector<unsigned char> &keep, double rate) {
  const auto &X = t.value(x);
  if (keep.size() != X.size()) throw ParameterError("dropout: mask size mismatch");
  const double scale = 1.0 / (1.0 - rate);
  Tensor y(X.shape);
  for (std::size_t i = 0; i < X.size(); ++i) y[i] = keep[i] ? X[i] * scale : 0.0;
  return t.push(std::move(y), {x}, [x, keep, scale](Tape &tp, Var self) {
    const auto &G = tp.grad(self);
    auto &g = tp.grad(x);
    for (std::size_t i = 0; i < G.size(); ++i)
      if (keep[i]) g[i] += G[i] * scale;
  });
}

// (B, T, C) -> (B, C) at the final time step.
inline Var last_step(Tape &t, Var x) {
  const auto &X = t.value(x);
  require_shape(X.rank() == 3, "last_step", X.shape);
  const std::size_t B = X.dim(0), T = X.dim(1), C = X.dim(2);
  Tensor y({B, C});
  for (std::size_t b = 0; b < B; ++b)
    std::copy_n(X.data.begin() + (b * T + T - 1) * C, C, y.data.begin() + b * C);
  return t.push(std::move(y), {x}, [x, B, T, C](Tape &tp, Var self) {
    const auto &G = tp.grad(self);
    auto &g = tp.grad(x);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t c = 0; c < C; ++c) g[(b * T + T - 1) * C + c] += G[b * C + c];
  });
}

// (B, T, C) -> (B, C) mean over time.
inline Var mean_step(Tape &t, Var x) {
  const auto &X = t.value(x);
  require_shape(X.rank() == 3, "mean_step", X.shape);
  const std::size_t B = X.dim(0), T = X.dim(1), C = X.dim(2);
  Tensor y({B, C});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t s = 0; s < T; ++s)
      for (std::size_t c = 0; c < C; ++c) y[b * C + c] += X[(b * T + s) * C + c] / T;
  return t.push(std::move(y), {x}, [x, B, T, C](Tape &tp, Var self) {
    const auto &G = tp.grad(self);
    auto &g = tp.grad(x);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t s = 0; s < T; ++s)
        for (std::size_t c = 0; c < C; ++c)
          g[(b * T + s) * C + c] += G[b * C + c] / static_cast<double>(T);
  });
}

// Causal dilated convolution: x (B, T, Cin), W (K, Cin, Cout), b (Cout).
//   y[b, s] = bias + sum_k x[b, s - k * dilation] W[k]
// Positions before the start are treated as zero, so y[b, s] depends only on
// x[b, <= s].
inline Var conv1d_causal(Tape &t, Var x, Var w, Var b, std::size_t dilation) {
  const auto &X = t.value(x);
  const auto &W = t.value(w);
  require_shape(X.rank() == 3 && W.rank() == 3 && W.dim(1) == X.dim(2), "conv1d_causal",
                X.shape);
  const std::size_t B = X.dim(0), T = X.dim(1), Ci = X.dim(2), K = W.dim(0),
                    Co = W.dim(2);
  Tensor y({B, T, Co});
  const CMapVec bias(t.value(b).data.data(), static_cast<Eigen::Index>(Co));
  for (std::size_t bb = 0; bb < B; ++bb) {
    auto Y = MapMat(y.data.data() + bb * T * Co, static_cast<Eigen::Index>(T),
                    static_cast<Eigen::Index>(Co));
    Y.rowwise() = bias.transpose();
    for (std::size_t k = 0; k < K; ++k) {
      const std::size_t shift = k * dilation;
      if (shift >= T) break;
      const auto rows = static_cast<Eigen::Index>(T - shift);
      const CMapMat Xk(X.data.data() + bb * T * Ci, rows, static_cast<Eigen::Index>(Ci));
      const CMapMat Wk(W.data.data() + k * Ci * Co, static_cast<Eigen::Index>(Ci),
                       static_cast<Eigen::Index>(Co));
      Y.bottomRows(rows).noalias() += Xk * Wk;
    }
  }
  return t.push(std::move(y), {x, w, b}, [=](Tape &tp, Var self) {
    const auto &G = tp.grad(self);
    const auto &X = tp.value(x);
    const auto &W = tp.value(w);
    const bool gx = tp.requires_grad(x), gw = tp.requires_grad(w);
    for (std::size_t bb = 0; bb < B; ++bb) {
      const CMapMat Gb(G.data.data() + bb * T * Co, static_cast<Eigen::Index>(T),
                       static_cast<Eigen::Index>(Co));
      if (tp.requires_grad(b))
        MapVec(tp.grad(b).data.data(), static_cast<Eigen::Index>(Co)) +=
            Gb.colwise().sum().transpose();
      for (std::size_t k = 0; k < K; ++k) {
        const std::size_t shift = k * dilation;
        if (shift >= T) break;
        const auto rows = static_cast<Eigen::Index>(T - shift);
        if (gx) {
          MapMat dX(tp.grad(x).data.data() + bb * T * Ci, rows, static_cast<Eigen::Index>(Ci));
          const CMapMat Wk(W.data.data() + k * Ci * Co, static_cast<Eigen::Index>(Ci),
                           static_cast<Eigen::Index>(Co));
          dX.noalias() += Gb.bottomRows(rows) * Wk.transpose();
        }
        if (gw) {
          const CMapMat Xk(X.data.data() + bb * T * Ci, rows, static_cast<Eigen::Index>(Ci));
          MapMat dW(tp.grad(w).data.data() + k * Ci * Co, static_cast<Eigen::Index>(Ci),
                    static_cast<Eigen::Index>(Co));
          dW.noalias() += Xk.transpose() * Gb.bottomRows(rows);
        }
      }
    }
  });
}

} // namespace capstate::model
