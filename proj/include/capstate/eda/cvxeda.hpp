#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <vector>

#include "capstate/dsp/series.hpp"
#include "capstate/eda/bateman.hpp"

namespace capstate::eda {

struct CvxEdaParams {
  double tau0_s = 0.7;
  double tau1_s = 2.0;
  double alpha = 8e-4;           // l1 weight on the driver
  double gamma_tonic = 1e-2;     // second-difference penalty on spline coefs
  double tonic_knot_spacing_s = 10.0;
  int max_iters = 20000;
  double tolerance = 1e-6;       // KKT residual (sup norm of gradient map)
  double rel_objective_tol = 1e-8;
  double ridge = 1e-8;           // keeps the tonic block strictly convex
  bool record_trace = false;

  void validate() const {
    if (!(tau1_s > tau0_s && tau0_s > 0.0))
      throw ParameterError("cvxeda: require tau1 > tau0 > 0");
    if (!(alpha > 0.0) || !(gamma_tonic > 0.0))
      throw ParameterError("cvxeda: weights must be > 0");
    if (!(tonic_knot_spacing_s > 0.0))
      throw ParameterError("cvxeda: knot spacing must be > 0");
    if (max_iters < 1) throw ParameterError("cvxeda: max_iters must be >= 1");
  }
};

struct EdaDecomposition {
  dsp::UniformSeries tonic, phasic, driver, residual;
  double objective = 0.0;
  int iterations = 0;
  double kkt_residual = 0.0;
  std::vector<double> objective_trace; // one entry per iteration when recorded
};

namespace detail {

inline double cubic_bspline(double x) {
  x = std::abs(x);
  if (x < 1.0) return 2.0 / 3.0 - x * x + 0.5 * x * x * x;
  if (x < 2.0) {
    const double u = 2.0 - x;
    return u * u * u / 6.0;
  }
  return 0.0;
}

// Problem data for
//   min_{r >= 0, c, d}  1/2 |y - M r - B c - A d|^2 + alpha sum(r)
//                       + gamma |D2 c|^2 + ridge |(c, d)|^2
// The tonic block (c, d) is eliminated exactly for any r, leaving a smooth
// convex function of r handled by monotone FISTA.
class CvxEdaProblem {
public:
  CvxEdaProblem(const std::vector<double> &y, double rate_hz,
                const CvxEdaParams &p)
      : y_(y), n_(y.size()), p_(p) {
    kernel_ = bateman_kernel(rate_hz, p.tau0_s, p.tau1_s);
    double l1 = 0.0;
    for (double k : kernel_) l1 += std::abs(k);
    lipschitz_ = std::max(l1 * l1, 1e-12); // |M| <= |h|_1 (Young)
    spacing_ = std::max(1.0, p.tonic_knot_spacing_s * rate_hz);
    m_ = static_cast<std::size_t>(
             std::ceil(static_cast<double>(n_ - 1) / spacing_)) + 3;
    dim_ = m_ + 2;
    const std::size_t dim = dim_;
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                              static_cast<Eigen::Index>(dim));
    std::vector<std::pair<std::size_t, double>> row;
    for (std::size_t i = 0; i < n_; ++i) {
      design_row(i, row);
      for (const auto &[a, va] : row)
        for (const auto &[b, vb] : row)
          k(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += va * vb;
    }
    for (std::size_t j = 0; j + 2 < m_; ++j) {
      const std::size_t idx[3] = {j, j + 1, j + 2};
      const double w[3] = {1.0, -2.0, 1.0};
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          k(static_cast<Eigen::Index>(idx[a]), static_cast<Eigen::Index>(idx[b])) +=
              2.0 * p.gamma_tonic * w[a] * w[b];
    }
    for (std::size_t j = 0; j < dim; ++j)
      k(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) += 2.0 * p.ridge;
    chol_.compute(k);
    if (chol_.info() != Eigen::Success)
      throw NumericalError("cvxeda: tonic system is not positive definite");
  }

  std::size_t size() const { return n_; }
  double lipschitz() const { return lipschitz_; }
  double alpha() const { return p_.alpha; }

  // Nonzero entries of row i of G = [B A].
  void design_row(std::size_t i,
                  std::vector<std::pair<std::size_t, double>> &row) const {
    row.clear();
    const double x = static_cast<double>(i) / spacing_;
    const auto centre = static_cast<long>(std::floor(x)) + 1;
    for (long j = centre - 1; j <= centre + 2; ++j) {
      if (j < 0 || j >= static_cast<long>(m_)) continue;
      const double v = cubic_bspline(x - static_cast<double>(j - 1));
      if (v != 0.0) row.emplace_back(static_cast<std::size_t>(j), v);
    }
    row.emplace_back(m_, 1.0);
    row.emplace_back(m_ + 1, n_ > 1 ? static_cast<double>(i) /
                                          static_cast<double>(n_ - 1)
                              : 0.0);
  }

  void convolve(const std::vector<double> &r, std::vector<double> &out) const {
    out.assign(n_, 0.0);
    const std::size_t klen = kernel_.size();
    for (std::size_t j = 0; j < n_; ++j) {
      const double rj = r[j];
      if (rj == 0.0) continue;
      const std::size_t end = std::min(n_, j + klen);
      for (std::size_t i = j; i < end; ++i) out[i] += kernel_[i - j] * rj;
    }
  }

  void convolve_transpose(const std::vector<double> &e,
                          std::vector<double> &out) const {
    out.assign(n_, 0.0);
    const std::size_t klen = kernel_.size();
    for (std::size_t j = 0; j < n_; ++j) {
      const std::size_t end = std::min(n_, j + klen);
      double s = 0.0;
      for (std::size_t i = j; i < end; ++i) s += kernel_[i - j] * e[i];
      out[j] = s;
    }
  }

  // Best tonic fit to e = y - M r. Writes the fitted tonic and returns the
  // tonic part of the objective (data term plus penalties).
  double fit_tonic(const std::vector<double> &e, std::vector<double> &tonic,
                   Eigen::VectorXd &coef) const {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
    std::vector<std::pair<std::size_t, double>> row;
    for (std::size_t i = 0; i < n_; ++i) {
      design_row(i, row);
      for (const auto &[a, va] : row) rhs(static_cast<Eigen::Index>(a)) += va * e[i];
    }
    coef = chol_.solve(rhs);
    tonic.assign(n_, 0.0);
    double data = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      design_row(i, row);
      double v = 0.0;
      for (const auto &[a, va] : row) v += va * coef(static_cast<Eigen::Index>(a));
      tonic[i] = v;
      const double res = e[i] - v;
      data += res * res;
    }
    double pen = 0.0;
    for (std::size_t j = 0; j + 2 < m_; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      const double d2 = coef(jj) - 2.0 * coef(jj + 1) + coef(jj + 2);
      pen += d2 * d2;
    }
    return 0.5 * data + p_.gamma_tonic * pen + p_.ridge * coef.squaredNorm();
  }

  struct Eval {
    double objective;
    std::vector<double> phasic, tonic, gradient;
  };

  // Objective at r and, optionally, the gradient of its smooth part.
  Eval evaluate(const std::vector<double> &r, bool with_gradient) const {
    Eval ev;
    convolve(r, ev.phasic);
    std::vector<double> e(n_);
    for (std::size_t i = 0; i < n_; ++i) e[i] = y_[i] - ev.phasic[i];
    Eigen::VectorXd coef;
    const double smooth = fit_tonic(e, ev.tonic, coef);
    double l1 = 0.0;
    for (double v : r) l1 += v;
    ev.objective = smooth + p_.alpha * l1;
    if (with_gradient) {
      for (std::size_t i = 0; i < n_; ++i) e[i] -= ev.tonic[i];
      convolve_transpose(e, ev.gradient);
      for (double &g : ev.gradient) g = -g;
    }
    return ev;
  }

  // Sup norm of the proximal gradient map at r.
  double kkt_residual(const std::vector<double> &r,
                      const std::vector<double> &grad) const {
    double worst = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double step = std::max(0.0, r[i] - (grad[i] + p_.alpha) / lipschitz_);
      worst = std::max(worst, lipschitz_ * std::abs(r[i] - step));
    }
    return worst;
  }

private:
  const std::vector<double> &y_;
  std::size_t n_;
  CvxEdaParams p_;
  std::vector<double> kernel_;
  double lipschitz_ = 1.0;
  double spacing_ = 1.0;
  std::size_t m_ = 0, dim_ = 0;
  Eigen::LLT<Eigen::MatrixXd> chol_;
};

} // namespace detail

// Convex tonic/phasic decomposition: sparse nonnegative driver convolved with
// the Bateman kernel, plus a smooth cubic-spline tonic and an affine drift.
inline EdaDecomposition cvxeda_decompose(const dsp::UniformSeries &x,
                                         const CvxEdaParams &p = {}) {
  p.validate();
  dsp::require_processable(x, "cvxeda_decompose");
  if (x.size() < 30) throw ParameterError("cvxeda: need >= 30 samples");
  const detail::CvxEdaProblem prob(x.values, x.rate_hz, p);
  const std::size_t n = x.size();
  const double lip = prob.lipschitz();

  std::vector<double> r(n, 0.0), r_prev(n, 0.0), yk(n, 0.0), z(n, 0.0);
  auto cur = prob.evaluate(r, true);
  double f_cur = cur.objective;
  double t = 1.0;
  EdaDecomposition out;
  if (p.record_trace) out.objective_trace.push_back(f_cur);
  std::vector<double> history{f_cur};
  constexpr int kWindow = 10;

  int it = 0;
  bool converged = false;
  double kkt = prob.kkt_residual(r, cur.gradient);
  if (kkt < p.tolerance || std::abs(f_cur) < 1e-300) converged = true;
  while (!converged && it < p.max_iters) {
    ++it;
    const auto at_y = prob.evaluate(yk, true);
    for (std::size_t i = 0; i < n; ++i)
      z[i] = std::max(0.0, yk[i] - (at_y.gradient[i] + p.alpha) / lip);
    auto at_z = prob.evaluate(z, false);
    r_prev = r;
    const bool accept = at_z.objective <= f_cur;
    if (accept) {
      r = z;
      f_cur = at_z.objective;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    for (std::size_t i = 0; i < n; ++i)
      yk[i] = r[i] + (t / t_next) * (z[i] - r[i]) +
              ((t - 1.0) / t_next) * (r[i] - r_prev[i]);
    t = t_next;
    if (!accept) t = 1.0; // restart momentum after a rejected step
    if (p.record_trace) out.objective_trace.push_back(f_cur);
    history.push_back(f_cur);

    if (it % kWindow == 0) {
      cur = prob.evaluate(r, true);
      kkt = prob.kkt_residual(r, cur.gradient);
      const double old = history[history.size() - 1 - kWindow];
      const double rel = std::abs(old - f_cur) / std::max(std::abs(f_cur), 1e-300);
      if (kkt < p.tolerance || rel < p.rel_objective_tol) converged = true;
    }
  }
  if (!converged)
    throw NumericalError("cvxeda: no convergence within " +
                             std::to_string(p.max_iters) + " iterations",
                         kkt);
  cur = prob.evaluate(r, true);
  out.kkt_residual = prob.kkt_residual(r, cur.gradient);
  out.iterations = it;
  out.objective = cur.objective;
  const double rate = x.rate_hz, start = x.start_s;
  out.driver = {r, rate, start};
  out.phasic = {cur.phasic, rate, start};
  out.tonic = {cur.tonic, rate, start};
  std::vector<double> res(n);
  for (std::size_t i = 0; i < n; ++i)
    res[i] = x.values[i] - cur.tonic[i] - cur.phasic[i];
  out.residual = {std::move(res), rate, start};
  return out;
}

} // namespace capstate::eda
