// Copyright 2026 The jlsampler Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// The regularized failure-probability objective over Gaussian samplers
// N(M, tau), tau = sigma^2:
//
//   g(M, tau) = sum_j [F_{k,d_j}(k(1-eps)/tau) + 1 - F_{k,d_j}(k(1+eps)/tau)]
//               + tau / 2,        d_j = ||M x_j||^2 / tau,
//
// with its exact gradient, a matrix-free Hessian operator and the smallest
// Hessian eigenpair. Each data point enters only through v = M x_j and tau,
// so every quantity is a sum of per-point terms in those reduced
// coordinates.
//
// Parameter vectors are flattened as vec(M) (column-major) followed by tau.

#ifndef JLSAMPLER_OBJECTIVE_HPP
#define JLSAMPLER_OBJECTIVE_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "jlsampler/core.hpp"
#include "jlsampler/errors.hpp"
#include "jlsampler/lanczos.hpp"
#include "jlsampler/ncx2.hpp"

namespace jlsampler {

struct ObjectiveContext {
  Dataset data;
  int k = 1;
  double eps = 0.5;
  double sigma_floor = 1e-8;  // lower clamp on tau during evaluation

  ObjectiveContext(Dataset data_, int k_, double eps_, double sigma_floor_ = 1e-8)
      : data(std::move(data_)), k(k_), eps(eps_), sigma_floor(sigma_floor_) {
    validate();
  }

  /// eps may exceed 1: the lower band edge then sits at or below zero and
  /// contributes nothing.
  void validate() const {
    if (k < 1) throw ParameterError("k must be at least 1");
    if (!(eps > 0.0) || !std::isfinite(eps))
      throw ParameterError("eps must be positive and finite");
    if (!(sigma_floor > 0.0 && sigma_floor <= 1e-4))
      throw ParameterError("sigma_floor must lie in (0, 1e-4]");
  }
};

/// One data point in reduced coordinates.
struct ReducedPoint {
  Vector v;  // M x_j
  double tau = 1.0;
  double delta = 0.0;
  double lo = 0.0;
  double hi = 0.0;

  ReducedPoint(Vector v_, double tau_, int k, double eps)
      : v(std::move(v_)), tau(tau_) {
    if (!(tau > 0.0)) throw ParameterError("tau must be positive");
    delta = v.squaredNorm() / tau;
    lo = k * (1.0 - eps) / tau;
    hi = k * (1.0 + eps) / tau;
  }
};

struct GradientVector {
  Matrix d_mean;
  double d_tau = 0.0;

  Vector flatten() const {
    Vector out(d_mean.size() + 1);
    out.head(d_mean.size()) = d_mean.reshaped();
    out(d_mean.size()) = d_tau;
    return out;
  }
  double norm() const { return std::sqrt(d_mean.squaredNorm() + d_tau * d_tau); }
};

namespace detail {

// Derivatives of G(x, delta) = F_{k,delta}(x) used by the chain rule, all
// expressed through densities:
//   G_x = f_k, G_d = -f_{k+2}, G_dd = (f_{k+2} - f_{k+4}) / 2,
//   G_xd = (f_{k+2} - f_k) / 2, G_xx = f_k'.
struct EdgeTerms {
  double cdf = 0.0, sf = 1.0;
  double t_tau = 0.0;     // dT/dtau
  double t_d = 0.0;       // G_d
  double t_vtau = 0.0;    // x G_xd + d G_dd + G_d
  double t_dd = 0.0;      // G_dd
  double t_tautau = 0.0;  // tau^2 d^2T/dtau^2
};

// T(tau, v) = G(c / tau, ||v||^2 / tau) for one band edge c.
inline EdgeTerms edge_terms(double c, double tau, int k, double delta,
                            bool second_order) {
  EdgeTerms e;
  if (c <= 0.0) return e;  // band edge at or below zero: F == 0 nearby
  const double x = c / tau;
  const ncx2::Expansion ex = ncx2::expand(x, k, delta);
  e.cdf = ex.cdf;
  e.sf = ex.sf;
  const double gx = ex.pdf;
  const double gd = -ex.pdf_k2;
  e.t_d = gd;
  e.t_tau = -(x * gx + delta * gd) / tau;
  if (second_order) {
    const double gdd = 0.5 * (ex.pdf_k2 - ex.pdf_k4);
    const double gxd = 0.5 * (ex.pdf_k2 - ex.pdf);
    const double gxx = ex.pdf_dx;
    e.t_dd = gdd;
    e.t_vtau = x * gxd + delta * gdd + gd;
    e.t_tautau = 2.0 * x * gx + 2.0 * delta * gd + x * x * gxx +
                 2.0 * x * delta * gxd + delta * delta * gdd;
  }
  return e;
}

}  // namespace detail

/// Per-point probability and derivative coefficients. With P the failure
/// probability, s = ||v||^2:
///   dP/dv = beta v,  dP/dtau = p_tau,
///   d2P/dv2 = alpha v v^T + beta I,  d2P/dv dtau = gamma v,  d2P/dtau2 = eta.
struct PointTerms {
  double prob = 0.0;
  double beta = 0.0;
  double p_tau = 0.0;
  double alpha = 0.0;
  double gamma = 0.0;
  double eta = 0.0;
};

inline PointTerms point_terms(double s, double tau, int k, double eps,
                              bool second_order) {
  const double delta = s / tau;
  const detail::EdgeTerms lo =
      detail::edge_terms(k * (1.0 - eps), tau, k, delta, second_order);
  const detail::EdgeTerms hi =
      detail::edge_terms(k * (1.0 + eps), tau, k, delta, second_order);
  PointTerms p;
  p.prob = std::clamp(lo.cdf + hi.sf, 0.0, 1.0);
  const double tau2 = tau * tau;
  p.beta = 2.0 * (lo.t_d - hi.t_d) / tau;
  p.p_tau = lo.t_tau - hi.t_tau;
  if (second_order) {
    p.alpha = 4.0 * (lo.t_dd - hi.t_dd) / tau2;
    p.gamma = -2.0 * (lo.t_vtau - hi.t_vtau) / tau2;
    p.eta = (lo.t_tautau - hi.t_tautau) / tau2;
  }
  return p;
}

/// 1 + F_{k,delta}(k(1-eps)/tau) - F_{k,delta}(k(1+eps)/tau), delta = ||v||^2/tau.
inline double failure_prob_point(const Vector& v, double tau, int k, double eps) {
  if (!(tau > 0.0)) throw ParameterError("tau must be positive");
  if (k < 1) throw ParameterError("k must be at least 1");
  if (!(eps > 0.0)) throw ParameterError("eps must be positive");
  if (v.size() != k) throw ParameterError("v must have k entries");
  return point_terms(v.squaredNorm(), tau, k, eps, false).prob;
}

/// Objective, gradient and Hessian operator at one sampler, with the
/// per-point coefficients computed once.
class LocalModel {
 public:
  LocalModel(const SamplerParams& params, const ObjectiveContext& ctx,
             bool second_order = true)
      : ctx_(&ctx), mean_(params.mean), tau_raw_(params.variance) {
    if (params.k() != ctx.k || params.d() != ctx.data.d())
      throw ParameterError("sampler shape does not match the objective");
    if (!(params.variance >= 0.0) || !params.mean.allFinite())
      throw ParameterError("sampler parameters must be finite with variance >= 0");
    clamped_ = params.variance < ctx.sigma_floor;
    tau_ = std::max(params.variance, ctx.sigma_floor);
    v_ = mean_ * ctx.data.points().transpose();  // k x n, column j = M x_j
    const Eigen::Index n = ctx.data.n();
    terms_.resize(static_cast<std::size_t>(n));
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t j) {
      terms_[j] = point_terms(v_.col(static_cast<Eigen::Index>(j)).squaredNorm(),
                              tau_, ctx.k, ctx.eps, second_order);
    });
    for (const PointTerms& t : terms_) f_ += t.prob;
  }

  /// Sum of the per-point failure probabilities.
  double f() const noexcept { return f_; }
  /// f + sigma^2/2, with the regularizer taken at the unclamped variance.
  double g() const noexcept { return f_ + 0.5 * tau_raw_; }
  /// True when the variance was raised to the floor for evaluation.
  bool clamped() const noexcept { return clamped_; }
  double tau() const noexcept { return tau_; }
  Eigen::Index dim() const noexcept { return mean_.size() + 1; }
  const std::vector<PointTerms>& terms() const noexcept { return terms_; }

  GradientVector gradient() const {
    const Eigen::Index n = ctx_->data.n();
    Vector beta(n);
    double d_tau = 0.5;
    for (Eigen::Index j = 0; j < n; ++j) {
      beta(j) = terms_[static_cast<std::size_t>(j)].beta;
      d_tau += terms_[static_cast<std::size_t>(j)].p_tau;
    }
    GradientVector grad;
    grad.d_mean = (v_ * beta.asDiagonal()) * ctx_->data.points();
    grad.d_tau = d_tau;
    return grad;
  }

  /// H w for a flattened direction w. With tau_free = false the operator is
  /// restricted to the mean block (the tau entries of w and of H w are zero).
  Vector hvp(const Vector& w, bool tau_free = true) const {
    if (w.size() != dim()) throw ParameterError("direction has the wrong size");
    const Eigen::Index k = mean_.rows(), d = mean_.cols();
    const Eigen::Index n = ctx_->data.n();
    const Matrix& x = ctx_->data.points();
    const Eigen::Map<const Matrix> wm(w.data(), k, d);
    const double omega = tau_free ? w(k * d) : 0.0;
    const Matrix dv = wm * x.transpose();  // k x n
    Matrix r(k, n);
    double r_tau = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const PointTerms& t = terms_[static_cast<std::size_t>(j)];
      const auto v = v_.col(j);
      const double vdv = v.dot(dv.col(j));
      r.col(j) = (t.alpha * vdv + t.gamma * omega) * v + t.beta * dv.col(j);
      r_tau += t.gamma * vdv + t.eta * omega;
    }
    Vector out(dim());
    Eigen::Map<Matrix>(out.data(), k, d) = r * x;
    out(k * d) = tau_free ? r_tau : 0.0;
    return out;
  }

 private:
  const ObjectiveContext* ctx_;
  Matrix mean_;
  double tau_raw_ = 1.0;
  double tau_ = 1.0;
  bool clamped_ = false;
  Matrix v_;
  std::vector<PointTerms> terms_;
  double f_ = 0.0;
};

inline double f_value(const SamplerParams& params, const ObjectiveContext& ctx) {
  return LocalModel(params, ctx, false).f();
}

inline double g_value(const SamplerParams& params, const ObjectiveContext& ctx) {
  return LocalModel(params, ctx, false).g();
}

inline GradientVector grad_g(const SamplerParams& params,
                             const ObjectiveContext& ctx) {
  return LocalModel(params, ctx, false).gradient();
}

inline Vector hessian_vec_product(const SamplerParams& params,
                                  const ObjectiveContext& ctx, const Vector& w) {
  if (!(w.norm() > 0.0)) throw ParameterError("direction must be nonzero");
  return LocalModel(params, ctx, true).hvp(w);
}

/// Smallest eigenvalue of the Hessian with a unit eigenvector. Throws
/// EigenConvergenceError (a ConvergenceError) when max_iters operator
/// applications do not reach the tolerance.
inline EigenPair min_eigenpair(const LocalModel& model, double tol, int max_iters,
                               bool tau_free = true) {
  if (!(tol > 0.0)) throw ParameterError("tol must be positive");
  LanczosOptions opt;
  opt.tol = tol;
  opt.max_products = max_iters;
  if (tau_free)
    return min_eigenpair_lanczos(
        [&](const Vector& in, Vector& out) { out = model.hvp(in, true); },
        model.dim(), opt);
  // Mean block only: solve on kd coordinates and pad tau with a zero.
  const Eigen::Index kd = model.dim() - 1;
  EigenPair pair = min_eigenpair_lanczos(
      [&](const Vector& in, Vector& out) {
        Vector full = Vector::Zero(kd + 1);
        full.head(kd) = in;
        out = model.hvp(full, false).head(kd);
      },
      kd, opt);
  Vector padded = Vector::Zero(kd + 1);
  padded.head(kd) = pair.vector;
  pair.vector = std::move(padded);
  return pair;
}

inline EigenPair min_eigenpair(const SamplerParams& params,
                               const ObjectiveContext& ctx, double tol,
                               int max_iters) {
  return min_eigenpair(LocalModel(params, ctx, true), tol, max_iters);
}

}  // namespace jlsampler

#endif  // JLSAMPLER_OBJECTIVE_HPP
