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


// Hessian Descent on the sampler objective, the epsilon grid search built on
// it, and calibration of the constant in eps = C sqrt(ln n / k).

#ifndef JLSAMPLER_OPTIMIZER_HPP
#define JLSAMPLER_OPTIMIZER_HPP

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "jlsampler/core.hpp"
#include "jlsampler/errors.hpp"
#include "jlsampler/objective.hpp"

namespace jlsampler {

enum class DescentMode { adaptive, fixed };

inline const char* to_string(DescentMode m) {
  return m == DescentMode::adaptive ? "adaptive" : "fixed";
}

struct DescentConfig {
  double rho = 1e-4;  // stationarity tolerance
  double L = 1.0;     // gradient Lipschitz constant (initial step 1/L when adaptive)
  double K = 1.0;     // Hessian Lipschitz constant
  DescentMode mode = DescentMode::adaptive;
  int max_iters = 50000;
  double eig_tol = 1e-8;
  int eig_max_products = 3000;

  double nu() const { return 1.0 / L; }
  double h() const { return 3.0 * std::sqrt(rho) / K; }

  void validate() const {
    if (!(rho > 0.0) || !std::isfinite(rho)) throw ParameterError("rho must be positive");
    if (!(L > 0.0) || !std::isfinite(L)) throw ParameterError("L must be positive");
    if (!(K > 0.0) || !std::isfinite(K)) throw ParameterError("K must be positive");
    if (!std::isfinite(nu()) || !std::isfinite(h()) || !(nu() > 0.0) || !(h() > 0.0))
      throw ParameterError("step sizes 1/L and 3 sqrt(rho)/K must be positive and finite");
    if (max_iters < 1) throw ParameterError("max_iters must be at least 1");
    if (!(eig_tol > 0.0)) throw ParameterError("eig_tol must be positive");
    if (eig_max_products < 1) throw ParameterError("eig_max_products must be positive");
  }
};

enum class StepType { gradient, curvature, terminate };

inline const char* to_string(StepType s) {
  switch (s) {
    case StepType::gradient: return "gradient";
    case StepType::curvature: return "curvature";
    default: return "terminate";
  }
}

/// State at the start of an iteration and what the iteration did with it.
struct TraceRecord {
  int iter = 0;
  StepType step = StepType::terminate;
  double g = 0.0;
  double f = 0.0;
  double sigma2 = 0.0;
  double grad_norm = 0.0;  // projected gradient norm
  double lambda_min = std::numeric_limits<double>::quiet_NaN();
  double decrease = 0.0;  // g before minus g after the step
  bool clamped = false;   // step hit a variance bound
};

struct DescentResult {
  SamplerParams params;  // final iterate
  std::vector<TraceRecord> trace;
  bool converged = false;
  double L_hat = 0.0;  // largest 1/nu accepted (adaptive) or L (fixed)
  double K_hat = 0.0;  // largest 3 sqrt(rho)/h accepted, or K without curvature steps
  int gradient_steps = 0;
  int curvature_steps = 0;

  const Matrix& mean() const noexcept { return params.mean; }
};

namespace detail {

inline constexpr double kTauMax = 1.0;

inline Vector flatten(const SamplerParams& p) {
  Vector z(p.mean.size() + 1);
  z.head(p.mean.size()) = p.mean.reshaped();
  z(p.mean.size()) = p.variance;
  return z;
}

// Writes z back into a sampler, projecting the variance onto [floor, 1].
inline SamplerParams unflatten(const Vector& z, Eigen::Index k, Eigen::Index d,
                               double floor, bool* clamped) {
  SamplerParams p;
  p.mean = Eigen::Map<const Matrix>(z.data(), k, d);
  const double tau = z(k * d);
  p.variance = std::clamp(tau, floor, kTauMax);
  if (clamped) *clamped = p.variance != tau;
  return p;
}

}  // namespace detail

/// Hessian Descent from `init`.
///
/// With gradient norm above rho a gradient step is taken; otherwise, when the
/// smallest Hessian eigenvalue is below -sqrt(K rho), a step of length h
/// along its eigenvector, signed against the gradient; otherwise the mean is
/// returned. The variance is kept in [sigma_floor, 1]. When it rests on a
/// bound and the gradient pushes outward, that coordinate is frozen for both
/// the stationarity test and the eigenproblem.
///
/// Fixed mode uses nu = 1/L, h = 3 sqrt(rho)/K and throws
/// ConstantMisestimateError when a step misses its guaranteed decrease
/// (nu rho^2/2, resp. 3 rho^1.5 / (4 sqrt K)). Adaptive mode backtracks nu
/// until g drops by at least |step|^2 / (2 nu) and halves h until g drops.
inline DescentResult hessian_descent(const ObjectiveContext& ctx,
                                     const DescentConfig& cfg,
                                     const SamplerParams& init) {
  ctx.validate();
  cfg.validate();
  const Eigen::Index k = ctx.k, d = ctx.data.d();
  if (init.k() != k || init.d() != d)
    throw ParameterError("initial sampler has the wrong shape");
  if (!(init.variance >= 0.0 && init.variance <= detail::kTauMax))
    throw ParameterError("initial variance must lie in [0, 1]");

  DescentResult result;
  const double floor = ctx.sigma_floor;
  SamplerParams x = init;
  x.variance = std::max(x.variance, floor);
  const double gradient_floor = cfg.nu() * cfg.rho * cfg.rho / 2.0;
  const double curvature_floor = 3.0 * std::pow(cfg.rho, 1.5) / (4.0 * std::sqrt(cfg.K));
  const double curvature_threshold = -std::sqrt(cfg.K * cfg.rho);
  double nu = cfg.nu();
  result.K_hat = cfg.K;
  if (cfg.mode == DescentMode::fixed) result.L_hat = cfg.L;

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    const LocalModel model(x, ctx);
    const double g0 = model.g();
    GradientVector grad = model.gradient();
    const bool at_floor = x.variance <= floor && grad.d_tau > 0.0;
    const bool at_top = x.variance >= detail::kTauMax && grad.d_tau < 0.0;
    const bool tau_free = !(at_floor || at_top);
    if (!tau_free) grad.d_tau = 0.0;
    const Vector pg = grad.flatten();
    const double gnorm = pg.norm();

    TraceRecord rec;
    rec.iter = iter;
    rec.g = g0;
    rec.f = model.f();
    rec.sigma2 = x.variance;
    rec.grad_norm = gnorm;
    const Vector z = detail::flatten(x);

    if (gnorm > cfg.rho) {
      rec.step = StepType::gradient;
      if (cfg.mode == DescentMode::fixed) {
        bool clamped = false;
        SamplerParams next = detail::unflatten(z - cfg.nu() * pg, k, d, floor, &clamped);
        const double dec = g0 - g_value(next, ctx);
        rec.decrease = dec;
        rec.clamped = clamped;
        if (!(dec >= gradient_floor))
          throw ConstantMisestimateError(
              "gradient step at iteration " + std::to_string(iter) +
              " decreased g by " + std::to_string(dec) + " < nu rho^2/2 = " +
              std::to_string(gradient_floor) + "; L is underestimated, use adaptive mode");
        x = std::move(next);
      } else {
        nu = std::min(2.0 * nu, 1e12);
        bool accepted = false;
        for (int halving = 0; halving < 200; ++halving, nu *= 0.5) {
          bool clamped = false;
          const Vector trial = z - nu * pg;
          SamplerParams next = detail::unflatten(trial, k, d, floor, &clamped);
          const double moved = (detail::flatten(next) - z).squaredNorm();
          const double dec = g0 - g_value(next, ctx);
          if (moved > 0.0 && dec >= moved / (2.0 * nu)) {
            rec.decrease = dec;
            rec.clamped = clamped;
            x = std::move(next);
            accepted = true;
            break;
          }
        }
        if (!accepted) {
          // No representable step decreases g: stuck at working precision.
          rec.step = StepType::terminate;
          result.trace.push_back(rec);
          result.params = x;
          return result;
        }
        result.L_hat = std::max(result.L_hat, 1.0 / nu);
      }
      ++result.gradient_steps;
      result.trace.push_back(rec);
      continue;
    }

    EigenPair pair;
    try {
      pair = min_eigenpair(model, cfg.eig_tol, cfg.eig_max_products, tau_free);
    } catch (const EigenConvergenceError& e) {
      pair = e.best();
    }
    rec.lambda_min = pair.value;
    const bool certified = pair.residual <= cfg.eig_tol * std::max(1.0, std::abs(pair.value));
    if (pair.value >= curvature_threshold) {
      rec.step = StepType::terminate;
      result.trace.push_back(rec);
      result.params = x;
      result.converged = certified;
      return result;
    }

    rec.step = StepType::curvature;
    Vector u = pair.vector;
    const double slope = pg.dot(u);
    if (slope > 0.0) u = -u;
    double h = cfg.h();
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving, h *= 0.5) {
      bool clamped = false;
      SamplerParams next = detail::unflatten(z + h * u, k, d, floor, &clamped);
      const double g1 = g_value(next, ctx);
      const double dec = g0 - g1;
      if (cfg.mode == DescentMode::fixed) {
        if (!(dec >= curvature_floor))
          throw ConstantMisestimateError(
              "curvature step at iteration " + std::to_string(iter) +
              " decreased g by " + std::to_string(dec) +
              " < 3 rho^1.5/(4 sqrt K) = " + std::to_string(curvature_floor) +
              "; K is underestimated, use adaptive mode");
      } else if (!(dec > 0.0)) {
        continue;
      }
      result.K_hat = std::max(result.K_hat, 3.0 * std::sqrt(cfg.rho) / h);
      rec.decrease = dec;
      rec.clamped = clamped;
      x = std::move(next);
      accepted = true;
      break;
    }
    if (!accepted) {
      rec.step = StepType::terminate;
      result.trace.push_back(rec);
      result.params = x;
      return result;
    }
    ++result.curvature_steps;
    result.trace.push_back(rec);
  }
  result.params = x;
  return result;
}

/// Starts from the zero mean with unit variance.
inline DescentResult hessian_descent(const ObjectiveContext& ctx,
                                     const DescentConfig& cfg) {
  return hessian_descent(ctx, cfg, SamplerParams::origin(ctx.k, ctx.data.d()));
}

struct GridCell {
  double eps = 0.0;
  double max_distortion = std::numeric_limits<double>::infinity();
  bool converged = false;
  std::string error;
};

struct GridResult {
  double best_eps = 0.0;
  double best_max_distortion = std::numeric_limits<double>::infinity();
  Matrix best_mean;
  std::vector<GridCell> cells;
};

/// Runs the descent once per eps and keeps the mean with the smallest max
/// distortion. Runs that throw or do not converge score +infinity; ties go to
/// the earliest grid entry. Throws ConvergenceError when every cell failed.
inline GridResult grid_search(const Dataset& data, int k, double sigma_floor,
                              const DescentConfig& cfg,
                              const std::vector<double>& eps_grid) {
  if (eps_grid.empty()) throw ParameterError("eps grid is empty");
  cfg.validate();
  GridResult out;
  bool found = false;
  for (double eps : eps_grid) {
    GridCell cell;
    cell.eps = eps;
    Matrix mean;
    try {
      const ObjectiveContext ctx(data, k, eps, sigma_floor);
      DescentResult run = hessian_descent(ctx, cfg);
      cell.converged = run.converged;
      if (run.converged) {
        cell.max_distortion = max_distortion(run.mean(), data).max;
        mean = run.mean();
      } else {
        cell.error = "did not converge";
      }
    } catch (const ParameterError&) {
      throw;
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
    if (cell.max_distortion < out.best_max_distortion) {
      out.best_max_distortion = cell.max_distortion;
      out.best_eps = eps;
      out.best_mean = std::move(mean);
      found = true;
    }
    out.cells.push_back(std::move(cell));
  }
  if (!found)
    throw ConvergenceError("no eps in the grid produced a converged run",
                           std::numeric_limits<double>::infinity());
  return out;
}

/// Smallest C in {0.5, 0.75, ..., 6} with failure probability at (0, 1)
/// below 1/(3n) for eps = C sqrt(ln n / k).
inline double calibrate_epsilon_constant(int n, int k) {
  if (n < 2) throw ParameterError("calibration needs n >= 2");
  if (k < 1) throw ParameterError("calibration needs k >= 1");
  const Vector zero = Vector::Zero(k);
  const double budget = 1.0 / (3.0 * n);
  for (int step = 0; step <= 22; ++step) {
    const double c = 0.5 + 0.25 * step;
    const double eps = jl_epsilon(n, k, c);
    if (failure_prob_point(zero, 1.0, k, eps) < budget) return c;
  }
  throw CalibrationError("no C in [0.5, 6] keeps the failure probability below 1/(3n) for n = " +
                         std::to_string(n) + ", k = " + std::to_string(k));
}

}  // namespace jlsampler

#endif  // JLSAMPLER_OPTIMIZER_HPP
