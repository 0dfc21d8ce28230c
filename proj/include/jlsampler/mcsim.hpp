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


// Monte Carlo proxy for the sampler objective,
//
//   E_{A ~ N(M, sigma^2)} [h(A)] + sigma^2 / 2,   h = max distortion,
//
// its reparameterized gradient, and an Adam training loop over (M, sigma).

#ifndef JLSAMPLER_MCSIM_HPP
#define JLSAMPLER_MCSIM_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "jlsampler/core.hpp"
#include "jlsampler/errors.hpp"
#include "jlsampler/objective.hpp"

namespace jlsampler {

struct McConfig {
  int iters = 2000;
  int batch = 20;
  double step_size = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  int log_every = 10;

  void validate() const {
    if (iters < 0) throw ParameterError("iters must be >= 0");
    if (batch < 1) throw ParameterError("batch must be >= 1");
    if (!(step_size > 0.0) || !std::isfinite(step_size))
      throw ParameterError("step_size must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
      throw ParameterError("moment decays must lie in [0, 1)");
    if (!(adam_eps > 0.0)) throw ParameterError("adam_eps must be positive");
    if (log_every < 1) throw ParameterError("log_every must be >= 1");
  }
};

struct McLogRow {
  int iter = 0;
  double sampled_distortion = 0.0;      // h of one matrix drawn from the sampler
  double mean_matrix_distortion = 0.0;  // h(M)
  double sigma2 = 0.0;
  double proxy_value = 0.0;  // batch estimate of the proxy at this iterate
};

struct McResult {
  SamplerParams params;
  std::vector<McLogRow> trajectory;
};

class McDivergenceError : public DivergenceError {
 public:
  McDivergenceError(const std::string& what, std::vector<McLogRow> trajectory)
      : DivergenceError(what), trajectory_(std::move(trajectory)) {}
  const std::vector<McLogRow>& trajectory() const noexcept { return trajectory_; }

 private:
  std::vector<McLogRow> trajectory_;
};

namespace detail {

inline constexpr std::uint64_t kMcTrainStream = 0x3c000000ULL;
inline constexpr std::uint64_t kMcLogStream = 0x10600000ULL;

// One pathwise sample: h(A) and derivatives of h(M + sigma Z) in M and sigma.
struct McSample {
  double h = 0.0;
  Eigen::Index argmax = 0;
  double sign = 1.0;
  Vector ax;  // A x_{j*}
  double d_sigma = 0.0;
};

inline McSample mc_sample(const Matrix& mean, double sigma, const Dataset& data,
                          Engine& engine) {
  const Eigen::Index k = mean.rows();
  const Matrix z = standard_normal_matrix(k, mean.cols(), engine);
  const Matrix a = sigma == 0.0 ? mean : Matrix(mean + sigma * z);
  const Matrix y = a * data.points().transpose();
  const Vector u = y.colwise().squaredNorm().transpose() / static_cast<double>(k);
  McSample s;
  double best = -1.0;
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    const double dist = std::abs(u(j) - 1.0);
    if (dist > best + 1e-12) {
      best = dist;
      s.argmax = j;
    }
  }
  s.h = std::abs(u(s.argmax) - 1.0);
  s.sign = u(s.argmax) - 1.0 >= 0.0 ? 1.0 : -1.0;
  s.ax = y.col(s.argmax);
  const Vector zx = z * data.points().row(s.argmax).transpose();
  s.d_sigma = s.sign * (2.0 / k) * s.ax.dot(zx);
  return s;
}

inline void check_shapes(const SamplerParams& params, const Dataset& data) {
  if (params.d() != data.d() || params.k() < 1)
    throw ParameterError("sampler shape does not match the dataset");
  if (!(params.variance >= 0.0))
    throw ParameterError("sampler variance must be nonnegative");
}

inline Engine sample_engine(std::uint64_t seed, std::uint64_t stream, int i) {
  return make_engine(seed, stream + static_cast<std::uint64_t>(i));
}

}  // namespace detail

/// (1/N) sum_i h(M + sigma Z_i) + sigma^2/2.
inline double proxy_objective(const SamplerParams& params, const Dataset& data,
                              int batch, std::uint64_t seed) {
  detail::check_shapes(params, data);
  if (batch < 1) throw ParameterError("batch must be >= 1");
  const double sigma = std::sqrt(params.variance);
  std::vector<double> h(static_cast<std::size_t>(batch));
  parallel_for(h.size(), [&](std::size_t i) {
    Engine e = detail::sample_engine(seed, detail::kMcTrainStream, static_cast<int>(i));
    h[i] = detail::mc_sample(params.mean, sigma, data, e).h;
  });
  double sum = 0.0;
  for (double v : h) sum += v;
  return sum / batch + 0.5 * params.variance;
}

/// Pathwise gradient of the proxy in (M, sigma^2). Each sample is
/// differentiated at its worst point j* with s = sign((1/k)||A x||^2 - 1):
/// dh/dM = s (2/k) (A x) x^T. At sigma = 0 the variance derivative is the
/// sigma -> 0 limit s ||x_{j*}||^2 of the second-order term.
inline GradientVector proxy_gradient(const SamplerParams& params,
                                     const Dataset& data, int batch,
                                     std::uint64_t seed) {
  detail::check_shapes(params, data);
  if (batch < 1) throw ParameterError("batch must be >= 1");
  const double sigma = std::sqrt(params.variance);
  const double k = static_cast<double>(params.k());
  std::vector<detail::McSample> samples(static_cast<std::size_t>(batch));
  parallel_for(samples.size(), [&](std::size_t i) {
    Engine e = detail::sample_engine(seed, detail::kMcTrainStream, static_cast<int>(i));
    samples[i] = detail::mc_sample(params.mean, sigma, data, e);
  });
  GradientVector grad;
  grad.d_mean = Matrix::Zero(params.k(), params.d());
  double d_tau = 0.0;
  for (const auto& s : samples) {
    const auto x = data.points().row(s.argmax);
    grad.d_mean.noalias() += (s.sign * 2.0 / k) * s.ax * x;
    d_tau += sigma > 0.0 ? s.d_sigma / (2.0 * sigma) : s.sign * x.squaredNorm();
  }
  grad.d_mean /= batch;
  grad.d_tau = d_tau / batch + 0.5;
  return grad;
}

/// Adam on (M, sigma) from (0, 1). sigma is kept in [0, 1]. The trajectory
/// holds the initial state and every log_every-th iterate (and the last).
inline McResult run_mc_training(const Dataset& data, int k, const McConfig& cfg) {
  cfg.validate();
  if (k < 1) throw ParameterError("k must be at least 1");
  const Eigen::Index d = data.d();
  Matrix mean = Matrix::Zero(k, d);
  double sigma = 1.0;
  Matrix m1 = Matrix::Zero(k, d), m2 = Matrix::Zero(k, d);
  double s1 = 0.0, s2 = 0.0;

  McResult result;
  double initial_proxy = 0.0;
  int above = 0;
  std::vector<detail::McSample> samples(static_cast<std::size_t>(cfg.batch));

  auto log_row = [&](int iter, double proxy) {
    McLogRow row;
    row.iter = iter;
    Engine e = make_engine(cfg.seed, detail::kMcLogStream + static_cast<std::uint64_t>(iter));
    const Matrix a = mean + sigma * standard_normal_matrix(k, d, e);
    row.sampled_distortion = max_distortion(a, data).max;
    row.mean_matrix_distortion = max_distortion(mean, data).max;
    row.sigma2 = sigma * sigma;
    row.proxy_value = proxy;
    result.trajectory.push_back(row);
    if (iter == 0) {
      initial_proxy = proxy;
      return;
    }
    above = proxy > 10.0 * initial_proxy ? above + 1 : 0;
    if (above >= 100)
      throw McDivergenceError("proxy stayed above 10x its initial value for 100 logs",
                              result.trajectory);
  };

  // Batch at iterate t uses streams (t * batch + i).
  auto draw = [&](int t) {
    parallel_for(samples.size(), [&](std::size_t i) {
      Engine e = make_engine(cfg.seed, detail::kMcTrainStream +
                                           static_cast<std::uint64_t>(t) * cfg.batch + i);
      samples[i] = detail::mc_sample(mean, sigma, data, e);
    });
    double sum = 0.0;
    for (const auto& s : samples) sum += s.h;
    return sum / cfg.batch + 0.5 * sigma * sigma;
  };

  double proxy = draw(0);
  log_row(0, proxy);
  for (int t = 1; t <= cfg.iters; ++t) {
    Matrix g_mean = Matrix::Zero(k, d);
    double g_sigma = 0.0;
    for (const auto& s : samples) {
      g_mean.noalias() += (s.sign * 2.0 / k) * s.ax * data.points().row(s.argmax);
      g_sigma += s.d_sigma;
    }
    g_mean /= cfg.batch;
    g_sigma = g_sigma / cfg.batch + sigma;

    m1 = cfg.beta1 * m1 + (1.0 - cfg.beta1) * g_mean;
    m2 = cfg.beta2 * m2 + (1.0 - cfg.beta2) * g_mean.cwiseAbs2();
    s1 = cfg.beta1 * s1 + (1.0 - cfg.beta1) * g_sigma;
    s2 = cfg.beta2 * s2 + (1.0 - cfg.beta2) * g_sigma * g_sigma;
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    mean.array() -= cfg.step_size * (m1.array() / c1) /
                    ((m2.array() / c2).sqrt() + cfg.adam_eps);
    sigma -= cfg.step_size * (s1 / c1) / (std::sqrt(s2 / c2) + cfg.adam_eps);
    sigma = std::clamp(sigma, 0.0, 1.0);
    if (!mean.allFinite() || !std::isfinite(sigma))
      throw McDivergenceError("non-finite parameters at iteration " + std::to_string(t),
                              result.trajectory);

    proxy = draw(t);
    if (t % cfg.log_every == 0 || t == cfg.iters) log_row(t, proxy);
  }
  result.params = {mean, sigma * sigma};
  return result;
}

}  // namespace jlsampler

#endif  // JLSAMPLER_MCSIM_HPP
