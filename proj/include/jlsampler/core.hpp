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

// Datasets, distortion metrics, Gaussian matrix sampling and the randomized
// Johnson-Lindenstrauss baseline.

#ifndef JLSAMPLER_CORE_HPP
#define JLSAMPLER_CORE_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "jlsampler/errors.hpp"

namespace jlsampler {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Worker-count hint and a deterministic parallel map.

namespace detail {
inline std::atomic<int>& thread_hint_storage() {
  static std::atomic<int> hint{[] {
    if (const char* env = std::getenv("JLSAMPLER_THREADS")) {
      const int v = std::atoi(env);
      if (v > 0) return v;
    }
    return 1;
  }()};
  return hint;
}
}  // namespace detail

/// Worker-count hint used by the parallel loops. Defaults to the
/// JLSAMPLER_THREADS environment variable, or 1.
inline int thread_hint() { return detail::thread_hint_storage().load(); }
inline void set_thread_hint(int threads) {
  detail::thread_hint_storage().store(std::max(1, threads));
}

/// Runs body(i) for i in [0, count). Each index is visited exactly once and
/// bodies must only write to per-index slots, so any reduction done by the
/// caller afterwards is independent of the worker count.
template <class Body>
void parallel_for(std::size_t count, Body&& body, int threads = thread_hint()) {
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(1, threads)), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([begin, end, &body] {
      for (std::size_t i = begin; i < end; ++i) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

// ---------------------------------------------------------------------------
// Random streams. Every stream is a 64-bit Mersenne Twister keyed by a
// (seed, stream) pair, so sub-experiments replay independently of each other
// and of the worker count.

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return Engine(seq);
}

inline Matrix standard_normal_matrix(Eigen::Index rows, Eigen::Index cols,
                                     Engine& engine) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) z(i, j) = normal(engine);
  return z;
}

/// Haar-distributed d x d orthogonal matrix (QR of a Gaussian matrix with the
/// sign of R's diagonal folded into Q).
inline Matrix random_orthogonal(Eigen::Index d, std::uint64_t seed) {
  Engine engine = make_engine(seed, 0x0510);
  const Matrix g = standard_normal_matrix(d, d, engine);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < d; ++i)
    if (r(i, i) < 0) q.col(i) *= -1.0;
  return q;
}

// ---------------------------------------------------------------------------
// Domain types.

/// n unit-norm points in R^d, stored one per row. Rows are normalized on
/// construction.
class Dataset {
 public:
  Dataset() = default;

  explicit Dataset(Matrix points) : points_(std::move(points)) {
    if (points_.rows() < 1)
      throw ParameterError("dataset needs at least one point");
    if (points_.cols() < 2)
      throw ParameterError("dataset dimension must be at least 2");
    if (!points_.allFinite())
      throw ParameterError("dataset contains non-finite values");
    for (Eigen::Index j = 0; j < points_.rows(); ++j) {
      const double norm = points_.row(j).norm();
      if (!(norm > 0.0))
        throw ParameterError("dataset point " + std::to_string(j) +
                             " has zero norm");
      points_.row(j) /= norm;
    }
  }

  const Matrix& points() const noexcept { return points_; }
  Eigen::Index n() const noexcept { return points_.rows(); }
  Eigen::Index d() const noexcept { return points_.cols(); }

 private:
  Matrix points_;
};

/// Gaussian solution sampler N(M, sigma^2): a k x d mean and one shared
/// variance.
struct SamplerParams {
  Matrix mean;
  double variance = 1.0;

  Eigen::Index k() const noexcept { return mean.rows(); }
  Eigen::Index d() const noexcept { return mean.cols(); }

  /// The sampler the descent starts from: zero mean, unit variance.
  static SamplerParams origin(Eigen::Index k, Eigen::Index d) {
    if (k < 1 || d < 1) throw ParameterError("sampler shape must be positive");
    return {Matrix::Zero(k, d), 1.0};
  }
};

struct DistortionReport {
  Vector per_point;
  double max = 0.0;
  double mean = 0.0;
};

// ---------------------------------------------------------------------------
// Operations.

/// n i.i.d. points drawn from an isotropic Gaussian and normalized, so they
/// are uniform on the unit sphere. Deterministic in the seed.
inline Dataset make_unit_dataset(Eigen::Index n, Eigen::Index d,
                                 std::uint64_t seed) {
  if (n < 1) throw ParameterError("n must be at least 1");
  if (d < 2) throw ParameterError("d must be at least 2");
  Engine engine = make_engine(seed, 0xda7a);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(n, d);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index c = 0; c < d; ++c) x(j, c) = normal(engine);
  return Dataset(std::move(x));
}

/// per_point[j] = |(1/k) ||A x_j||^2 - 1|.
inline DistortionReport max_distortion(const Matrix& a, const Dataset& data) {
  if (a.rows() < 1 || a.cols() != data.d())
    throw ParameterError("projection shape " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) +
                         " does not match dataset dimension " +
                         std::to_string(data.d()));
  const double k = static_cast<double>(a.rows());
  const Matrix y = a * data.points().transpose();
  DistortionReport report;
  report.per_point = (y.colwise().squaredNorm().transpose().array() / k - 1.0)
                         .abs()
                         .matrix();
  report.max = report.per_point.maxCoeff();
  report.mean = report.per_point.mean();
  return report;
}

/// C * sqrt(ln n / k).
inline double jl_epsilon(double n, double k, double c) {
  if (!(n >= 2.0)) throw ParameterError("jl_epsilon needs n >= 2");
  if (!(k >= 1.0)) throw ParameterError("jl_epsilon needs k >= 1");
  if (!(c > 0.0)) throw ParameterError("jl_epsilon needs C > 0");
  return c * std::sqrt(std::log(n) / k);
}

/// One draw from N(M, sigma^2) on a k x d matrix. sigma^2 = 0 returns M.
inline Matrix sample_gaussian_matrix(const SamplerParams& params,
                                     Eigen::Index d, std::uint64_t seed) {
  if (!(params.variance >= 0.0))
    throw ParameterError("sampler variance must be nonnegative");
  if (params.mean.cols() != d)
    throw ParameterError("sampler mean has the wrong number of columns");
  if (params.variance == 0.0) return params.mean;
  Engine engine = make_engine(seed, 0x5a3b1e);
  return params.mean + std::sqrt(params.variance) *
                           standard_normal_matrix(params.k(), d, engine);
}

struct BaselineSummary {
  double avg_max_distortion = 0.0;
  double min_max_distortion = 0.0;
  std::vector<double> max_distortions;
};

/// Draws `trials` matrices Z ~ N(0, 1) and summarizes max_distortion(Z).
inline BaselineSummary baseline_gaussian_trials(const Dataset& data,
                                                Eigen::Index k, int trials,
                                                std::uint64_t seed) {
  if (trials < 1) throw ParameterError("trials must be at least 1");
  if (k < 1) throw ParameterError("k must be at least 1");
  BaselineSummary summary;
  summary.max_distortions.assign(static_cast<std::size_t>(trials), 0.0);
  parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
    Engine engine = make_engine(seed, 0xba5e0000ULL + t);
    const Matrix z = standard_normal_matrix(k, data.d(), engine);
    summary.max_distortions[t] = max_distortion(z, data).max;
  });
  double sum = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  for (double v : summary.max_distortions) {
    sum += v;
    lo = std::min(lo, v);
  }
  summary.avg_max_distortion = sum / trials;
  summary.min_max_distortion = lo;
  return summary;
}

}  // namespace jlsampler

#endif  // JLSAMPLER_CORE_HPP
