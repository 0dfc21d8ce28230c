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


// A dataset on which the matrices [2U | 0] (U orthogonal) are strict local
// minima of the direct max-distortion objective while far better embeddings
// exist. Points are (x, last) in R^{k+1} with x ranging over e_i and
// e_i + e_j (i < j) and last in {+sqrt(15)|x|, -sqrt(15)|x|,
// +(sqrt(7)/3)|x|, -(sqrt(7)/3)|x|}.

#ifndef JLSAMPLER_COUNTEREXAMPLE_HPP
#define JLSAMPLER_COUNTEREXAMPLE_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "jlsampler/core.hpp"
#include "jlsampler/errors.hpp"

namespace jlsampler {

struct BadInstance {
  int k = 0;
  Matrix points;  // one point per row, (k+1) columns, not normalized
  Matrix a_star;  // [2I | 0]

  Eigen::Index n() const noexcept { return points.rows(); }
};

/// How distortion is measured on non-unit points.
///   squared_ratio: |‖Ax‖²/‖x‖² - 1|
///   norm_ratio:    |‖Ax‖/‖x‖ - 1|
enum class Convention { squared_ratio, norm_ratio };

inline const char* to_string(Convention c) {
  return c == Convention::squared_ratio ? "squared_ratio" : "norm_ratio";
}

inline BadInstance build_bad_instance(int k) {
  if (k < 2) throw ParameterError("counterexample needs k >= 2");
  const Eigen::Index n = 4 * (k + k * (k - 1) / 2);
  BadInstance inst;
  inst.k = k;
  inst.points = Matrix::Zero(n, k + 1);
  const std::array<double, 4> lasts = {std::sqrt(15.0), -std::sqrt(15.0),
                                       std::sqrt(7.0) / 3.0, -std::sqrt(7.0) / 3.0};
  Eigen::Index row = 0;
  auto emit = [&](const Vector& base) {
    const double norm = base.norm();
    for (double c : lasts) {
      inst.points.row(row).head(k) = base.transpose();
      inst.points(row, k) = c * norm;
      ++row;
    }
  };
  for (int i = 0; i < k; ++i) emit(Vector::Unit(k, i));
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) emit(Vector::Unit(k, i) + Vector::Unit(k, j));
  inst.a_star = Matrix::Zero(k, k + 1);
  inst.a_star.leftCols(k) = 2.0 * Matrix::Identity(k, k);
  return inst;
}

/// Largest per-point relative distortion of A on the instance.
inline double instance_distortion(const BadInstance& inst, const Matrix& a,
                                  Convention conv = Convention::squared_ratio) {
  if (a.rows() != inst.k || a.cols() != inst.k + 1)
    throw ParameterError("matrix must be k x (k+1)");
  const Matrix y = inst.points * a.transpose();
  const Vector num = y.rowwise().squaredNorm();
  const Vector den = inst.points.rowwise().squaredNorm();
  double worst = 0.0;
  for (Eigen::Index j = 0; j < num.size(); ++j) {
    const double ratio = num(j) / den(j);
    const double dist = conv == Convention::squared_ratio ? std::abs(ratio - 1.0)
                                                          : std::abs(std::sqrt(ratio) - 1.0);
    worst = std::max(worst, dist);
  }
  return worst;
}

struct LocalMinReport {
  int k = 0;
  Convention convention = Convention::squared_ratio;
  double distortion = 0.0;  // at A_star
  std::vector<double> radius_levels;
  int trials = 0;
  bool all_worse = true;
  double min_margin = std::numeric_limits<double>::infinity();
  std::vector<double> min_margin_per_level;  // random sphere samples
  double axis_min_margin = std::numeric_limits<double>::infinity();
  int violations = 0;
};

/// Perturbs A_star by `trials` uniform draws on each Frobenius sphere of
/// radius r, r/10, r/100 and by every +-r E_{il}; the margin of a
/// perturbation is distortion(A_star + dA) - distortion(A_star).
inline LocalMinReport verify_local_min(const BadInstance& inst, double radius,
                                       int trials, std::uint64_t seed,
                                       Convention conv = Convention::squared_ratio) {
  if (!(radius > 0.0 && radius <= 1e-2))
    throw ParameterError("radius must lie in (0, 1e-2]");
  if (trials < 1) throw ParameterError("trials must be >= 1");
  LocalMinReport rep;
  rep.k = inst.k;
  rep.convention = conv;
  rep.trials = trials;
  rep.distortion = instance_distortion(inst, inst.a_star, conv);
  rep.radius_levels = {radius, radius / 10.0, radius / 100.0};
  const Eigen::Index rows = inst.k, cols = inst.k + 1;

  std::vector<double> margins(static_cast<std::size_t>(trials));
  for (std::size_t level = 0; level < rep.radius_levels.size(); ++level) {
    const double r = rep.radius_levels[level];
    parallel_for(margins.size(), [&](std::size_t t) {
      Engine e = make_engine(seed, (static_cast<std::uint64_t>(level + 1) << 32) + t);
      Matrix da = standard_normal_matrix(rows, cols, e);
      da *= r / da.norm();
      margins[t] = instance_distortion(inst, inst.a_star + da, conv) - rep.distortion;
    });
    double lo = std::numeric_limits<double>::infinity();
    for (double m : margins) {
      lo = std::min(lo, m);
      if (m < 0.0) ++rep.violations;
    }
    rep.min_margin_per_level.push_back(lo);
  }
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index l = 0; l < cols; ++l)
      for (double s : {1.0, -1.0}) {
        Matrix a = inst.a_star;
        a(i, l) += s * radius;
        const double m = instance_distortion(inst, a, conv) - rep.distortion;
        rep.axis_min_margin = std::min(rep.axis_min_margin, m);
        if (m < 0.0) ++rep.violations;
      }
  rep.min_margin = rep.axis_min_margin;
  for (double m : rep.min_margin_per_level) rep.min_margin = std::min(rep.min_margin, m);
  rep.all_worse = rep.violations == 0;
  return rep;
}

}  // namespace jlsampler

#endif  // JLSAMPLER_COUNTEREXAMPLE_HPP
