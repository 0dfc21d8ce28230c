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


// Smallest eigenpair of a symmetric operator that is only available through
// matrix-vector products. Thick-restart Lanczos: the Krylov basis is kept
// fully reorthogonalized together with its image, the Rayleigh-Ritz problem
// is solved densely, and on restart the lowest Ritz vectors are retained.

#ifndef JLSAMPLER_LANCZOS_HPP
#define JLSAMPLER_LANCZOS_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>

#include "jlsampler/errors.hpp"

namespace jlsampler {

struct EigenPair {
  double value = 0.0;
  Eigen::VectorXd vector;
  double residual = std::numeric_limits<double>::infinity();
  int products = 0;  // operator applications used
};

/// ConvergenceError that also carries the best Ritz pair seen.
class EigenConvergenceError : public ConvergenceError {
 public:
  EigenConvergenceError(const std::string& what, EigenPair best)
      : ConvergenceError(what, best.value), best_(std::move(best)) {}
  const EigenPair& best() const noexcept { return best_; }

 private:
  EigenPair best_;
};

struct LanczosOptions {
  double tol = 1e-8;        // residual target, relative to max(1, |lambda|)
  int max_products = 2000;  // budget of operator applications
  int basis = 40;           // maximum basis size before a restart
  int keep = 8;             // Ritz vectors kept across a restart
  std::uint64_t seed = 0x1a2c05;
};

/// `apply(in, out)` must write out = H in for a symmetric H of size dim.
template <class Apply>
EigenPair min_eigenpair_lanczos(Apply&& apply, Eigen::Index dim,
                                const LanczosOptions& opt = {}) {
  using Eigen::Index;
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  if (dim < 1) throw ParameterError("eigenproblem dimension must be positive");
  if (!(opt.tol > 0.0)) throw ParameterError("eigen tolerance must be positive");
  if (opt.max_products < 1) throw ParameterError("max_iters must be positive");

  const Index m = std::min<Index>(std::max(opt.basis, 2), dim);
  const Index keep = std::clamp<Index>(opt.keep, 1, std::max<Index>(1, m - 1));
  MatrixXd q(dim, m), hq(dim, m);
  Index size = 0;

  std::mt19937_64 engine(opt.seed);
  std::normal_distribution<double> normal;
  auto random_vector = [&] {
    VectorXd v(dim);
    for (Index i = 0; i < dim; ++i) v(i) = normal(engine);
    return v;
  };

  // Orthogonalizes v against the basis (twice) and appends it with its image.
  // Returns false when v lies in the span already.
  EigenPair best;
  auto append = [&](VectorXd v) {
    const double before = v.norm();
    for (int pass = 0; pass < 2; ++pass)
      v -= q.leftCols(size) * (q.leftCols(size).transpose() * v);
    const double after = v.norm();
    if (!(after > 1e-10 * before) || after == 0.0) return false;
    q.col(size) = v / after;
    VectorXd out(dim);
    apply(q.col(size).eval(), out);
    ++best.products;
    hq.col(size) = out;
    ++size;
    return true;
  };

  append(random_vector());
  while (true) {
    MatrixXd t = q.leftCols(size).transpose() * hq.leftCols(size);
    t = 0.5 * (t + t.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<MatrixXd> ritz(t);
    const VectorXd y = ritz.eigenvectors().col(0);
    const double theta = ritz.eigenvalues()(0);
    VectorXd u = q.leftCols(size) * y;
    const double unorm = u.norm();
    u /= unorm;
    VectorXd r = hq.leftCols(size) * y / unorm - theta * u;
    const double res = r.norm();
    if (res < best.residual || best.vector.size() == 0) {
      best.value = theta;
      best.vector = u;
      best.residual = res;
    }
    if (res <= opt.tol * std::max(1.0, std::abs(theta)) || size == dim) {
      best.value = theta;
      best.vector = u;
      best.residual = res;
      return best;
    }
    if (best.products >= opt.max_products)
      throw EigenConvergenceError(
          "eigensolver did not converge in " + std::to_string(opt.max_products) +
              " operator applications (residual " + std::to_string(res) + ")",
          best);
    if (size == m) {
      // Thick restart on the lowest Ritz vectors.
      const Index p = std::min(keep, size);
      const MatrixXd yk = ritz.eigenvectors().leftCols(p);
      const MatrixXd qk = q.leftCols(size) * yk;
      const MatrixXd hk = hq.leftCols(size) * yk;
      // Re-orthonormalize to wash out rounding.
      Eigen::HouseholderQR<MatrixXd> qr(qk);
      const MatrixXd rfac = qr.matrixQR().topLeftCorner(p, p)
                                .triangularView<Eigen::Upper>();
      const MatrixXd qthin = qr.householderQ() * MatrixXd::Identity(dim, p);
      q.leftCols(p) = qthin;
      hq.leftCols(p) = rfac.transpose()
                           .triangularView<Eigen::Lower>()
                           .solve(hk.transpose())
                           .transpose();
      size = p;
    }
    if (!append(r)) {
      // Invariant subspace: continue from a fresh direction.
      bool ok = false;
      for (int attempt = 0; attempt < 8 && !ok; ++attempt) ok = append(random_vector());
      if (!ok) return best;
    }
  }
}

}  // namespace jlsampler

#endif  // JLSAMPLER_LANCZOS_HPP
