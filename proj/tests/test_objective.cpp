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


#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>
#include <random>

#include "jlsampler/objective.hpp"
#include "jlsampler/optimizer.hpp"

namespace jl = jlsampler;
using jl::Matrix;
using jl::Vector;

namespace {

struct Instance {
  jl::ObjectiveContext ctx;
  Instance() : ctx(jl::make_unit_dataset(5, 8, 3), 3, 0.5) {}
};

jl::SamplerParams from_flat(const Vector& z, Eigen::Index k, Eigen::Index d) {
  return {Eigen::Map<const Matrix>(z.data(), k, d), z(k * d)};
}

Vector to_flat(const jl::SamplerParams& p) {
  Vector z(p.mean.size() + 1);
  z.head(p.mean.size()) = p.mean.reshaped();
  z(p.mean.size()) = p.variance;
  return z;
}

jl::SamplerParams random_params(jl::Engine& e, Eigen::Index k, Eigen::Index d) {
  std::uniform_real_distribution<double> u(0.25, 1.0);
  return {0.5 * jl::standard_normal_matrix(k, d, e), u(e)};
}

Vector random_unit(jl::Engine& e, Eigen::Index dim) {
  Vector w = jl::standard_normal_matrix(dim, 1, e);
  return w / w.norm();
}

}  // namespace

TEST(ObjectiveContext, Validation) {
  const auto data = jl::make_unit_dataset(4, 3, 0);
  EXPECT_THROW(jl::ObjectiveContext(data, 0, 0.5), jl::ParameterError);
  EXPECT_THROW(jl::ObjectiveContext(data, 2, 0.0), jl::ParameterError);
  EXPECT_THROW(jl::ObjectiveContext(data, 2, 0.5, 0.0), jl::ParameterError);
  EXPECT_THROW(jl::ObjectiveContext(data, 2, 0.5, 1e-3), jl::ParameterError);
  EXPECT_NO_THROW(jl::ObjectiveContext(data, 2, 1.3));
}

TEST(FailureProbPoint, InfiniteVarianceAlwaysFails) {
  const Vector v = Vector::Constant(4, 0.3);
  EXPECT_NEAR(jl::failure_prob_point(v, 1e12, 4, 0.5), 1.0, 1e-9);
}

TEST(FailureProbPoint, CalibratedOriginMatchesMonteCarlo) {
  const int n = 100, k = 30;
  const double c = jl::calibrate_epsilon_constant(n, k);
  const double eps = jl::jl_epsilon(n, k, c);
  const double p = jl::failure_prob_point(Vector::Zero(k), 1.0, k, eps);
  EXPECT_LT(p, 1.0 / (3.0 * n));

  // Rows of a standard Gaussian matrix applied to a unit vector.
  std::mt19937_64 engine(77);
  std::normal_distribution<double> normal;
  const int draws = 1'000'000;
  long out = 0;
  for (int i = 0; i < draws; ++i) {
    double s = 0.0;
    for (int r = 0; r < k; ++r) {
      const double z = normal(engine);
      s += z * z;
    }
    s /= k;
    out += (s < 1.0 - eps || s > 1.0 + eps);
  }
  const double mc = static_cast<double>(out) / draws;
  const double se = std::sqrt(mc * (1.0 - mc) / draws);
  EXPECT_NEAR(p, mc, 4.0 * se);
}

TEST(FailureProbPoint, NonIncreasingInEps) {
  jl::Engine e = jl::make_engine(4);
  for (int trial = 0; trial < 5; ++trial) {
    const Vector v = 0.8 * jl::standard_normal_matrix(6, 1, e);
    for (double tau : {0.05, 0.4, 1.0}) {
      double prev = 1.0;
      for (double eps = 0.05; eps < 1.5; eps += 0.05) {
        const double p = jl::failure_prob_point(v, tau, 6, eps);
        EXPECT_LE(p, prev + 1e-15);
        EXPECT_GE(p, 0.0);
        prev = p;
      }
    }
  }
  double prev = 1.0;
  for (int i = 1; i <= 9; ++i) {
    const double p = jl::failure_prob_point(Vector::Zero(200), 1.0, 200, 0.1 * i);
    EXPECT_LT(p, prev);
    prev = p;
  }
  const double tail = boost::math::cdf(boost::math::chi_squared(200), 200 * 0.1) +
                     boost::math::cdf(boost::math::complement(boost::math::chi_squared(200), 200 * 1.9));
  EXPECT_NEAR(prev / tail, 1.0, 1e-8);
}

TEST(FailureProbPoint, RejectsNonPositiveTau) {
  EXPECT_THROW(jl::failure_prob_point(Vector::Zero(3), 0.0, 3, 0.5), jl::ParameterError);
}

TEST(ValueFunctions, RangesAndRegularizer) {
  Instance inst;
  jl::Engine e = jl::make_engine(8);
  for (int trial = 0; trial < 20; ++trial) {
    jl::SamplerParams p = random_params(e, 3, 8);
    p.mean *= 3.0 * trial / 20.0;
    const double f = jl::f_value(p, inst.ctx);
    const double g = jl::g_value(p, inst.ctx);
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, 5.0);
    EXPECT_GE(g, 0.5 * p.variance);
    EXPECT_EQ(g, f + 0.5 * p.variance);
  }
  jl::SamplerParams zero_var{Matrix::Ones(3, 8), 0.0};
  EXPECT_EQ(jl::g_value(zero_var, inst.ctx), jl::f_value(zero_var, inst.ctx));
  EXPECT_TRUE(jl::LocalModel(zero_var, inst.ctx).clamped());
}

TEST(ValueFunctions, RotationalCovariance) {
  const auto data = jl::make_unit_dataset(12, 6, 5);
  const jl::ObjectiveContext ctx(data, 4, 0.6);
  jl::Engine e = jl::make_engine(9);
  const jl::SamplerParams p = random_params(e, 4, 6);
  const Matrix r = jl::random_orthogonal(6, 3);
  const jl::ObjectiveContext rotated(jl::Dataset(data.points() * r), 4, 0.6);
  EXPECT_NEAR(jl::f_value({p.mean * r, p.variance}, rotated), jl::f_value(p, ctx), 1e-10);
}

TEST(Gradient, ZeroMeanHasZeroMeanBlock) {
  Instance inst;
  const auto grad = jl::grad_g(jl::SamplerParams::origin(3, 8), inst.ctx);
  EXPECT_EQ(grad.d_mean.norm(), 0.0);
}

TEST(Gradient, LargeVarianceLeavesRegularizer) {
  Instance inst;
  const auto grad = jl::grad_g({Matrix::Zero(3, 8), 1e8}, inst.ctx);
  EXPECT_NEAR(grad.d_tau, 0.5, 1e-6);
}

TEST(Gradient, FiniteDifferenceOracle) {
  Instance inst;
  jl::Engine e = jl::make_engine(10);
  for (int trial = 0; trial < 20; ++trial) {
    const jl::SamplerParams p = random_params(e, 3, 8);
    const Vector g = jl::grad_g(p, inst.ctx).flatten();
    const Vector z = to_flat(p);
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      Vector zp = z, zm = z;
      zp(i) += 1e-5;
      zm(i) -= 1e-5;
      const double fd = (jl::g_value(from_flat(zp, 3, 8), inst.ctx) -
                         jl::g_value(from_flat(zm, 3, 8), inst.ctx)) / 2e-5;
      EXPECT_LE(std::abs(fd - g(i)) / std::max(std::abs(g(i)), 1e-6), 1e-4)
          << "trial " << trial << " coordinate " << i;
    }
  }
}

TEST(Gradient, MeanBlockLiesInDataRowSpace) {
  Instance inst;
  jl::Engine e = jl::make_engine(12);
  const Matrix& x = inst.ctx.data.points();  // 5 x 8, so the span is proper
  const Eigen::ColPivHouseholderQR<Matrix> qr(x.transpose());
  const Matrix basis = qr.householderQ() * Matrix::Identity(8, qr.rank());
  for (int trial = 0; trial < 5; ++trial) {
    const auto grad = jl::grad_g(random_params(e, 3, 8), inst.ctx);
    for (Eigen::Index i = 0; i < 3; ++i) {
      const Vector row = grad.d_mean.row(i).transpose();
      EXPECT_LT((row - basis * (basis.transpose() * row)).norm(), 1e-10);
    }
  }
}

TEST(Hessian, TauDirectionMatchesGradientDifference) {
  Instance inst;
  jl::Engine e = jl::make_engine(13);
  for (int trial = 0; trial < 5; ++trial) {
    const jl::SamplerParams p = random_params(e, 3, 8);
    Vector w = Vector::Zero(25);
    w(24) = 1.0;
    const double h = jl::hessian_vec_product(p, inst.ctx, w)(24);
    const double step = 1e-5;
    const double fd = (jl::grad_g({p.mean, p.variance + step}, inst.ctx).d_tau -
                       jl::grad_g({p.mean, p.variance - step}, inst.ctx).d_tau) / (2 * step);
    EXPECT_LE(std::abs(h - fd) / std::max(std::abs(fd), 1e-6), 1e-4);
  }
}

TEST(Hessian, Symmetric) {
  Instance inst;
  jl::Engine e = jl::make_engine(14);
  const jl::LocalModel model(random_params(e, 3, 8), inst.ctx);
  for (int pair = 0; pair < 100; ++pair) {
    const Vector w1 = random_unit(e, 25), w2 = random_unit(e, 25);
    const double a = w1.dot(model.hvp(w2)), b = w2.dot(model.hvp(w1));
    EXPECT_NEAR(a, b, 1e-8);
  }
}

TEST(Hessian, TaylorRemainderIsCubic) {
  Instance inst;
  jl::Engine e = jl::make_engine(15);
  for (int trial = 0; trial < 3; ++trial) {
    jl::SamplerParams p = random_params(e, 3, 8);
    p.variance = 0.6;
    const jl::LocalModel model(p, inst.ctx);
    const Vector z = to_flat(p);
    const Vector w = random_unit(e, 25);
    const double g0 = model.g();
    const double slope = model.gradient().flatten().dot(w);
    const double curv = w.dot(model.hvp(w));
    std::vector<double> lt, lr;
    for (double t = 0.04; t > 0.002; t *= 0.5) {
      const double r = jl::g_value(from_flat(z + t * w, 3, 8), inst.ctx) - g0 - t * slope -
                       0.5 * t * t * curv;
      lt.push_back(std::log(t));
      lr.push_back(std::log(std::abs(r)));
    }
    const double n = static_cast<double>(lt.size());
    double mt = 0, mr = 0;
    for (std::size_t i = 0; i < lt.size(); ++i) mt += lt[i] / n, mr += lr[i] / n;
    double num = 0, den = 0;
    for (std::size_t i = 0; i < lt.size(); ++i) {
      num += (lt[i] - mt) * (lr[i] - mr);
      den += (lt[i] - mt) * (lt[i] - mt);
    }
    const double fit = num / den;
    EXPECT_GT(fit, 2.7);
    EXPECT_LT(fit, 3.3);
  }
}

TEST(Hessian, MeanBlockRestriction) {
  Instance inst;
  jl::Engine e = jl::make_engine(16);
  const jl::LocalModel model(random_params(e, 3, 8), inst.ctx);
  const Vector w = random_unit(e, 25);
  const Vector full = model.hvp(w, true);
  const Vector restricted = model.hvp(w, false);
  Vector w0 = w;
  w0(24) = 0.0;
  EXPECT_EQ(restricted(24), 0.0);
  EXPECT_LT((restricted.head(24) - model.hvp(w0, true).head(24)).norm(), 1e-14);
  EXPECT_GT((full - restricted).norm(), 0.0);
  EXPECT_THROW(jl::hessian_vec_product(jl::SamplerParams::origin(3, 8), inst.ctx, Vector::Zero(25)),
               jl::ParameterError);
}

TEST(MinEigenpair, DenseOracle) {
  Instance inst;
  jl::Engine e = jl::make_engine(17);
  for (int trial = 0; trial < 5; ++trial) {
    const jl::SamplerParams p = random_params(e, 3, 8);
    const jl::LocalModel model(p, inst.ctx);
    Matrix h(25, 25);
    for (int i = 0; i < 25; ++i) h.col(i) = model.hvp(Vector::Unit(25, i));
    const Eigen::SelfAdjointEigenSolver<Matrix> dense(0.5 * (h + h.transpose()));
    const double tol = 1e-9;
    const jl::EigenPair pair = jl::min_eigenpair(p, inst.ctx, tol, 1000);
    EXPECT_NEAR(pair.value, dense.eigenvalues()(0), tol);
    EXPECT_NEAR(pair.vector.norm(), 1.0, 1e-12);
    EXPECT_LE((model.hvp(pair.vector) - pair.value * pair.vector).norm(),
              tol * std::max(1.0, std::abs(pair.value)));
    for (int probe = 0; probe < 20; ++probe) {
      const Vector w = random_unit(e, 25);
      EXPECT_LE(pair.value, w.dot(model.hvp(w)) + tol);
    }
  }
}

TEST(MinEigenpair, BudgetExhaustionCarriesBestIterate) {
  const jl::ObjectiveContext ctx(jl::make_unit_dataset(30, 20, 1), 6, 0.5);
  jl::Engine e = jl::make_engine(18);
  try {
    jl::min_eigenpair(random_params(e, 6, 20), ctx, 1e-14, 3);
    FAIL() << "expected a convergence error";
  } catch (const jl::EigenConvergenceError& err) {
    EXPECT_NEAR(err.best().vector.norm(), 1.0, 1e-12);
    EXPECT_EQ(err.best_value(), err.best().value);
  }
  EXPECT_THROW(jl::min_eigenpair(random_params(e, 6, 20), ctx, 0.0, 10), jl::ParameterError);
}

TEST(ExtendedBand, LowerEdgeBelowZeroContributesNothing) {
  const Vector v = Vector::Constant(3, 0.4);
  const double tau = 0.3, eps = 1.4;
  const double delta = v.squaredNorm() / tau;
  EXPECT_NEAR(jl::failure_prob_point(v, tau, 3, eps),
              jlsampler::ncx2::sf(3 * (1 + eps) / tau, 3, delta), 1e-15);
}
