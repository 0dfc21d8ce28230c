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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "jlsampler/core.hpp"

namespace jl = jlsampler;

TEST(Dataset, NormalizesRowsOnIngest) {
  jl::Matrix m(3, 4);
  m << 3, 4, 0, 0, 1, 1, 1, 1, -2, 0, 0, 5;
  const jl::Dataset data(m);
  for (Eigen::Index j = 0; j < data.n(); ++j)
    EXPECT_NEAR(data.points().row(j).norm(), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(data.points()(0, 0), 0.6);
}

TEST(Dataset, RejectsBadShapesAndValues) {
  EXPECT_THROW(jl::Dataset(jl::Matrix(0, 3)), jl::ParameterError);
  EXPECT_THROW(jl::Dataset(jl::Matrix::Ones(2, 1)), jl::ParameterError);
  EXPECT_THROW(jl::Dataset(jl::Matrix::Zero(2, 3)), jl::ParameterError);
  jl::Matrix m = jl::Matrix::Ones(2, 3);
  m(1, 1) = std::nan("");
  EXPECT_THROW(jl::Dataset{m}, jl::ParameterError);
}

TEST(MakeUnitDataset, SinglePointIsUnit) {
  const auto data = jl::make_unit_dataset(1, 2, 0);
  EXPECT_NEAR(data.points().row(0).norm(), 1.0, 1e-15);
}

TEST(MakeUnitDataset, FullScaleShapeAndDeterminism) {
  const auto a = jl::make_unit_dataset(100, 500, 7);
  const auto b = jl::make_unit_dataset(100, 500, 7);
  EXPECT_EQ(a.n(), 100);
  EXPECT_EQ(a.d(), 500);
  EXPECT_TRUE(a.points().cwiseEqual(b.points()).all());
  const auto c = jl::make_unit_dataset(100, 500, 8);
  EXPECT_FALSE(a.points().isApprox(c.points()));
}

TEST(MakeUnitDataset, RejectsBadDimensions) {
  EXPECT_THROW(jl::make_unit_dataset(0, 3, 0), jl::ParameterError);
  EXPECT_THROW(jl::make_unit_dataset(3, 1, 0), jl::ParameterError);
}

TEST(MaxDistortion, ZeroMatrixGivesOne) {
  const auto data = jl::make_unit_dataset(10, 6, 1);
  const auto rep = jl::max_distortion(jl::Matrix::Zero(3, 6), data);
  EXPECT_TRUE((rep.per_point.array() == 1.0).all());
  EXPECT_EQ(rep.max, 1.0);
}

TEST(MaxDistortion, ScaledCoordinateRowsPreserveBasisVector) {
  const int k = 3, d = 5;
  jl::Matrix a = jl::Matrix::Zero(k, d);
  for (int i = 0; i < k; ++i) a(i, i) = std::sqrt(static_cast<double>(k));
  const jl::Dataset data(jl::Matrix::Identity(1, d));
  EXPECT_NEAR(jl::max_distortion(a, data).per_point(0), 0.0, 1e-15);
}

TEST(MaxDistortion, ShapeMismatchThrows) {
  const auto data = jl::make_unit_dataset(4, 6, 1);
  EXPECT_THROW(jl::max_distortion(jl::Matrix::Zero(3, 5), data), jl::ParameterError);
}

TEST(MaxDistortion, Properties) {
  const auto data = jl::make_unit_dataset(40, 12, 2);
  jl::Engine e = jl::make_engine(3);
  for (int trial = 0; trial < 10; ++trial) {
    const jl::Matrix a = jl::standard_normal_matrix(4, 12, e);
    const auto rep = jl::max_distortion(a, data);
    EXPECT_GE(rep.mean, 0.0);
    EXPECT_LE(rep.mean, rep.max);
    EXPECT_EQ(rep.max, rep.per_point.maxCoeff());

    // Permuting points.
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(data.n());
    perm.setIdentity();
    std::shuffle(perm.indices().data(), perm.indices().data() + data.n(), e);
    const jl::Dataset shuffled(perm * data.points());
    EXPECT_NEAR(jl::max_distortion(a, shuffled).max, rep.max, 1e-14);

    // Common rotation of points and matrix columns.
    const jl::Matrix r = jl::random_orthogonal(12, 100 + trial);
    const jl::Dataset rotated(data.points() * r);
    EXPECT_NEAR(jl::max_distortion(a * r, rotated).max, rep.max, 1e-10);
  }
}

TEST(JlEpsilon, Values) {
  EXPECT_NEAR(jl::jl_epsilon(std::exp(1.0), 1, 1), 1.0, 1e-15);
  EXPECT_NEAR(jl::jl_epsilon(100, 30, 2), 2.0 * std::sqrt(4.605170185988091 / 30.0), 1e-14);
  double prev = jl::jl_epsilon(50, 1, 1.5);
  for (int k = 2; k < 200; ++k) {
    const double e = jl::jl_epsilon(50, k, 1.5);
    EXPECT_LT(e, prev);
    prev = e;
  }
  EXPECT_THROW(jl::jl_epsilon(1, 3, 1), jl::ParameterError);
  EXPECT_THROW(jl::jl_epsilon(3, 0, 1), jl::ParameterError);
  EXPECT_THROW(jl::jl_epsilon(3, 3, 0), jl::ParameterError);
}

TEST(SampleGaussianMatrix, ZeroVarianceReturnsMeanBitwise) {
  jl::Engine e = jl::make_engine(5);
  const jl::SamplerParams p{jl::standard_normal_matrix(3, 7, e), 0.0};
  const jl::Matrix a = jl::sample_gaussian_matrix(p, 7, 42);
  EXPECT_TRUE(a.cwiseEqual(p.mean).all());
}

TEST(SampleGaussianMatrix, MomentsAndDeterminism) {
  const jl::SamplerParams p{jl::Matrix::Zero(100, 200), 1.0};
  const jl::Matrix a = jl::sample_gaussian_matrix(p, 200, 9);
  const double count = static_cast<double>(a.size());
  const double mean = a.mean();
  const double var = (a.array() - mean).square().sum() / (count - 1);
  EXPECT_LT(std::abs(mean), 3.0 / std::sqrt(count));
  EXPECT_LT(std::abs(var - 1.0), 3.0 * std::sqrt(2.0 / count));
  EXPECT_TRUE(a.cwiseEqual(jl::sample_gaussian_matrix(p, 200, 9)).all());
  EXPECT_THROW(jl::sample_gaussian_matrix({jl::Matrix::Zero(2, 2), -1.0}, 2, 0),
               jl::ParameterError);
}

TEST(Baseline, SingleTrialAvgEqualsMin) {
  const auto data = jl::make_unit_dataset(20, 10, 0);
  const auto s = jl::baseline_gaussian_trials(data, 4, 1, 3);
  EXPECT_EQ(s.avg_max_distortion, s.min_max_distortion);
}

TEST(Baseline, OrderingDeterminismAndThreads) {
  const auto data = jl::make_unit_dataset(1, 10, 0);
  const auto a = jl::baseline_gaussian_trials(data, 5, 200, 3);
  EXPECT_LE(a.min_max_distortion, a.avg_max_distortion);
  const auto b = jl::baseline_gaussian_trials(data, 5, 200, 3);
  EXPECT_EQ(a.max_distortions, b.max_distortions);
  jl::set_thread_hint(3);
  const auto c = jl::baseline_gaussian_trials(data, 5, 200, 3);
  jl::set_thread_hint(1);
  EXPECT_EQ(a.max_distortions, c.max_distortions);
  EXPECT_THROW(jl::baseline_gaussian_trials(data, 5, 0, 3), jl::ParameterError);
}

TEST(ParallelFor, VisitsEveryIndexOnce) {
  std::vector<int> hits(1000, 0);
  jl::parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; }, 4);
  EXPECT_EQ(std::accumulate(hits.begin(), hits.end(), 0), 1000);
  EXPECT_TRUE(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
}
