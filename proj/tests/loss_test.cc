// Copyright 2026 The ilsmooth Authors.
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

#include "ilsmooth/nn/loss.h"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

namespace ilsmooth::nn {
namespace {

Matrix Row(std::initializer_list<double> v) {
  Matrix m(1, static_cast<Eigen::Index>(v.size()));
  Eigen::Index j = 0;
  for (double x : v) m(0, j++) = x;
  return m;
}

Matrix RandomDistributions(int n, int k, std::mt19937_64& rng) {
  std::gamma_distribution<double> g(0.5, 1.0);
  Matrix m(n, k);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) m(i, j) = g(rng) + 1e-300;
    m.row(i) /= m.row(i).sum();
  }
  return m;
}

TEST(SoftCrossEntropyTest, HandValues) {
  EXPECT_NEAR(SoftCrossEntropy(Row({0.5, 0.25, 0.25}), TargetMatrix(Row({1, 0, 0}))),
              std::log(2.0), 1e-12);
  EXPECT_NEAR(SoftCrossEntropy(Row({1.0 / 3, 1.0 / 3, 1.0 / 3}),
                               TargetMatrix(Row({1.0 / 3, 1.0 / 3, 1.0 / 3}))),
              std::log(3.0), 1e-12);
  EXPECT_NEAR(SoftCrossEntropy(Row({1 - 1e-12, 5e-13, 5e-13}), TargetMatrix(Row({1, 0, 0}))),
              0.0, 1e-11);
}

TEST(SoftCrossEntropyTest, ClipsZeroPredictions) {
  const double v = SoftCrossEntropy(Row({0.0, 1.0}), TargetMatrix(Row({1, 0})));
  EXPECT_NEAR(v, -std::log(kLogFloor), 1e-9);
}

TEST(SoftCrossEntropyTest, Errors) {
  EXPECT_THROW(SoftCrossEntropy(Row({0.5, 0.5}), TargetMatrix(Row({1, 0, 0}))), ShapeError);
  EXPECT_THROW(SoftCrossEntropy(Matrix(0, 3), TargetMatrix(Matrix(0, 3))), ShapeError);
}

TEST(TargetMatrixTest, RejectsNonDistributions) {
  EXPECT_THROW(TargetMatrix(Row({0.5, 0.6})), ConfigError);
  EXPECT_THROW(TargetMatrix(Row({1.2, -0.2})), ConfigError);
  EXPECT_THROW(TargetMatrix(Row({std::nan(""), 1.0})), ConfigError);
  EXPECT_NO_THROW(TargetMatrix(Row({0.5, 0.5 + 1e-10})));
}

TEST(TargetMatrixTest, SelectRowsKeepsInvariant) {
  Matrix m(3, 2);
  m << 1, 0, 0.3, 0.7, 0.5, 0.5;
  const TargetMatrix t(m);
  const std::vector<int> rows = {2, 1};
  const TargetMatrix s = t.SelectRows(rows);
  EXPECT_EQ(s.rows(), 2);
  EXPECT_DOUBLE_EQ(s(1, 1), 0.7);
}

// Gibbs' inequality: CE(p, y) >= H(y), with equality at p = y.
TEST(SoftCrossEntropyProperty, GibbsInequality) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 2000; ++trial) {
    const int k = 2 + static_cast<int>(rng() % 6);
    const Matrix y = RandomDistributions(4, k, rng);
    const Matrix p = RandomDistributions(4, k, rng);
    const TargetMatrix t(y);
    EXPECT_GE(SoftCrossEntropy(p, t), MeanEntropy(t) - 1e-9);
    EXPECT_NEAR(SoftCrossEntropy(y.cwiseMax(kLogFloor), t), MeanEntropy(t), 1e-6);
  }
}

TEST(MeanEntropyTest, Values) {
  EXPECT_NEAR(MeanEntropy(TargetMatrix(Row({1, 0, 0}))), 0.0, 1e-15);
  EXPECT_NEAR(MeanEntropy(TargetMatrix(Row({0.25, 0.25, 0.25, 0.25}))), std::log(4.0), 1e-12);
}

}  // namespace
}  // namespace ilsmooth::nn
