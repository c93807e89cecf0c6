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

#include "ilsmooth/smoothing/targets.h"

#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "ilsmooth/synth/generative_model.h"
#include "target_properties.h"

namespace ilsmooth::smoothing {
namespace {

void ExpectRow(const TargetMatrix& t, int row, std::vector<double> expected, double tol = 1e-12) {
  ASSERT_EQ(t.cols(), static_cast<Eigen::Index>(expected.size()));
  for (std::size_t j = 0; j < expected.size(); ++j) {
    EXPECT_NEAR(t(row, static_cast<Eigen::Index>(j)), expected[j], tol) << "column " << j;
  }
}

TeacherPredictions Teacher(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return {m, 1.0};
}

TEST(HardTargetsTest, OneHot) {
  const auto t = HardTargets({0, 2}, 3);
  ExpectRow(t, 0, {1, 0, 0});
  ExpectRow(t, 1, {0, 0, 1});
  EXPECT_EQ(HardTargets({}, 3).rows(), 0);
  EXPECT_THROW(HardTargets({3}, 3), ShapeError);
}

TEST(StandardLsTest, Values) {
  ExpectRow(StandardLs({0}, 3, SmoothingFactor(0.1)), 0, {0.9 + 0.1 / 3, 0.1 / 3, 0.1 / 3});
  EXPECT_NEAR(StandardLs({0}, 3, SmoothingFactor(0.1))(0, 0), 0.933, 5e-4);
  ExpectRow(StandardLs({1}, 2, SmoothingFactor(0.2)), 0, {0.1, 0.9});
  EXPECT_TRUE(StandardLs({0, 1, 2}, 3, SmoothingFactor(0.0)) == HardTargets({0, 1, 2}, 3));
}

TEST(SmoothingFactorTest, Range) {
  EXPECT_THROW(SmoothingFactor(-0.01), ConfigError);
  EXPECT_THROW(SmoothingFactor(0.5), ConfigError);
  EXPECT_THROW(SmoothingFactor(std::nan("")), ConfigError);
  EXPECT_EQ(SmoothingFactor(0.499).value(), 0.499);
}

TEST(Ils1EpsilonTest, Quadratic) {
  CurveParams p;
  EXPECT_EQ(Ils1Epsilon(0.8, p), 0.0);
  EXPECT_NEAR(Ils1Epsilon(0.9, p), 0.02, 1e-12);
  EXPECT_NEAR(Ils1Epsilon(0.4, p), 0.2, 1e-15);
  EXPECT_THROW(Ils1Epsilon(1.5, p), ConfigError);
}

TEST(Ils1EpsilonTest, Sinusoidal) {
  CurveParams p;
  p.family = CurveFamily::kSinusoidal;
  p.p1 = 0.5;
  p.p2 = 3.0;
  EXPECT_NEAR(Ils1Epsilon(0.5, p), 0.1, 1e-15);
  EXPECT_NEAR(Ils1Epsilon(0.9, p), std::min(0.2, 0.1 * (std::sin(3.0 * 0.4) + 1.0)), 1e-15);
  p.cap = 0.15;
  EXPECT_LE(Ils1Epsilon(0.9, p), 0.15);
}

TEST(CurveParamsTest, Validate) {
  CurveParams p;
  p.cap = 0.5;
  EXPECT_THROW(p.Validate(), ConfigError);
  p = CurveParams{};
  p.p1 = 1.2;
  EXPECT_THROW(p.Validate(), ConfigError);
  EXPECT_EQ(ParseCurveFamily(ToString(CurveFamily::kSinusoidal)), CurveFamily::kSinusoidal);
}

TEST(Ils1TargetsTest, TeacherAtVertexGivesHard) {
  const auto teacher = Teacher({{0.8, 0.1, 0.1}, {0.15, 0.8, 0.05}});
  EXPECT_TRUE(Ils1Targets({0, 1}, 3, teacher, CurveParams{}) == HardTargets({0, 1}, 3));
}

TEST(Ils1TargetsTest, HandValue) {
  const auto t = Ils1Targets({0}, 3, Teacher({{0.9, 0.05, 0.05}}), CurveParams{});
  ExpectRow(t, 0, {0.98 + 0.02 / 3, 0.02 / 3, 0.02 / 3});
  EXPECT_NEAR(t(0, 0), 0.98667, 1e-5);
}

TEST(Ils1TargetsTest, CapSaturation) {
  CurveParams p;
  const double limit = p.p1 - std::sqrt(p.cap / p.p2);
  const auto teacher = Teacher({{limit, 1 - limit, 0.0}, {0.1, 0.2, 0.7}, {0.3, 0.0, 0.7}});
  const Labels y = {0, 0, 0};
  const auto t = Ils1Targets(y, 3, teacher, p);
  const auto ls = StandardLs(y, 3, SmoothingFactor(p.cap));
  EXPECT_LT((t.values() - ls.values()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Ils1TargetsTest, Misaligned) {
  EXPECT_THROW(Ils1Targets({0, 1}, 3, Teacher({{0.5, 0.3, 0.2}}), CurveParams{}), ShapeError);
}

TEST(Ils2TargetsTest, HandValue) {
  ExpectRow(Ils2Targets({0}, 3, Teacher({{0.7, 0.2, 0.1}}), SmoothingFactor(0.1)), 0,
            {0.9, 0.1 * 2.0 / 3.0, 0.1 / 3.0});
}

TEST(Ils2TargetsTest, ZeroEpsilonIsHard) {
  const auto teacher = Teacher({{0.2, 0.5, 0.3}, {0.1, 0.1, 0.8}});
  EXPECT_TRUE(Ils2Targets({0, 2}, 3, teacher, SmoothingFactor(0.0)) == HardTargets({0, 2}, 3));
}

TEST(Ils2TargetsTest, UniformTeacherMatchesReparameterizedLs) {
  // True-class mass 1 - e with e/(K-1) on every wrong class equals standard
  // smoothing with factor e K / (K - 1).
  const int k = 4;
  const double e = 0.2;
  const auto teacher = Teacher({{0.4, 0.2, 0.2, 0.2}, {0.1, 0.7, 0.1, 0.1}, {0.25, 0.25, 0.25, 0.25}});
  const Labels y = {0, 1, 3};
  const auto ils2 = Ils2Targets(y, k, teacher, SmoothingFactor(e));
  const auto ls = StandardLs(y, k, SmoothingFactor(e * k / (k - 1)));
  EXPECT_LT((ils2.values() - ls.values()).cwiseAbs().maxCoeff(), 1e-15);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(ils2(i, y[static_cast<std::size_t>(i)]), 1 - e, 1e-15);
}

TEST(Ils2TargetsTest, SaturatedTeacherFallsBackToUniform) {
  int saturated = -1;
  const auto t = Ils2Targets({0, 1}, 3, Teacher({{1.0, 0.0, 0.0}, {0.3, 0.5, 0.2}}),
                             SmoothingFactor(0.1), &saturated);
  EXPECT_EQ(saturated, 1);
  ExpectRow(t, 0, {0.9, 0.05, 0.05});
}

TEST(IlsTargetsTest, HandValue) {
  ExpectRow(IlsTargets({0}, 3, Teacher({{0.9, 0.08, 0.02}}), CurveParams{}), 0,
            {0.98, 0.016, 0.004});
}

TEST(IlsTargetsTest, TeacherAtVertexGivesHard) {
  const auto teacher = Teacher({{0.8, 0.15, 0.05}, {0.1, 0.1, 0.8}});
  EXPECT_TRUE(IlsTargets({0, 2}, 3, teacher, CurveParams{}) == HardTargets({0, 2}, 3));
}

TEST(ClsTargetsTest, EquidistantCentroidsReduceToLs) {
  const double h = std::sqrt(3.0) / 2.0;
  Matrix x(3, 2);
  x << 0, 0, 1, 0, 0.5, h;
  const Labels y = {0, 1, 2};
  const auto cls = ClsTargets(x, y, 3, SmoothingFactor(0.15));
  const auto ls = StandardLs(y, 3, SmoothingFactor(0.15));
  EXPECT_LT((cls.values() - ls.values()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ClsTargetsTest, TwoClassesReduceToLs) {
  Matrix x(4, 2);
  x << 0, 0, 10, 3, 1, 1, -7, 2;
  const Labels y = {0, 1, 0, 1};
  const auto cls = ClsTargets(x, y, 2, SmoothingFactor(0.3));
  EXPECT_LT((cls.values() - StandardLs(y, 2, SmoothingFactor(0.3)).values()).cwiseAbs().maxCoeff(),
            1e-12);
}

TEST(ClsTargetsTest, CanonicalClassZeroLeansToClassOne) {
  const auto d = synth::Sample(synth::GenerativeModel::Canonical(), 500, 3);
  const auto t = ClsTargets(d.features, d.labels, 3, SmoothingFactor(0.1));
  const auto row = static_cast<Eigen::Index>(
      std::find(d.labels.begin(), d.labels.end(), 0) - d.labels.begin());
  EXPECT_GT(t(row, 1), t(row, 2));
  const Matrix s = ClassSimilarity(d.features, d.labels, 3);
  EXPECT_EQ(s(0, 0), 0.0);
  EXPECT_NEAR(s.row(0).sum(), 1.0, 1e-12);
}

TEST(BsSoftTargetsTest, Values) {
  Matrix p(1, 3);
  p << 0.5, 0.3, 0.2;
  ExpectRow(BsSoftTargets({0}, 3, p, 0.95), 0, {0.975, 0.015, 0.01});
  EXPECT_TRUE(BsSoftTargets({0}, 3, p, 1.0) == HardTargets({0}, 3));
  Matrix onehot(1, 3);
  onehot << 0, 1, 0;
  EXPECT_TRUE(BsSoftTargets({1}, 3, onehot, 0.6) == HardTargets({1}, 3));
  EXPECT_THROW(BsSoftTargets({0}, 3, p, 0.0), ConfigError);
}

TEST(BsSoftProviderTest, TracksCurrentModel) {
  nn::ArchitectureSpec arch;
  arch.hidden_layers = {4};
  const auto model = nn::NetworkModel::Initialize(arch, 1);
  Matrix x(2, 2);
  x << 0.5, -1, 2, 0;
  const Labels y = {2, 0};
  const auto provider = BsSoftProvider(x, y, 3, 0.8);
  const auto t = provider(model, 3);
  const auto expected = BsSoftTargets(y, 3, nn::Forward(model, x), 0.8);
  EXPECT_LT((t.values() - expected.values()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(BetaTargetsTest, MonteCarloMean) {
  BetaSmoothingParams p;
  p.alpha = 0.4;
  p.a = 2.0;
  p.target_epsilon = 0.1;
  const auto eps = BetaEpsilons(100000, p, 11);
  const double mean = std::accumulate(eps.begin(), eps.end(), 0.0) / eps.size();
  EXPECT_NEAR(mean, 0.1, 1e-3);
  // E[Beta(a, 1)] = a / (a + 1).
  EXPECT_NEAR(p.Scale(), 0.1 / (0.4 + 0.6 * 2.0 / 3.0), 1e-15);
}

TEST(BetaTargetsTest, PointMassShapeIsConstant) {
  BetaSmoothingParams p;
  p.a = 1e9;
  p.target_epsilon = 0.12;
  const auto eps = BetaEpsilons(1000, p, 3);
  for (double e : eps) EXPECT_NEAR(e, 0.12, 1e-6);
}

TEST(BetaTargetsTest, DeterministicAndValidated) {
  BetaSmoothingParams p;
  const Labels y = {0, 1, 2, 1};
  EXPECT_TRUE(BetaTargets(y, 3, p, 5) == BetaTargets(y, 3, p, 5));
  EXPECT_FALSE(BetaTargets(y, 3, p, 5) == BetaTargets(y, 3, p, 6));
  p.target_epsilon = 0.45;
  EXPECT_THROW(p.Validate(), ConfigError);
  EXPECT_THROW(BetaTargets(y, 3, p, 5), ConfigError);
}

TEST(StrategyTest, Names) {
  for (auto s : {Strategy::kNone, Strategy::kLs, Strategy::kLsFixed, Strategy::kIls1, Strategy::kIls2,
                 Strategy::kIls, Strategy::kCls, Strategy::kBsSoft, Strategy::kBeta}) {
    EXPECT_EQ(ParseStrategy(ToString(s)), s);
  }
  EXPECT_THROW(ParseStrategy("mixup"), ConfigError);
}

TEST(TargetPropertyTest, TenThousandRandomCases) {
  const auto outcome = testing::RunTargetProperties(10000, 99);
  EXPECT_EQ(outcome.cases, 10000);
  for (const auto& v : outcome.violations) ADD_FAILURE() << v;
}

}  // namespace
}  // namespace ilsmooth::smoothing
