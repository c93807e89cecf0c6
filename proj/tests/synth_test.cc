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

#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "ilsmooth/synth/bayes_report.h"
#include "ilsmooth/synth/generative_model.h"

namespace ilsmooth::synth {
namespace {

// Direct summation of prior * sum_k w_k N(x; mu_k, I), no log space.
std::vector<double> DirectPosterior(double x, double y) {
  const double means[3][2][2] = {{{-4, 1}, {2, 1}}, {{-4, -1}, {2, -1}}, {{-1, 0}, {5, 0}}};
  const double weights[2] = {0.8, 0.2};
  std::vector<double> joint(3, 0.0);
  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    for (int k = 0; k < 2; ++k) {
      const double dx = x - means[c][k][0];
      const double dy = y - means[c][k][1];
      joint[c] += weights[k] * std::exp(-0.5 * (dx * dx + dy * dy)) / (2.0 * std::numbers::pi);
    }
    joint[c] /= 3.0;
    total += joint[c];
  }
  for (double& v : joint) v /= total;
  return joint;
}

Matrix Point(double x, double y) {
  Matrix m(1, 2);
  m << x, y;
  return m;
}

TEST(GenerativeModelTest, CanonicalIsValid) {
  const auto m = GenerativeModel::Canonical();
  EXPECT_NO_THROW(m.Validate());
  EXPECT_EQ(m.num_classes(), 3);
  EXPECT_EQ(m.classes[0][0].mean, Eigen::Vector2d(-4, 1));
  EXPECT_EQ(m.classes[2][1].mean, Eigen::Vector2d(5, 0));
  EXPECT_EQ(m.classes[1][1].tag, DensityTag::kSparse);
}

TEST(GenerativeModelTest, RejectsBadWeights) {
  auto m = GenerativeModel::Canonical();
  m.classes[0][0].weight = 0.7;
  EXPECT_THROW(m.Validate(), ConfigError);
  auto p = GenerativeModel::Canonical();
  p.class_priors = {0.5, 0.5, 0.5};
  EXPECT_THROW(p.Validate(), ConfigError);
}

TEST(SampleTest, CountsAndDensityMix) {
  const auto model = GenerativeModel::Canonical();
  const auto d = Sample(model, 50, 3);
  ASSERT_EQ(d.size(), 150u);
  EXPECT_NO_THROW(d.Validate(3));
  for (int c = 0; c < 3; ++c) {
    int count = 0;
    int dense = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d.labels[i] != c) continue;
      ++count;
      dense += d.density_tags[i] == DensityTag::kDense;
    }
    EXPECT_EQ(count, 50);
    // Binomial(50, 0.8): mean 40, sd about 2.8.
    EXPECT_NEAR(dense, 40, 12);
  }
}

TEST(SampleTest, DegenerateModelIsAllDense) {
  GenerativeModel m;
  m.classes = {{{Eigen::Vector2d(0, 0), 1.0, DensityTag::kDense}},
               {{Eigen::Vector2d(3, 0), 1.0, DensityTag::kDense}}};
  m.class_priors = {0.5, 0.5};
  const auto d = Sample(m, 1, 9);
  ASSERT_EQ(d.size(), 2u);
  for (auto t : d.density_tags) EXPECT_EQ(t, DensityTag::kDense);
}

TEST(SampleTest, Deterministic) {
  const auto model = GenerativeModel::Canonical();
  const auto a = Sample(model, 20, 5);
  const auto b = Sample(model, 20, 5);
  const auto c = Sample(model, 20, 6);
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.density_tags, b.density_tags);
  EXPECT_NE(a.features, c.features);
}

TEST(SampleTest, TagFrequenciesMatchWeights) {
  const auto d = Sample(GenerativeModel::Canonical(), 10000, 17);
  for (int c = 0; c < 3; ++c) {
    double dense = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d.labels[i] == c && d.density_tags[i] == DensityTag::kDense) ++dense;
    }
    const double sparse = 10000 - dense;
    const double chi2 = (dense - 8000) * (dense - 8000) / 8000 + (sparse - 2000) * (sparse - 2000) / 2000;
    EXPECT_LT(chi2, 10.83);  // 1 dof, p = 0.001
  }
}

TEST(SampleTest, ComponentMeansRecovered) {
  const auto model = GenerativeModel::Canonical();
  const auto d = Sample(model, 20000, 4);
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  int n = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.labels[i] == 2 && d.density_tags[i] == DensityTag::kSparse) {
      sum += d.features.row(static_cast<Eigen::Index>(i)).transpose();
      ++n;
    }
  }
  const Eigen::Vector2d mean = sum / n;
  EXPECT_NEAR(mean.x(), 5.0, 0.05);
  EXPECT_NEAR(mean.y(), 0.0, 0.05);
}

TEST(SplitsTest, SizesAndIndependence) {
  SplitSizes sizes{5, 6, 7};
  const auto s = SampleSplits(GenerativeModel::Canonical(), sizes, 1);
  EXPECT_EQ(s.train.size(), 15u);
  EXPECT_EQ(s.validation.size(), 18u);
  EXPECT_EQ(s.test.size(), 21u);
  EXPECT_EQ(s.test.split, Split::kTest);
  EXPECT_NE(s.train.features.row(0), s.validation.features.row(0));
}

TEST(PosteriorTest, MirrorSymmetry) {
  const Matrix p = BayesPosterior(GenerativeModel::Canonical(), Point(-4, 0));
  EXPECT_EQ(p(0, 0), p(0, 1));
}

TEST(PosteriorTest, FarPointIsFinite) {
  for (const auto& x : {Point(0, 1e6), Point(-1e6, 3), Point(1e6, -1e6)}) {
    const Matrix p = BayesPosterior(GenerativeModel::Canonical(), x);
    EXPECT_TRUE(AllFinite(p));
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
  }
}

TEST(PosteriorTest, MatchesDirectSummation) {
  const auto model = GenerativeModel::Canonical();
  for (const auto& [x, y] : std::vector<std::pair<double, double>>{
           {-1, 0}, {0, 0}, {2, 1}, {-4, -1}, {3.3, -0.7}, {5, 2}}) {
    const Matrix p = BayesPosterior(model, Point(x, y));
    const auto expected = DirectPosterior(x, y);
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(p(0, c), expected[c], 1e-12) << x << "," << y;
  }
}

TEST(PosteriorTest, TranslationInvariant) {
  const auto model = GenerativeModel::Canonical();
  auto shifted = model;
  const Eigen::Vector2d shift(3.5, -2.25);
  for (auto& cls : shifted.classes) {
    for (auto& comp : cls) comp.mean += shift;
  }
  const auto d = Sample(model, 30, 8);
  Matrix moved = d.features;
  moved.rowwise() += shift.transpose();
  const Matrix a = BayesPosterior(model, d.features);
  const Matrix b = BayesPosterior(shifted, moved);
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PosteriorTest, PermutationEquivariant) {
  const auto model = GenerativeModel::Canonical();
  auto perm = model;
  perm.classes = {model.classes[2], model.classes[0], model.classes[1]};
  const auto d = Sample(model, 30, 8);
  const Matrix a = BayesPosterior(model, d.features);
  const Matrix b = BayesPosterior(perm, d.features);
  EXPECT_LT((a.col(2) - b.col(0)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((a.col(0) - b.col(1)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((a.col(1) - b.col(2)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BayesReportTest, NearPublishedAccuracy) {
  const auto model = GenerativeModel::Canonical();
  double acc = 0.0;
  double ce = 0.0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto r = BayesReport(model, Sample(model, 5000, seed, Split::kTest));
    acc += r.accuracy / 3;
    ce += r.cross_entropy / 3;
    ASSERT_TRUE(r.dense_accuracy.has_value());
    ASSERT_TRUE(r.sparse_accuracy.has_value());
  }
  EXPECT_NEAR(acc, 0.8198, 0.015);
  EXPECT_NEAR(ce, 0.4444, 0.03);
}

TEST(SerializationTest, JsonRoundTrip) {
  const auto model = GenerativeModel::Canonical();
  const auto back = GenerativeModelFromJson(ToJson(model));
  ASSERT_EQ(back.num_classes(), 3);
  for (int c = 0; c < 3; ++c) {
    for (std::size_t k = 0; k < 2; ++k) {
      EXPECT_EQ(back.classes[c][k].mean, model.classes[c][k].mean);
      EXPECT_EQ(back.classes[c][k].weight, model.classes[c][k].weight);
      EXPECT_EQ(back.classes[c][k].tag, model.classes[c][k].tag);
    }
  }
  EXPECT_EQ(back.class_priors, model.class_priors);
  EXPECT_THROW(GenerativeModelFromJson(nlohmann::json::parse(R"({"classes": []})")), ConfigError);
}

TEST(SerializationTest, CsvRoundTrip) {
  const auto splits = SampleSplits(GenerativeModel::Canonical(), {3, 2, 4}, 2);
  std::stringstream buf;
  const std::vector<LabeledDataset> parts = {splits.train, splits.validation, splits.test};
  WriteCsv(buf, parts);
  const std::string text = buf.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "x1,x2,label,density_tag,split");
  std::stringstream in1(text);
  const auto val = ReadCsv(in1, "validation");
  EXPECT_EQ(val.labels, splits.validation.labels);
  EXPECT_EQ(val.features, splits.validation.features);
  EXPECT_EQ(val.density_tags, splits.validation.density_tags);
  std::stringstream in2(text);
  EXPECT_EQ(ReadCsv(in2).size(), 27u);
}

}  // namespace
}  // namespace ilsmooth::synth
