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

#include "ilsmooth/distill/distill.h"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ilsmooth/nn/loss.h"
#include "ilsmooth/smoothing/targets.h"

namespace ilsmooth::distill {
namespace {

synth::DataSplits SmallSplits(std::uint64_t seed) {
  return synth::SampleSplits(synth::GenerativeModel::Canonical(), {20, 20, 200}, seed);
}

nn::ArchitectureSpec SmallArch() {
  nn::ArchitectureSpec a;
  a.hidden_layers = {16, 16};
  return a;
}

nn::TrainConfig ShortTraining() {
  nn::TrainConfig cfg;
  cfg.max_epochs = 40;
  return cfg;
}

TEST(DistillConfigTest, PresetsAndValidation) {
  const auto sd = DistillConfig::SelfDistillation();
  EXPECT_EQ(sd.kd_weight, 1.0);
  EXPECT_EQ(sd.teacher_temperature, 1.0);
  const auto kd = DistillConfig::KnowledgeDistillation();
  EXPECT_EQ(kd.kd_weight, 0.9);
  EXPECT_NEAR(kd.hard_weight(), 0.1, 1e-15);
  EXPECT_EQ(kd.teacher_temperature, 20.0);
  DistillConfig bad;
  bad.kd_weight = 1.5;
  EXPECT_THROW(bad.Validate(), ConfigError);
  bad = DistillConfig{};
  bad.teacher_temperature = 0.0;
  EXPECT_THROW(bad.Validate(), ConfigError);
}

TEST(CompositeTest, LossIsConvexCombinationOfParts) {
  std::mt19937_64 rng(4);
  std::gamma_distribution<double> g(0.8, 1.0);
  auto random_probs = [&](int n) {
    Matrix m(n, 3);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < 3; ++j) m(i, j) = g(rng) + 1e-6;
      m.row(i) /= m.row(i).sum();
    }
    return m;
  };
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix student = random_probs(12);
    const Matrix teacher = random_probs(12);
    Labels y(12);
    for (auto& v : y) v = static_cast<int>(rng() % 3);
    DistillConfig cfg;
    cfg.kd_weight = (trial % 11) / 10.0;
    const double soft = nn::SoftCrossEntropy(student, nn::TargetMatrix(teacher));
    const double hard = nn::SoftCrossEntropy(student, smoothing::HardTargets(y, 3));
    const double expected = cfg.kd_weight * soft + cfg.hard_weight() * hard;
    EXPECT_NEAR(CompositeLoss(student, teacher, y, cfg), expected, 1e-12);
    // The mixture target gives the same value through one cross-entropy.
    EXPECT_NEAR(nn::SoftCrossEntropy(student, CompositeTargets(teacher, y, cfg)), expected, 1e-12);
  }
}

TEST(CompositeTest, TSquaredScaling) {
  Matrix teacher(1, 3);
  teacher << 0.6, 0.3, 0.1;
  DistillConfig cfg;
  cfg.kd_weight = 0.9;
  cfg.teacher_temperature = 4.0;
  cfg.scale_kd_by_t_squared = true;
  double scale = 0.0;
  const auto t = CompositeTargets(teacher, {1}, cfg, &scale);
  const double soft_w = 0.9 * 16.0;
  EXPECT_NEAR(scale, soft_w + 0.1, 1e-12);
  EXPECT_NEAR(t(0, 1), (soft_w * 0.3 + 0.1) / (soft_w + 0.1), 1e-12);
}

TEST(DistillTest, ZeroKdWeightEqualsHardTraining) {
  const auto data = SmallSplits(1);
  const auto init = nn::NetworkModel::Initialize(SmallArch(), 5);
  const Matrix teacher_train = nn::Forward(nn::NetworkModel::Initialize(SmallArch(), 9), data.train.features);
  const Matrix teacher_val = nn::Forward(nn::NetworkModel::Initialize(SmallArch(), 9), data.validation.features);
  DistillConfig cfg;
  cfg.kd_weight = 0.0;
  const auto distilled = Distill(teacher_train, teacher_val, init, data, cfg, ShortTraining());

  const auto train_t = smoothing::HardTargets(data.train.labels, 3);
  const auto val_t = smoothing::HardTargets(data.validation.labels, 3);
  const auto plain = nn::Train(init, data.train.features, train_t,
                               {data.validation.features, val_t}, ShortTraining());
  EXPECT_TRUE(distilled.student == plain.model);
}

TEST(DistillTest, Deterministic) {
  const auto data = SmallSplits(2);
  const auto teacher = nn::NetworkModel::Initialize(SmallArch(), 3);
  const auto cfg = DistillConfig::SelfDistillation();
  const auto a = Distill(teacher, SmallArch(), 21, data, cfg, ShortTraining());
  const auto b = Distill(teacher, SmallArch(), 21, data, cfg, ShortTraining());
  EXPECT_TRUE(a.student == b.student);
  EXPECT_EQ(a.report.accuracy, b.report.accuracy);
  EXPECT_EQ(a.report.num_instances, 600);
}

// Matching the teacher exactly attains the teacher entropy, the lower bound
// of the pure soft objective; training never goes below it.
TEST(DistillTest, TeacherEntropyLowerBound) {
  const auto data = SmallSplits(3);
  auto teacher = nn::NetworkModel::Initialize(SmallArch(), 8);
  for (auto& w : teacher.weights) w *= 3.0;
  const Matrix tp = nn::Forward(teacher, data.train.features);
  const double entropy = nn::MeanEntropy(nn::TargetMatrix(tp));
  const auto cfg = DistillConfig::SelfDistillation();
  EXPECT_NEAR(CompositeLoss(tp, tp, data.train.labels, cfg), entropy, 1e-9);

  const Matrix tv = nn::Forward(teacher, data.validation.features);
  const auto from_teacher = Distill(tp, tv, teacher, data, cfg, ShortTraining());
  const Matrix sp = nn::Forward(from_teacher.student, data.train.features);
  EXPECT_GE(CompositeLoss(sp, tp, data.train.labels, cfg), entropy - 1e-9);

  const auto fresh = Distill(tp, tv, nn::NetworkModel::Initialize(SmallArch(), 30), data, cfg,
                             ShortTraining());
  const Matrix fp = nn::Forward(fresh.student, data.train.features);
  EXPECT_GE(CompositeLoss(fp, tp, data.train.labels, cfg), entropy - 1e-9);
}

TEST(DistillTest, Mismatch) {
  const auto data = SmallSplits(4);
  nn::ArchitectureSpec wide = SmallArch();
  wide.input_dim = 3;
  const auto teacher = nn::NetworkModel::Initialize(wide, 1);
  EXPECT_THROW(Distill(teacher, SmallArch(), 1, data, DistillConfig{}, ShortTraining()), ShapeError);
}

}  // namespace
}  // namespace ilsmooth::distill
