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

#include "ilsmooth/smoothing/targets.h"

namespace ilsmooth::distill {

void DistillConfig::Validate() const {
  if (!(kd_weight >= 0.0 && kd_weight <= 1.0)) {
    throw ConfigError("kd_weight must lie in [0, 1]");
  }
  if (!(teacher_temperature > 0.0) || !(student_temperature > 0.0)) {
    throw ConfigError("temperatures must be > 0");
  }
}

DistillConfig DistillConfig::SelfDistillation() { return {1.0, 1.0, 1.0, false}; }

DistillConfig DistillConfig::KnowledgeDistillation() {
  return {0.9, 20.0, 1.0, false};
}

nn::TargetMatrix CompositeTargets(const Matrix& teacher_probs,
                                  const Labels& labels,
                                  const DistillConfig& cfg, double* loss_scale) {
  cfg.Validate();
  if (static_cast<std::size_t>(teacher_probs.rows()) != labels.size()) {
    throw ShapeError("teacher rows do not align with labels");
  }
  const auto k = static_cast<int>(teacher_probs.cols());
  const Matrix hard = smoothing::HardTargets(labels, k).values();
  double soft_w = cfg.kd_weight;
  if (cfg.scale_kd_by_t_squared) {
    soft_w *= cfg.teacher_temperature * cfg.teacher_temperature;
  }
  const double norm = soft_w + cfg.hard_weight();
  if (loss_scale != nullptr) *loss_scale = norm;
  if (cfg.kd_weight == 0.0) return nn::TargetMatrix(hard);
  Matrix mix = (soft_w / norm) * teacher_probs + (cfg.hard_weight() / norm) * hard;
  return nn::TargetMatrix(std::move(mix));
}

double CompositeLoss(const Matrix& student_probs, const Matrix& teacher_probs,
                     const Labels& labels, const DistillConfig& cfg) {
  cfg.Validate();
  const auto k = static_cast<int>(teacher_probs.cols());
  const double soft =
      nn::SoftCrossEntropy(student_probs, nn::TargetMatrix(teacher_probs));
  const double hard =
      nn::SoftCrossEntropy(student_probs, smoothing::HardTargets(labels, k));
  double soft_w = cfg.kd_weight;
  if (cfg.scale_kd_by_t_squared) {
    soft_w *= cfg.teacher_temperature * cfg.teacher_temperature;
  }
  return soft_w * soft + cfg.hard_weight() * hard;
}

DistillResult Distill(const Matrix& teacher_train_probs,
                      const Matrix& teacher_validation_probs,
                      const nn::NetworkModel& student_init,
                      const synth::DataSplits& data, const DistillConfig& cfg,
                      const nn::TrainConfig& train_cfg,
                      const calib::BinningSpec& bins) {
  cfg.Validate();
  if (teacher_train_probs.cols() != student_init.arch.num_classes) {
    throw ShapeError("teacher and student class counts differ");
  }
  double scale = 1.0;
  const nn::TargetMatrix train_targets =
      CompositeTargets(teacher_train_probs, data.train.labels, cfg, &scale);
  const nn::TargetMatrix val_targets =
      CompositeTargets(teacher_validation_probs, data.validation.labels, cfg);

  nn::TrainConfig tc = train_cfg;
  tc.temperature = cfg.student_temperature;
  tc.loss_scale = train_cfg.loss_scale * scale;
  nn::TrainResult trained =
      nn::Train(student_init, data.train.features, train_targets,
                {data.validation.features, val_targets, &data.validation.labels},
                tc);

  DistillResult out{trained.model, std::move(trained.log), {}};
  out.report = calib::Evaluate(nn::Forward(out.student, data.test.features),
                               data.test.labels, bins, &data.test.density_tags);
  return out;
}

DistillResult Distill(const nn::NetworkModel& teacher,
                      const nn::ArchitectureSpec& student_arch,
                      std::uint64_t student_seed, const synth::DataSplits& data,
                      const DistillConfig& cfg, const nn::TrainConfig& train_cfg,
                      const calib::BinningSpec& bins) {
  if (teacher.arch.input_dim != student_arch.input_dim) {
    throw ShapeError("teacher and student input dimensions differ");
  }
  const Matrix train_probs =
      nn::Forward(teacher, data.train.features, cfg.teacher_temperature);
  const Matrix val_probs =
      nn::Forward(teacher, data.validation.features, cfg.teacher_temperature);
  return Distill(train_probs, val_probs,
                 nn::NetworkModel::Initialize(student_arch, student_seed), data,
                 cfg, train_cfg, bins);
}

}  // namespace ilsmooth::distill
