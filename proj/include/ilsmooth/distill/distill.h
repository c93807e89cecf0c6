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

#ifndef ILSMOOTH_DISTILL_DISTILL_H_
#define ILSMOOTH_DISTILL_DISTILL_H_

#include <cstdint>

#include "ilsmooth/calib/metrics.h"
#include "ilsmooth/nn/network.h"
#include "ilsmooth/nn/train.h"
#include "ilsmooth/synth/generative_model.h"

namespace ilsmooth::distill {

// Student objective:
//   kd_weight * CE(student, teacher soft probs) + (1 - kd_weight) * CE(student, one-hot)
struct DistillConfig {
  double kd_weight = 1.0;
  double teacher_temperature = 1.0;
  double student_temperature = 1.0;
  // Multiply the soft term by teacher_temperature^2 (Hinton-style). Off by
  // default; irrelevant at T = 1.
  bool scale_kd_by_t_squared = false;

  double hard_weight() const { return 1.0 - kd_weight; }
  void Validate() const;

  // Pure teacher matching at T = 1 for self-distillation on synthetic data.
  static DistillConfig SelfDistillation();
  // 0.9 / 0.1 weighting, teacher T = 20, student T = 1.
  static DistillConfig KnowledgeDistillation();
};

// Cross-entropy is linear in the target, so the composite objective is the
// soft cross-entropy against the mixture target built here. When the T^2
// factor is on, the mixture is renormalized and `loss_scale` (if given)
// receives the normalizer so that loss_scale * CE equals the weighted sum.
nn::TargetMatrix CompositeTargets(const Matrix& teacher_probs,
                                  const Labels& labels,
                                  const DistillConfig& cfg,
                                  double* loss_scale = nullptr);

// kd_weight * CE(p, teacher) + hard_weight * CE(p, one-hot), evaluated as two
// separate terms.
double CompositeLoss(const Matrix& student_probs, const Matrix& teacher_probs,
                     const Labels& labels, const DistillConfig& cfg);

struct DistillResult {
  nn::NetworkModel student;
  nn::TrainLog log;
  calib::CalibrationReport report;  // on the test split at T = 1
};

// Trains a student from `student_init` against teacher probabilities given
// for the training and validation instances. Epoch selection uses the
// composite objective on validation. Throws NumericError on divergence.
DistillResult Distill(const Matrix& teacher_train_probs,
                      const Matrix& teacher_validation_probs,
                      const nn::NetworkModel& student_init,
                      const synth::DataSplits& data, const DistillConfig& cfg,
                      const nn::TrainConfig& train_cfg,
                      const calib::BinningSpec& bins = {});

// Network teacher: its probabilities are taken at cfg.teacher_temperature.
DistillResult Distill(const nn::NetworkModel& teacher,
                      const nn::ArchitectureSpec& student_arch,
                      std::uint64_t student_seed, const synth::DataSplits& data,
                      const DistillConfig& cfg, const nn::TrainConfig& train_cfg,
                      const calib::BinningSpec& bins = {});

}  // namespace ilsmooth::distill

#endif  // ILSMOOTH_DISTILL_DISTILL_H_
