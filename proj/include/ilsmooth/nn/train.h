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

#ifndef ILSMOOTH_NN_TRAIN_H_
#define ILSMOOTH_NN_TRAIN_H_

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ilsmooth/common.h"
#include "ilsmooth/nn/loss.h"
#include "ilsmooth/nn/network.h"

namespace ilsmooth::nn {

enum class OptimizerKind { kAdam, kSgdMomentum };

std::string ToString(OptimizerKind kind);
OptimizerKind ParseOptimizerKind(const std::string& s);

struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double learning_rate = 1e-2;
  int max_epochs = 500;
  int early_stop_patience = 10;
  // 0 (or >= N) trains full-batch.
  int batch_size = 0;
  double momentum = 0.9;  // sgd_momentum only
  double weight_decay = 0.0;
  // Logits are divided by this before the softmax during training.
  double temperature = 1.0;
  // Multiplies the loss gradient; used by distillation to apply a T^2 factor.
  double loss_scale = 1.0;
  // Step schedule: the learning rate is multiplied by lr_gamma when the
  // epoch counter reaches each milestone.
  std::vector<int> lr_milestones;
  double lr_gamma = 0.1;
  // Adam moments.
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void Validate() const;
};

// Same shapes as NetworkModel's parameters.
struct Gradients {
  std::vector<Matrix> weights;
  std::vector<RowVector> biases;

  static Gradients ZerosLike(const NetworkModel& model);
};

// Mean soft cross-entropy of softmax(logits / temperature) against `targets`
// computed through log-softmax, together with its exact gradient.
double LossAndGradients(const NetworkModel& model, const Matrix& features,
                        const Matrix& targets, double temperature,
                        Gradients* gradients);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  std::optional<double> val_hard_loss;
};

struct TrainLog {
  // Epoch 0 holds the losses of the initial parameters.
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_val_loss = 0.0;
  bool early_stopped = false;
};

struct TrainResult {
  NetworkModel model;
  TrainLog log;
};

// Produces the training targets for an epoch from the current parameters.
// Called once at the start of every epoch (epoch numbers start at 1) and once
// with epoch 0 for the initial loss.
using TargetProvider =
    std::function<TargetMatrix(const NetworkModel& current, int epoch)>;

struct ValidationSet {
  const Matrix& features;
  const TargetMatrix& targets;
  // When set, hard-label validation loss is logged alongside.
  const Labels* labels = nullptr;
};

// Trains from `initial` and returns the parameter snapshot with the lowest
// validation soft cross-entropy (against `validation.targets`). Stops after
// `early_stop_patience` epochs without improvement or at `max_epochs`.
// Throws NumericError if a loss becomes non-finite.
TrainResult Train(const NetworkModel& initial, const Matrix& train_features,
                  const TargetMatrix& train_targets,
                  const ValidationSet& validation, const TrainConfig& cfg);

TrainResult Train(const NetworkModel& initial, const Matrix& train_features,
                  const TargetProvider& train_targets,
                  const ValidationSet& validation, const TrainConfig& cfg);

// Largest relative error between the analytic gradient and central finite
// differences over every parameter. Requires fewer than 10k parameters and
// epsilon in [1e-7, 1e-4].
double GradientCheck(const NetworkModel& model, const Matrix& features,
                     const TargetMatrix& targets, double epsilon,
                     double temperature = 1.0);

}  // namespace ilsmooth::nn

#endif  // ILSMOOTH_NN_TRAIN_H_
