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

#include "ilsmooth/nn/train.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace ilsmooth::nn {
namespace {

// Absolute floor of the relative-error denominator in GradientCheck; below it
// both gradients are treated as zero.
constexpr double kGradientFloor = 1e-7;

struct OptimizerState {
  Gradients first;
  Gradients second;
  long step = 0;
};

void ApplyUpdate(const TrainConfig& cfg, double lr, Gradients& g,
                 OptimizerState& state, NetworkModel& model) {
  ++state.step;
  const std::size_t layers = model.NumLayers();
  if (cfg.optimizer == OptimizerKind::kAdam) {
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, state.step);
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, state.step);
    auto adam = [&](auto& param, const auto& grad, auto& m, auto& v) {
      m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * grad;
      v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * grad.cwiseProduct(grad);
      param.array() -= lr * (m.array() / bc1) /
                       ((v.array() / bc2).sqrt() + cfg.adam_epsilon);
    };
    for (std::size_t l = 0; l < layers; ++l) {
      adam(model.weights[l], g.weights[l], state.first.weights[l],
           state.second.weights[l]);
      adam(model.biases[l], g.biases[l], state.first.biases[l],
           state.second.biases[l]);
    }
  } else {
    for (std::size_t l = 0; l < layers; ++l) {
      state.first.weights[l] = cfg.momentum * state.first.weights[l] + g.weights[l];
      state.first.biases[l] = cfg.momentum * state.first.biases[l] + g.biases[l];
      model.weights[l] -= lr * state.first.weights[l];
      model.biases[l] -= lr * state.first.biases[l];
    }
  }
}

// Coupled L2 weight decay (weights only), then the loss scale.
void Regularize(const TrainConfig& cfg, const NetworkModel& model,
                Gradients& g) {
  for (std::size_t l = 0; l < model.NumLayers(); ++l) {
    if (cfg.weight_decay > 0.0) g.weights[l] += cfg.weight_decay * model.weights[l];
    if (cfg.loss_scale != 1.0) {
      g.weights[l] *= cfg.loss_scale;
      g.biases[l] *= cfg.loss_scale;
    }
  }
}

double LearningRateAt(const TrainConfig& cfg, int epoch) {
  double lr = cfg.learning_rate;
  for (int m : cfg.lr_milestones) {
    if (epoch >= m) lr *= cfg.lr_gamma;
  }
  return lr;
}

double HardLoss(const Matrix& probs, const Labels& labels) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    total -= std::log(std::max(probs(i, labels[i]), kLogFloor));
  }
  return total / static_cast<double>(probs.rows());
}

void CheckTargetsShape(const Matrix& features, const TargetMatrix& targets,
                       int num_classes, const char* what) {
  if (targets.rows() != features.rows()) {
    throw ShapeError(std::string(what) + " targets have " +
                     std::to_string(targets.rows()) + " rows for " +
                     std::to_string(features.rows()) + " instances");
  }
  if (targets.cols() != num_classes) {
    throw ShapeError(std::string(what) + " targets have wrong class count");
  }
}

}  // namespace

std::string ToString(OptimizerKind kind) {
  return kind == OptimizerKind::kAdam ? "adam" : "sgd_momentum";
}

OptimizerKind ParseOptimizerKind(const std::string& s) {
  if (s == "adam") return OptimizerKind::kAdam;
  if (s == "sgd_momentum" || s == "sgd") return OptimizerKind::kSgdMomentum;
  throw ConfigError("unknown optimizer '" + s + "'");
}

void TrainConfig::Validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (max_epochs < 0) throw ConfigError("max_epochs must be >= 0");
  if (early_stop_patience < 1) {
    throw ConfigError("early_stop_patience must be >= 1");
  }
  if (batch_size < 0) throw ConfigError("batch_size must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ConfigError("momentum must lie in [0, 1)");
  }
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
  if (!(loss_scale > 0.0)) throw ConfigError("loss_scale must be > 0");
}

Gradients Gradients::ZerosLike(const NetworkModel& model) {
  Gradients g;
  for (std::size_t l = 0; l < model.NumLayers(); ++l) {
    g.weights.push_back(Matrix::Zero(model.weights[l].rows(),
                                     model.weights[l].cols()));
    g.biases.push_back(RowVector::Zero(model.biases[l].size()));
  }
  return g;
}

double LossAndGradients(const NetworkModel& model, const Matrix& features,
                        const Matrix& targets, double temperature,
                        Gradients* gradients) {
  const std::size_t layers = model.NumLayers();
  const auto n = static_cast<double>(features.rows());
  // activations[l] is the input to layer l.
  std::vector<Matrix> activations;
  activations.reserve(layers);
  activations.push_back(features);
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    Matrix a = activations.back() * model.weights[l];
    a.rowwise() += model.biases[l];
    activations.push_back(a.cwiseMax(0.0));
  }
  Matrix z = activations.back() * model.weights[layers - 1];
  z.rowwise() += model.biases[layers - 1];

  const Matrix log_p = LogSoftmax(z, temperature);
  const double loss = -(targets.array() * log_p.array()).sum() / n;
  if (gradients == nullptr) return loss;

  // d/dz of -sum_j y_j log softmax(z/T)_j = (p * sum(y) - y) / T.
  Matrix delta = log_p.array().exp().matrix();
  delta.array().colwise() *= targets.rowwise().sum().array();
  delta -= targets;
  delta /= temperature * n;

  gradients->weights.resize(layers);
  gradients->biases.resize(layers);
  for (std::size_t l = layers; l-- > 0;) {
    gradients->weights[l].noalias() = activations[l].transpose() * delta;
    gradients->biases[l] = delta.colwise().sum();
    if (l > 0) {
      Matrix back = delta * model.weights[l].transpose();
      delta = (activations[l].array() > 0.0).select(back, 0.0);
    }
  }
  return loss;
}

TrainResult Train(const NetworkModel& initial, const Matrix& train_features,
                  const TargetMatrix& train_targets,
                  const ValidationSet& validation, const TrainConfig& cfg) {
  CheckTargetsShape(train_features, train_targets, initial.arch.num_classes,
                    "training");
  TargetProvider fixed = [&train_targets](const NetworkModel&, int) {
    return train_targets;
  };
  return Train(initial, train_features, fixed, validation, cfg);
}

TrainResult Train(const NetworkModel& initial, const Matrix& train_features,
                  const TargetProvider& train_targets,
                  const ValidationSet& validation, const TrainConfig& cfg) {
  cfg.Validate();
  initial.Validate();
  if (train_features.rows() == 0 || validation.features.rows() == 0) {
    throw ShapeError("training and validation sets must be non-empty");
  }
  if (train_features.cols() != initial.arch.input_dim ||
      validation.features.cols() != initial.arch.input_dim) {
    throw ShapeError("feature width does not match network input_dim");
  }
  CheckTargetsShape(validation.features, validation.targets,
                    initial.arch.num_classes, "validation");
  if (validation.labels != nullptr &&
      validation.labels->size() != static_cast<std::size_t>(validation.features.rows())) {
    throw ShapeError("validation labels length mismatch");
  }

  TrainResult result{initial, {}};
  NetworkModel model = initial;
  const Eigen::Index n = train_features.rows();
  const Eigen::Index batch =
      (cfg.batch_size == 0 || cfg.batch_size >= n) ? n : cfg.batch_size;

  auto validate = [&](const NetworkModel& m, EpochRecord& rec) {
    const Matrix probs = Forward(m, validation.features, cfg.temperature);
    rec.val_loss = SoftCrossEntropy(probs, validation.targets);
    if (validation.labels != nullptr) {
      rec.val_hard_loss = HardLoss(probs, *validation.labels);
    }
  };
  auto check_finite = [](const EpochRecord& rec) {
    if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.val_loss)) {
      throw NumericError("training diverged at epoch " +
                         std::to_string(rec.epoch) + ": train loss " +
                         std::to_string(rec.train_loss) + ", validation loss " +
                         std::to_string(rec.val_loss));
    }
  };

  {
    EpochRecord rec;
    const TargetMatrix t0 = train_targets(model, 0);
    CheckTargetsShape(train_features, t0, model.arch.num_classes, "training");
    rec.train_loss = LossAndGradients(model, train_features, t0.values(),
                                      cfg.temperature, nullptr);
    validate(model, rec);
    check_finite(rec);
    result.log.epochs.push_back(rec);
    result.log.best_val_loss = rec.val_loss;
  }

  OptimizerState state{Gradients::ZerosLike(model), Gradients::ZerosLike(model),
                       0};
  Gradients grad = Gradients::ZerosLike(model);
  std::mt19937_64 shuffle_rng(MixSeed(initial.rng_seed, 0x5348));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  int stale = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const TargetMatrix targets = train_targets(model, epoch);
    CheckTargetsShape(train_features, targets, model.arch.num_classes,
                      "training");
    const double lr = LearningRateAt(cfg, epoch);
    EpochRecord rec;
    rec.epoch = epoch;

    if (batch == n) {
      rec.train_loss = LossAndGradients(model, train_features, targets.values(),
                                        cfg.temperature, &grad);
      Regularize(cfg, model, grad);
      ApplyUpdate(cfg, lr, grad, state, model);
    } else {
      std::shuffle(order.begin(), order.end(), shuffle_rng);
      double weighted = 0.0;
      for (Eigen::Index start = 0; start < n; start += batch) {
        const Eigen::Index len = std::min(batch, n - start);
        std::span<const int> idx(order.data() + start, len);
        const Matrix xb = SelectRows(train_features, idx);
        const Matrix yb = ilsmooth::SelectRows(targets.values(), idx);
        weighted += LossAndGradients(model, xb, yb, cfg.temperature, &grad) *
                    static_cast<double>(len);
        Regularize(cfg, model, grad);
        ApplyUpdate(cfg, lr, grad, state, model);
      }
      rec.train_loss = weighted / static_cast<double>(n);
    }

    validate(model, rec);
    check_finite(rec);
    result.log.epochs.push_back(rec);

    if (rec.val_loss < result.log.best_val_loss) {
      result.log.best_val_loss = rec.val_loss;
      result.log.best_epoch = epoch;
      result.model = model;
      stale = 0;
    } else if (++stale >= cfg.early_stop_patience) {
      result.log.early_stopped = true;
      break;
    }
  }
  return result;
}

double GradientCheck(const NetworkModel& model, const Matrix& features,
                     const TargetMatrix& targets, double epsilon,
                     double temperature) {
  model.Validate();
  if (model.arch.NumParameters() >= 10000) {
    throw ConfigError("gradient check requires fewer than 10k parameters");
  }
  if (!(epsilon >= 1e-7 && epsilon <= 1e-4)) {
    throw ConfigError("epsilon must lie in [1e-7, 1e-4]");
  }
  if (targets.rows() != features.rows() ||
      targets.cols() != model.arch.num_classes) {
    throw ShapeError("target shape does not match features/network");
  }

  Gradients analytic;
  LossAndGradients(model, features, targets.values(), temperature, &analytic);

  NetworkModel probe = model;
  double worst = 0.0;
  auto check = [&](double& param, double grad) {
    const double saved = param;
    param = saved + epsilon;
    const double up = LossAndGradients(probe, features, targets.values(),
                                       temperature, nullptr);
    param = saved - epsilon;
    const double down = LossAndGradients(probe, features, targets.values(),
                                         temperature, nullptr);
    param = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double denom =
        std::max({std::abs(grad), std::abs(numeric), kGradientFloor});
    worst = std::max(worst, std::abs(grad - numeric) / denom);
  };
  for (std::size_t l = 0; l < probe.NumLayers(); ++l) {
    for (Eigen::Index i = 0; i < probe.weights[l].rows(); ++i) {
      for (Eigen::Index j = 0; j < probe.weights[l].cols(); ++j) {
        check(probe.weights[l](i, j), analytic.weights[l](i, j));
      }
    }
    for (Eigen::Index j = 0; j < probe.biases[l].size(); ++j) {
      check(probe.biases[l](j), analytic.biases[l](j));
    }
  }
  return worst;
}

}  // namespace ilsmooth::nn
