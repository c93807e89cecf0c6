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
#include <limits>
#include <random>

#include <spdlog/spdlog.h>

#include "ilsmooth/nn/network.h"

namespace ilsmooth::smoothing {
namespace {

constexpr double kSaturation = 1.0 - 1e-9;
constexpr double kDistributionTolerance = 1e-9;

void CheckLabels(const Labels& labels, int num_classes) {
  if (num_classes < 2) throw ConfigError("num_classes must be >= 2");
  for (int y : labels) {
    if (y < 0 || y >= num_classes) {
      throw ShapeError("label " + std::to_string(y) + " out of range");
    }
  }
}

void CheckTeacher(const Labels& labels, int num_classes,
                  const TeacherPredictions& teacher) {
  if (static_cast<std::size_t>(teacher.probs.rows()) != labels.size()) {
    throw ShapeError("teacher rows do not align with labels");
  }
  if (teacher.probs.cols() != num_classes) {
    throw ShapeError("teacher class count differs from num_classes");
  }
}

}  // namespace

std::string ToString(Strategy s) {
  switch (s) {
    case Strategy::kNone: return "none";
    case Strategy::kLs: return "ls";
    case Strategy::kLsFixed: return "ls_fixed";
    case Strategy::kIls1: return "ils1";
    case Strategy::kIls2: return "ils2";
    case Strategy::kIls: return "ils";
    case Strategy::kCls: return "cls";
    case Strategy::kBsSoft: return "bs_soft";
    case Strategy::kBeta: return "beta";
  }
  return "none";
}

Strategy ParseStrategy(const std::string& s) {
  for (Strategy st : {Strategy::kNone, Strategy::kLs, Strategy::kLsFixed,
                      Strategy::kIls1, Strategy::kIls2, Strategy::kIls,
                      Strategy::kCls, Strategy::kBsSoft, Strategy::kBeta}) {
    if (ToString(st) == s) return st;
  }
  throw ConfigError("unknown smoothing strategy '" + s + "'");
}

SmoothingFactor::SmoothingFactor(double epsilon) : epsilon_(epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 0.5)) {
    throw ConfigError("smoothing factor must lie in [0, 0.5), got " +
                      std::to_string(epsilon));
  }
}

std::string ToString(CurveFamily f) {
  return f == CurveFamily::kQuadratic ? "quadratic" : "sinusoidal";
}

CurveFamily ParseCurveFamily(const std::string& s) {
  if (s == "quadratic") return CurveFamily::kQuadratic;
  if (s == "sinusoidal") return CurveFamily::kSinusoidal;
  throw ConfigError("unknown curve family '" + s + "'");
}

void CurveParams::Validate() const {
  if (!(cap > 0.0 && cap < 0.5)) throw ConfigError("cap must lie in (0, 0.5)");
  if (!(p1 >= 0.0 && p1 <= 1.0)) throw ConfigError("p1 must lie in [0, 1]");
  if (!std::isfinite(p2)) throw ConfigError("p2 must be finite");
}

void TeacherPredictions::Validate() const {
  if (!(temperature > 0.0)) throw ConfigError("teacher temperature must be > 0");
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    if ((probs.row(i).array() < 0.0).any() ||
        std::abs(probs.row(i).sum() - 1.0) > kDistributionTolerance) {
      throw ConfigError("teacher row " + std::to_string(i) +
                        " is not a probability vector");
    }
  }
}

TeacherPredictions TeacherPredictions::FromLogits(const Matrix& logits,
                                                  double temperature) {
  if (!(temperature > 0.0)) throw ConfigError("teacher temperature must be > 0");
  return {Softmax(logits, temperature), temperature};
}

TargetMatrix HardTargets(const Labels& labels, int num_classes) {
  CheckLabels(labels, num_classes);
  Matrix y = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) y(i, labels[i]) = 1.0;
  return TargetMatrix(std::move(y));
}

TargetMatrix InstanceLs(const Labels& labels, int num_classes,
                        std::span<const double> epsilons) {
  CheckLabels(labels, num_classes);
  if (epsilons.size() != labels.size()) {
    throw ShapeError("one epsilon per instance required");
  }
  Matrix y(static_cast<Eigen::Index>(labels.size()), num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double eps = SmoothingFactor(epsilons[i]).value();
    y.row(i).setConstant(eps / num_classes);
    y(i, labels[i]) = 1.0 - eps + eps / num_classes;
  }
  return TargetMatrix(std::move(y));
}

TargetMatrix StandardLs(const Labels& labels, int num_classes,
                        SmoothingFactor epsilon) {
  const std::vector<double> eps(labels.size(), epsilon.value());
  return InstanceLs(labels, num_classes, eps);
}

double Ils1Epsilon(double p_true, const CurveParams& params) {
  params.Validate();
  if (!(p_true >= 0.0 && p_true <= 1.0)) {
    throw ConfigError("true-class probability must lie in [0, 1]");
  }
  const double d = p_true - params.p1;
  const double raw = params.family == CurveFamily::kQuadratic
                         ? params.p2 * d * d
                         : 0.1 * (std::sin(params.p2 * d) + 1.0);
  return std::clamp(raw, 0.0, params.cap);
}

std::vector<double> Ils1Epsilons(const Labels& labels,
                                 const TeacherPredictions& teacher,
                                 const CurveParams& params) {
  if (static_cast<std::size_t>(teacher.probs.rows()) != labels.size()) {
    throw ShapeError("teacher rows do not align with labels");
  }
  std::vector<double> eps(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= teacher.probs.cols()) {
      throw ShapeError("label out of range");
    }
    eps[i] = Ils1Epsilon(std::clamp(teacher.probs(i, labels[i]), 0.0, 1.0), params);
  }
  return eps;
}

TargetMatrix Ils1Targets(const Labels& labels, int num_classes,
                         const TeacherPredictions& teacher,
                         const CurveParams& params) {
  CheckTeacher(labels, num_classes, teacher);
  return InstanceLs(labels, num_classes, Ils1Epsilons(labels, teacher, params));
}

TargetMatrix Ils2Targets(const Labels& labels, int num_classes,
                         const TeacherPredictions& teacher,
                         std::span<const double> epsilons, int* saturated) {
  CheckLabels(labels, num_classes);
  CheckTeacher(labels, num_classes, teacher);
  if (epsilons.size() != labels.size()) {
    throw ShapeError("one epsilon per instance required");
  }
  int n_saturated = 0;
  Matrix y(static_cast<Eigen::Index>(labels.size()), num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double eps = SmoothingFactor(epsilons[i]).value();
    const int t = labels[i];
    const double p_t = teacher.probs(i, t);
    if (p_t >= kSaturation) {
      ++n_saturated;
      y.row(i).setConstant(eps / (num_classes - 1));
    } else {
      const double scale = eps / (1.0 - p_t);
      for (int j = 0; j < num_classes; ++j) {
        y(i, j) = scale * std::max(teacher.probs(i, j), 0.0);
      }
    }
    y(i, t) = 1.0 - eps;
  }
  if (n_saturated > 0) {
    spdlog::debug("ILS2: {} of {} teacher rows saturated; wrong-class mass "
                  "spread uniformly",
                  n_saturated, labels.size());
  }
  if (saturated != nullptr) *saturated = n_saturated;
  return TargetMatrix(std::move(y));
}

TargetMatrix Ils2Targets(const Labels& labels, int num_classes,
                         const TeacherPredictions& teacher,
                         SmoothingFactor epsilon, int* saturated) {
  const std::vector<double> eps(labels.size(), epsilon.value());
  return Ils2Targets(labels, num_classes, teacher, eps, saturated);
}

TargetMatrix IlsTargets(const Labels& labels, int num_classes,
                        const TeacherPredictions& teacher,
                        const CurveParams& params, int* saturated) {
  CheckTeacher(labels, num_classes, teacher);
  return Ils2Targets(labels, num_classes, teacher,
                     Ils1Epsilons(labels, teacher, params), saturated);
}

Matrix ClassSimilarity(const Matrix& features, const Labels& labels,
                       int num_classes) {
  CheckLabels(labels, num_classes);
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw ShapeError("features and labels differ in length");
  }
  Matrix centroids = Matrix::Zero(num_classes, features.cols());
  std::vector<long> counts(num_classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    centroids.row(labels[i]) += features.row(i);
    ++counts[labels[i]];
  }
  for (int c = 0; c < num_classes; ++c) {
    if (counts[c] > 0) centroids.row(c) /= static_cast<double>(counts[c]);
  }
  Matrix sim = Matrix::Zero(num_classes, num_classes);
  for (int t = 0; t < num_classes; ++t) {
    double mx = -std::numeric_limits<double>::infinity();
    std::vector<double> score(num_classes, -std::numeric_limits<double>::infinity());
    for (int j = 0; j < num_classes; ++j) {
      if (j == t || counts[j] == 0) continue;
      score[j] = -(centroids.row(t) - centroids.row(j)).norm();
      mx = std::max(mx, score[j]);
    }
    double total = 0.0;
    for (int j = 0; j < num_classes; ++j) {
      if (std::isfinite(score[j])) {
        sim(t, j) = std::exp(score[j] - mx);
        total += sim(t, j);
      }
    }
    if (total > 0.0) {
      sim.row(t) /= total;
    } else {
      for (int j = 0; j < num_classes; ++j) {
        if (j != t) sim(t, j) = 1.0 / (num_classes - 1);
      }
    }
  }
  return sim;
}

TargetMatrix ClsTargets(const Matrix& similarity, const Labels& labels,
                        SmoothingFactor epsilon) {
  const auto k = static_cast<int>(similarity.rows());
  CheckLabels(labels, k);
  const double eps = epsilon.value();
  const double wrong_mass = eps * (k - 1) / k;
  Matrix y(static_cast<Eigen::Index>(labels.size()), k);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int t = labels[i];
    y.row(i) = wrong_mass * similarity.row(t);
    y(i, t) = 1.0 - eps + eps / k;
  }
  return TargetMatrix(std::move(y));
}

TargetMatrix ClsTargets(const Matrix& train_features, const Labels& labels,
                        int num_classes, SmoothingFactor epsilon) {
  return ClsTargets(ClassSimilarity(train_features, labels, num_classes), labels,
                    epsilon);
}

TargetMatrix BsSoftTargets(const Labels& labels, int num_classes,
                           const Matrix& current_predictions, double beta) {
  CheckLabels(labels, num_classes);
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in (0, 1]");
  if (static_cast<std::size_t>(current_predictions.rows()) != labels.size() ||
      current_predictions.cols() != num_classes) {
    throw ShapeError("prediction shape does not match labels");
  }
  Matrix y = (1.0 - beta) * current_predictions;
  for (std::size_t i = 0; i < labels.size(); ++i) y(i, labels[i]) += beta;
  return TargetMatrix(std::move(y));
}

nn::TargetProvider BsSoftProvider(const Matrix& train_features, Labels labels,
                                  int num_classes, double beta,
                                  double temperature) {
  CheckLabels(labels, num_classes);
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in (0, 1]");
  // Captures by value: each training run owns its provider.
  return [features = train_features, labels = std::move(labels), num_classes,
          beta, temperature](const nn::NetworkModel& model, int) {
    return BsSoftTargets(labels, num_classes,
                         nn::Forward(model, features, temperature), beta);
  };
}

double BetaSmoothingParams::Scale() const {
  const double mean_b = a / (a + 1.0);
  return target_epsilon / (alpha + (1.0 - alpha) * mean_b);
}

void BetaSmoothingParams::Validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (!(a > 0.0)) throw ConfigError("Beta shape a must be > 0");
  if (!(target_epsilon >= 0.0)) throw ConfigError("target epsilon must be >= 0");
  if (!(Scale() < 0.5)) {
    throw ConfigError("target epsilon " + std::to_string(target_epsilon) +
                      " unreachable: largest per-instance epsilon would be " +
                      std::to_string(Scale()));
  }
}

std::vector<double> BetaEpsilons(std::size_t n, const BetaSmoothingParams& params,
                                 std::uint64_t seed) {
  params.Validate();
  const double s = params.Scale();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> eps(n);
  for (auto& e : eps) {
    const double b = std::pow(unit(rng), 1.0 / params.a);
    e = s * (params.alpha + (1.0 - params.alpha) * b);
  }
  return eps;
}

TargetMatrix BetaTargets(const Labels& labels, int num_classes,
                         const BetaSmoothingParams& params, std::uint64_t seed) {
  return InstanceLs(labels, num_classes, BetaEpsilons(labels.size(), params, seed));
}

}  // namespace ilsmooth::smoothing
