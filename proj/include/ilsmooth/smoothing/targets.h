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

#ifndef ILSMOOTH_SMOOTHING_TARGETS_H_
#define ILSMOOTH_SMOOTHING_TARGETS_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ilsmooth/common.h"
#include "ilsmooth/nn/loss.h"
#include "ilsmooth/nn/train.h"

namespace ilsmooth::smoothing {

using nn::TargetMatrix;

enum class Strategy {
  kNone,     // hard one-hot targets
  kLs,       // uniform smoothing, epsilon tuned
  kLsFixed,  // uniform smoothing, epsilon fixed (0.2)
  kIls1,     // teacher-dependent epsilon, uniform redistribution
  kIls2,     // fixed epsilon, teacher-proportional redistribution
  kIls,      // both
  kCls,      // class-level similarity smoothing
  kBsSoft,   // soft bootstrapping
  kBeta,     // Beta-distributed per-instance epsilon
};

std::string ToString(Strategy s);
Strategy ParseStrategy(const std::string& s);

// Smoothing factor in [0, 0.5).
class SmoothingFactor {
 public:
  explicit SmoothingFactor(double epsilon);
  double value() const { return epsilon_; }

 private:
  double epsilon_;
};

enum class CurveFamily { kQuadratic, kSinusoidal };
std::string ToString(CurveFamily f);
CurveFamily ParseCurveFamily(const std::string& s);

// Maps a teacher's true-class probability to a per-instance epsilon.
// quadratic:  min(cap, p2 * (p - p1)^2)
// sinusoidal: min(cap, 0.1 * (sin(p2 * (p - p1)) + 1))
struct CurveParams {
  CurveFamily family = CurveFamily::kQuadratic;
  double p1 = 0.8;  // shift
  double p2 = 2.0;  // coefficient
  double cap = 0.2;

  // Throws ConfigError unless cap in (0, 0.5) and p1 in [0, 1].
  void Validate() const;
};

struct TeacherPredictions {
  Matrix probs;
  double temperature = 1.0;

  // Throws ConfigError if a row is not a distribution within 1e-9.
  void Validate() const;
  static TeacherPredictions FromLogits(const Matrix& logits, double temperature);
};

TargetMatrix HardTargets(const Labels& labels, int num_classes);

// y_j (1 - eps) + eps / K.
TargetMatrix StandardLs(const Labels& labels, int num_classes,
                        SmoothingFactor epsilon);

// Standard smoothing with a separate epsilon per instance.
TargetMatrix InstanceLs(const Labels& labels, int num_classes,
                        std::span<const double> epsilons);

double Ils1Epsilon(double p_true, const CurveParams& params);

// Per-instance epsilons from the teacher's true-class probabilities.
std::vector<double> Ils1Epsilons(const Labels& labels,
                                 const TeacherPredictions& teacher,
                                 const CurveParams& params);

TargetMatrix Ils1Targets(const Labels& labels, int num_classes,
                         const TeacherPredictions& teacher,
                         const CurveParams& params);

// True class gets 1 - eps; wrong class j gets eps * p_j / (1 - p_t) from the
// teacher. If the teacher's p_t >= 1 - 1e-9 the wrong-class mass is spread
// uniformly instead; the number of such rows is written to `saturated`.
TargetMatrix Ils2Targets(const Labels& labels, int num_classes,
                         const TeacherPredictions& teacher,
                         SmoothingFactor epsilon, int* saturated = nullptr);

// As above with a per-instance epsilon.
TargetMatrix Ils2Targets(const Labels& labels, int num_classes,
                         const TeacherPredictions& teacher,
                         std::span<const double> epsilons,
                         int* saturated = nullptr);

// ILS1 epsilons fed into the ILS2 redistribution.
TargetMatrix IlsTargets(const Labels& labels, int num_classes,
                        const TeacherPredictions& teacher,
                        const CurveParams& params, int* saturated = nullptr);

// Row t: similarity of class t to every wrong class j, a softmax of negative
// Euclidean distances between class centroids (diagonal is zero). Classes
// without instances get zero similarity.
Matrix ClassSimilarity(const Matrix& features, const Labels& labels,
                       int num_classes);

// Class-level smoothing: the true class keeps 1 - eps + eps / K and the
// remaining eps (K - 1) / K is spread over wrong classes by ClassSimilarity.
TargetMatrix ClsTargets(const Matrix& train_features, const Labels& labels,
                        int num_classes, SmoothingFactor epsilon);
// Applies a precomputed similarity matrix to (possibly other) labels.
TargetMatrix ClsTargets(const Matrix& similarity, const Labels& labels,
                        SmoothingFactor epsilon);

// beta * one_hot + (1 - beta) * predictions, beta in (0, 1].
TargetMatrix BsSoftTargets(const Labels& labels, int num_classes,
                           const Matrix& current_predictions, double beta);

// Training-loop callback recomputing soft-bootstrap targets from the current
// network at the start of every epoch.
nn::TargetProvider BsSoftProvider(const Matrix& train_features, Labels labels,
                                  int num_classes, double beta,
                                  double temperature = 1.0);

struct BetaSmoothingParams {
  double alpha = 0.4;
  double a = 1.0;                 // Beta(a, 1) shape
  double target_epsilon = 0.1;    // desired mean epsilon

  // Scale s with E[s (alpha + (1 - alpha) b)] = target_epsilon.
  double Scale() const;
  // Throws ConfigError unless alpha in (0, 1), a > 0 and the largest
  // reachable epsilon s stays below 0.5.
  void Validate() const;
};

// eps_i = s (alpha + (1 - alpha) b_i), b_i ~ Beta(a, 1) drawn i.i.d. by
// inverse CDF (b = u^(1/a)). Deterministic in `seed`.
std::vector<double> BetaEpsilons(std::size_t n, const BetaSmoothingParams& params,
                                 std::uint64_t seed);

TargetMatrix BetaTargets(const Labels& labels, int num_classes,
                         const BetaSmoothingParams& params, std::uint64_t seed);

}  // namespace ilsmooth::smoothing

#endif  // ILSMOOTH_SMOOTHING_TARGETS_H_
