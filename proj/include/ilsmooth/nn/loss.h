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

#ifndef ILSMOOTH_NN_LOSS_H_
#define ILSMOOTH_NN_LOSS_H_

#include "ilsmooth/common.h"

namespace ilsmooth::nn {

// Probabilities are clipped below at this value before taking logs.
inline constexpr double kLogFloor = 1e-12;

// Per-instance training targets: every row is a probability vector over the
// K classes. Construction validates the invariant, so any TargetMatrix in
// hand is a proper distribution matrix.
class TargetMatrix {
 public:
  static constexpr double kRowSumTolerance = 1e-9;

  TargetMatrix() = default;
  // Throws ConfigError if an entry lies outside [0, 1] or a row does not sum
  // to 1 within kRowSumTolerance.
  explicit TargetMatrix(Matrix values);

  const Matrix& values() const { return values_; }
  Eigen::Index rows() const { return values_.rows(); }
  Eigen::Index cols() const { return values_.cols(); }
  double operator()(Eigen::Index i, Eigen::Index j) const {
    return values_(i, j);
  }

  TargetMatrix SelectRows(std::span<const int> rows) const;

  bool operator==(const TargetMatrix& other) const {
    return values_.rows() == other.values_.rows() &&
           values_.cols() == other.values_.cols() && values_ == other.values_;
  }

 private:
  Matrix values_;
};

// Mean over instances of -sum_j y_j log(max(p_j, kLogFloor)).
double SoftCrossEntropy(const Matrix& predictions, const TargetMatrix& targets);

// Mean Shannon entropy of the target rows (0 log 0 = 0).
double MeanEntropy(const TargetMatrix& targets);

}  // namespace ilsmooth::nn

#endif  // ILSMOOTH_NN_LOSS_H_
