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

#include "ilsmooth/nn/loss.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace ilsmooth::nn {

TargetMatrix::TargetMatrix(Matrix values) : values_(std::move(values)) {
  for (Eigen::Index i = 0; i < values_.rows(); ++i) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < values_.cols(); ++j) {
      const double v = values_(i, j);
      if (!(v >= 0.0 && v <= 1.0 + kRowSumTolerance)) {
        throw ConfigError("target entry (" + std::to_string(i) + ", " +
                          std::to_string(j) + ") = " + std::to_string(v) +
                          " is outside [0, 1]");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      throw ConfigError("target row " + std::to_string(i) + " sums to " +
                        std::to_string(sum));
    }
  }
}

TargetMatrix TargetMatrix::SelectRows(std::span<const int> rows) const {
  return TargetMatrix(ilsmooth::SelectRows(values_, rows));
}

double SoftCrossEntropy(const Matrix& predictions, const TargetMatrix& targets) {
  if (predictions.rows() != targets.rows() ||
      predictions.cols() != targets.cols()) {
    throw ShapeError("prediction and target shapes differ");
  }
  if (predictions.rows() == 0) throw ShapeError("empty prediction matrix");
  double total = 0.0;
  for (Eigen::Index i = 0; i < predictions.rows(); ++i) {
    for (Eigen::Index j = 0; j < predictions.cols(); ++j) {
      const double y = targets(i, j);
      if (y == 0.0) continue;
      total -= y * std::log(std::max(predictions(i, j), kLogFloor));
    }
  }
  return total / static_cast<double>(predictions.rows());
}

double MeanEntropy(const TargetMatrix& targets) {
  if (targets.rows() == 0) return 0.0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < targets.rows(); ++i) {
    for (Eigen::Index j = 0; j < targets.cols(); ++j) {
      const double y = targets(i, j);
      if (y > 0.0) total -= y * std::log(y);
    }
  }
  return total / static_cast<double>(targets.rows());
}

}  // namespace ilsmooth::nn
