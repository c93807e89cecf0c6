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

#ifndef ILSMOOTH_COMMON_H_
#define ILSMOOTH_COMMON_H_

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ilsmooth {

// Rows are instances, columns are features or classes.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

using Labels = std::vector<int>;

// Dimension or length mismatch between arguments.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// NaN/Inf where finite values are required, or a diverging computation.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A parameter or configuration value outside its documented domain.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class DensityTag { kDense, kSparse };

std::string ToString(DensityTag tag);
DensityTag ParseDensityTag(const std::string& s);

// Index of the largest entry of each row; ties resolve to the lowest index.
std::vector<int> ArgmaxRows(const Matrix& m);

// Row-wise softmax of `logits / temperature`, computed stably. Throws
// ConfigError unless temperature > 0.
Matrix Softmax(const Matrix& logits, double temperature = 1.0);

// Row-wise log-softmax of `logits / temperature`.
Matrix LogSoftmax(const Matrix& logits, double temperature = 1.0);

bool AllFinite(const Matrix& m);

// Selects rows by index.
Matrix SelectRows(const Matrix& m, std::span<const int> rows);

// Deterministic 64-bit mixing (SplitMix64 finalizer). Used to derive
// independent RNG sub-streams from a replicate seed.
std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t stream);

}  // namespace ilsmooth

#endif  // ILSMOOTH_COMMON_H_
