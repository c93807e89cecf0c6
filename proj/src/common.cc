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

#include "ilsmooth/common.h"

#include <cmath>

namespace ilsmooth {

std::string ToString(DensityTag tag) {
  return tag == DensityTag::kDense ? "dense" : "sparse";
}

DensityTag ParseDensityTag(const std::string& s) {
  if (s == "dense") return DensityTag::kDense;
  if (s == "sparse") return DensityTag::kSparse;
  throw ConfigError("unknown density tag '" + s + "'");
}

std::vector<int> ArgmaxRows(const Matrix& m) {
  std::vector<int> out(m.rows(), 0);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    int best = 0;
    for (Eigen::Index j = 1; j < m.cols(); ++j) {
      if (m(i, j) > m(i, best)) best = static_cast<int>(j);
    }
    out[i] = best;
  }
  return out;
}

Matrix LogSoftmax(const Matrix& logits, double temperature) {
  if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
  Matrix z = logits / temperature;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double mx = z.row(i).maxCoeff();
    const double lse = mx + std::log((z.row(i).array() - mx).exp().sum());
    z.row(i).array() -= lse;
  }
  return z;
}

Matrix Softmax(const Matrix& logits, double temperature) {
  if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
  Matrix p = logits / temperature;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double mx = p.row(i).maxCoeff();
    p.row(i) = (p.row(i).array() - mx).exp().matrix();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

bool AllFinite(const Matrix& m) { return m.allFinite(); }

Matrix SelectRows(const Matrix& m, std::span<const int> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= m.rows()) throw ShapeError("row index out of range");
    out.row(i) = m.row(rows[i]);
  }
  return out;
}

std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace ilsmooth
