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

#include "ilsmooth/nn/network.h"

#include <cmath>
#include <random>
#include <string>

namespace ilsmooth::nn {
namespace {

void CheckFeatures(const NetworkModel& model, const Matrix& features) {
  if (features.cols() != model.arch.input_dim) {
    throw ShapeError("feature matrix has " + std::to_string(features.cols()) +
                     " columns, network expects " +
                     std::to_string(model.arch.input_dim));
  }
  if (!features.allFinite()) {
    throw NumericError("non-finite value in feature matrix");
  }
}

std::vector<int> LayerWidths(const ArchitectureSpec& arch) {
  std::vector<int> widths;
  widths.reserve(arch.hidden_layers.size() + 2);
  widths.push_back(arch.input_dim);
  widths.insert(widths.end(), arch.hidden_layers.begin(),
                arch.hidden_layers.end());
  widths.push_back(arch.num_classes);
  return widths;
}

}  // namespace

void ArchitectureSpec::Validate() const {
  if (input_dim < 1) throw ConfigError("input_dim must be >= 1");
  for (int w : hidden_layers) {
    if (w < 1) throw ConfigError("hidden layer width must be >= 1");
  }
  if (num_classes < 2) throw ConfigError("num_classes must be >= 2");
}

std::size_t ArchitectureSpec::NumParameters() const {
  const auto widths = LayerWidths(*this);
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    n += static_cast<std::size_t>(widths[l]) * widths[l + 1] + widths[l + 1];
  }
  return n;
}

ArchitectureSpec ArchitectureSpec::SyntheticDefault() {
  return ArchitectureSpec{2, {64, 64, 64, 64, 64}, 3, Activation::kRelu};
}

NetworkModel NetworkModel::Zeros(const ArchitectureSpec& arch) {
  arch.Validate();
  NetworkModel model;
  model.arch = arch;
  const auto widths = LayerWidths(arch);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    model.weights.push_back(Matrix::Zero(widths[l], widths[l + 1]));
    model.biases.push_back(RowVector::Zero(widths[l + 1]));
  }
  return model;
}

std::string ToString(InitScheme scheme) {
  return scheme == InitScheme::kHeUniform ? "he_uniform" : "fan_in_uniform";
}

InitScheme ParseInitScheme(const std::string& s) {
  if (s == "fan_in_uniform") return InitScheme::kFanInUniform;
  if (s == "he_uniform") return InitScheme::kHeUniform;
  throw ConfigError("unknown init scheme '" + s + "'");
}

NetworkModel NetworkModel::Initialize(const ArchitectureSpec& arch,
                                      std::uint64_t seed, InitScheme scheme) {
  NetworkModel model = Zeros(arch);
  model.rng_seed = seed;
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    Matrix& w = model.weights[l];
    const double fan_in = static_cast<double>(w.rows());
    const double limit = scheme == InitScheme::kHeUniform
                             ? std::sqrt(6.0 / fan_in)
                             : 1.0 / std::sqrt(fan_in);
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = dist(rng);
    }
    if (scheme == InitScheme::kFanInUniform) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) model.biases[l](j) = dist(rng);
    }
  }
  return model;
}

void NetworkModel::Validate() const {
  arch.Validate();
  const auto widths = LayerWidths(arch);
  if (weights.size() != widths.size() - 1 || biases.size() != weights.size()) {
    throw ShapeError("layer count does not match architecture");
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != widths[l] || weights[l].cols() != widths[l + 1] ||
        biases[l].size() != widths[l + 1]) {
      throw ShapeError("layer " + std::to_string(l) +
                       " shape does not match architecture");
    }
    if (!weights[l].allFinite() || !biases[l].allFinite()) {
      throw NumericError("non-finite parameter in layer " + std::to_string(l));
    }
  }
}

bool NetworkModel::operator==(const NetworkModel& other) const {
  if (!(arch == other.arch) || rng_seed != other.rng_seed ||
      weights.size() != other.weights.size()) {
    return false;
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l] != other.weights[l] || biases[l] != other.biases[l]) {
      return false;
    }
  }
  return true;
}

Matrix Logits(const NetworkModel& model, const Matrix& features) {
  CheckFeatures(model, features);
  Matrix h = features;
  const std::size_t last = model.NumLayers() - 1;
  for (std::size_t l = 0; l < last; ++l) {
    Matrix a = h * model.weights[l];
    a.rowwise() += model.biases[l];
    h = a.cwiseMax(0.0);
  }
  Matrix z = h * model.weights[last];
  z.rowwise() += model.biases[last];
  return z;
}

Matrix Forward(const NetworkModel& model, const Matrix& features,
               double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ConfigError("temperature must be a positive finite number");
  }
  return Softmax(Logits(model, features), temperature);
}

}  // namespace ilsmooth::nn
