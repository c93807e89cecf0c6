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

#ifndef ILSMOOTH_NN_NETWORK_H_
#define ILSMOOTH_NN_NETWORK_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ilsmooth/common.h"

namespace ilsmooth::nn {

enum class Activation { kRelu };

// Shape of a dense feed-forward classifier.
struct ArchitectureSpec {
  int input_dim = 2;
  std::vector<int> hidden_layers;
  int num_classes = 3;
  Activation activation = Activation::kRelu;

  // Throws ConfigError unless input_dim >= 1, every width >= 1 and
  // num_classes >= 2.
  void Validate() const;
  std::size_t NumParameters() const;

  // 2 inputs, five hidden ReLU layers of 64 units, 3 classes.
  static ArchitectureSpec SyntheticDefault();

  bool operator==(const ArchitectureSpec&) const = default;
};

// kFanInUniform: weights and biases U(-1/sqrt(fan_in), 1/sqrt(fan_in)), the
// usual default of dense layers in common frameworks.
// kHeUniform: weights U(-sqrt(6/fan_in), sqrt(6/fan_in)), zero biases.
enum class InitScheme { kFanInUniform, kHeUniform };
std::string ToString(InitScheme scheme);
InitScheme ParseInitScheme(const std::string& s);

// Parameters of a dense ReLU network. Layer l maps activations of width
// fan_in(l) to fan_out(l) as `h * weights[l] + biases[l]`; the last layer
// produces logits. A plain value type: copy it to snapshot.
struct NetworkModel {
  ArchitectureSpec arch;
  std::vector<Matrix> weights;
  std::vector<RowVector> biases;
  std::uint64_t rng_seed = 0;

  static NetworkModel Initialize(
      const ArchitectureSpec& arch, std::uint64_t seed,
      InitScheme scheme = InitScheme::kFanInUniform);
  static NetworkModel Zeros(const ArchitectureSpec& arch);

  std::size_t NumLayers() const { return weights.size(); }

  // Throws ShapeError on inconsistent shapes, NumericError on NaN/Inf.
  void Validate() const;

  bool operator==(const NetworkModel& other) const;
};

// Final-layer outputs before softmax.
Matrix Logits(const NetworkModel& model, const Matrix& features);

// softmax(logits / temperature), one probability row per instance.
Matrix Forward(const NetworkModel& model, const Matrix& features,
               double temperature = 1.0);

}  // namespace ilsmooth::nn

#endif  // ILSMOOTH_NN_NETWORK_H_
