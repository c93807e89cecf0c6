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

#ifndef ILSMOOTH_NN_CHECKPOINT_H_
#define ILSMOOTH_NN_CHECKPOINT_H_

#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

#include "ilsmooth/nn/network.h"
#include "ilsmooth/nn/train.h"

namespace ilsmooth::nn {

// Binary checkpoint layout, all integers and IEEE-754 doubles little-endian:
//
//   char[6]  "SMCAL1"
//   u32      input_dim
//   u32      number of hidden layers H
//   u32[H]   hidden layer widths
//   u32      num_classes
//   u32      activation (0 = relu)
//   u64      rng_seed
//   for every layer l (input -> output):
//     f64[fan_in * fan_out]  weights, row-major (row = input unit)
//     f64[fan_out]           biases
//
// A JSON sidecar at `<path>.json` carries the architecture, seed and any
// caller-supplied metadata (training config, strategy tag, ...).
inline constexpr char kCheckpointMagic[] = "SMCAL1";

void WriteModel(std::ostream& out, const NetworkModel& model);
NetworkModel ReadModel(std::istream& in);

// Writes `path` and `path + ".json"`. Throws std::runtime_error on I/O
// failure.
void SaveCheckpoint(const std::string& path, const NetworkModel& model,
                    const nlohmann::json& metadata = nlohmann::json::object());
NetworkModel LoadCheckpoint(const std::string& path);
nlohmann::json LoadCheckpointSidecar(const std::string& path);

nlohmann::json ToJson(const ArchitectureSpec& arch);
ArchitectureSpec ArchitectureFromJson(const nlohmann::json& j);
nlohmann::json ToJson(const TrainConfig& cfg);
// Missing keys keep their defaults.
TrainConfig TrainConfigFromJson(const nlohmann::json& j);

}  // namespace ilsmooth::nn

#endif  // ILSMOOTH_NN_CHECKPOINT_H_
