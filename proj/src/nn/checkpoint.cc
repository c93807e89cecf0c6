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

#include "ilsmooth/nn/checkpoint.h"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace ilsmooth::nn {
namespace {

constexpr std::size_t kMagicLen = 6;

void PutU32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> b;
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b.data(), b.size());
}

void PutU64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> b;
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b.data(), b.size());
}

void PutF64(std::ostream& out, double v) {
  PutU64(out, std::bit_cast<std::uint64_t>(v));
}

std::uint64_t GetBytes(std::istream& in, int n) {
  std::array<unsigned char, 8> b{};
  in.read(reinterpret_cast<char*>(b.data()), n);
  if (!in) throw std::runtime_error("truncated checkpoint");
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

std::uint32_t GetU32(std::istream& in) {
  return static_cast<std::uint32_t>(GetBytes(in, 4));
}
double GetF64(std::istream& in) {
  return std::bit_cast<double>(GetBytes(in, 8));
}

}  // namespace

void WriteModel(std::ostream& out, const NetworkModel& model) {
  model.Validate();
  out.write(kCheckpointMagic, kMagicLen);
  PutU32(out, static_cast<std::uint32_t>(model.arch.input_dim));
  PutU32(out, static_cast<std::uint32_t>(model.arch.hidden_layers.size()));
  for (int w : model.arch.hidden_layers) PutU32(out, static_cast<std::uint32_t>(w));
  PutU32(out, static_cast<std::uint32_t>(model.arch.num_classes));
  PutU32(out, 0);  // relu
  PutU64(out, model.rng_seed);
  for (std::size_t l = 0; l < model.NumLayers(); ++l) {
    const Matrix& w = model.weights[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) PutF64(out, w(i, j));
    }
    for (Eigen::Index j = 0; j < model.biases[l].size(); ++j) {
      PutF64(out, model.biases[l](j));
    }
  }
  if (!out) throw std::runtime_error("failed writing checkpoint");
}

NetworkModel ReadModel(std::istream& in) {
  char magic[kMagicLen];
  in.read(magic, kMagicLen);
  if (!in || std::memcmp(magic, kCheckpointMagic, kMagicLen) != 0) {
    throw std::runtime_error("not an SMCAL1 checkpoint");
  }
  ArchitectureSpec arch;
  arch.input_dim = static_cast<int>(GetU32(in));
  const std::uint32_t hidden = GetU32(in);
  if (hidden > 4096) throw std::runtime_error("implausible layer count");
  arch.hidden_layers.resize(hidden);
  for (auto& w : arch.hidden_layers) w = static_cast<int>(GetU32(in));
  arch.num_classes = static_cast<int>(GetU32(in));
  if (GetU32(in) != 0) throw std::runtime_error("unsupported activation");
  const std::uint64_t seed = GetBytes(in, 8);

  NetworkModel model = NetworkModel::Zeros(arch);
  model.rng_seed = seed;
  for (std::size_t l = 0; l < model.NumLayers(); ++l) {
    Matrix& w = model.weights[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = GetF64(in);
    }
    for (Eigen::Index j = 0; j < model.biases[l].size(); ++j) {
      model.biases[l](j) = GetF64(in);
    }
  }
  model.Validate();
  return model;
}

void SaveCheckpoint(const std::string& path, const NetworkModel& model,
                    const nlohmann::json& metadata) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path);
    WriteModel(out, model);
  }
  nlohmann::json sidecar = metadata;
  sidecar["format"] = "SMCAL1";
  sidecar["architecture"] = ToJson(model.arch);
  sidecar["rng_seed"] = model.rng_seed;
  std::ofstream side(path + ".json");
  if (!side) throw std::runtime_error("cannot open " + path + ".json");
  side << sidecar.dump(2) << "\n";
}

NetworkModel LoadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return ReadModel(in);
}

nlohmann::json LoadCheckpointSidecar(const std::string& path) {
  std::ifstream in(path + ".json");
  if (!in) return nlohmann::json::object();
  return nlohmann::json::parse(in);
}

nlohmann::json ToJson(const ArchitectureSpec& arch) {
  return {{"input_dim", arch.input_dim},
          {"hidden_layers", arch.hidden_layers},
          {"num_classes", arch.num_classes},
          {"activation", "relu"}};
}

ArchitectureSpec ArchitectureFromJson(const nlohmann::json& j) {
  ArchitectureSpec arch = ArchitectureSpec::SyntheticDefault();
  arch.input_dim = j.value("input_dim", arch.input_dim);
  arch.hidden_layers = j.value("hidden_layers", arch.hidden_layers);
  arch.num_classes = j.value("num_classes", arch.num_classes);
  if (j.value("activation", std::string("relu")) != "relu") {
    throw ConfigError("only relu activation is supported");
  }
  arch.Validate();
  return arch;
}

nlohmann::json ToJson(const TrainConfig& cfg) {
  return {{"optimizer", ToString(cfg.optimizer)},
          {"learning_rate", cfg.learning_rate},
          {"max_epochs", cfg.max_epochs},
          {"early_stop_patience", cfg.early_stop_patience},
          {"batch_size", cfg.batch_size},
          {"momentum", cfg.momentum},
          {"weight_decay", cfg.weight_decay},
          {"temperature", cfg.temperature},
          {"loss_scale", cfg.loss_scale},
          {"lr_milestones", cfg.lr_milestones},
          {"lr_gamma", cfg.lr_gamma}};
}

TrainConfig TrainConfigFromJson(const nlohmann::json& j) {
  TrainConfig cfg;
  if (j.contains("optimizer")) {
    cfg.optimizer = ParseOptimizerKind(j.at("optimizer").get<std::string>());
  }
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.max_epochs = j.value("max_epochs", cfg.max_epochs);
  cfg.early_stop_patience = j.value("early_stop_patience", cfg.early_stop_patience);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.momentum = j.value("momentum", cfg.momentum);
  cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
  cfg.temperature = j.value("temperature", cfg.temperature);
  cfg.loss_scale = j.value("loss_scale", cfg.loss_scale);
  cfg.lr_milestones = j.value("lr_milestones", cfg.lr_milestones);
  cfg.lr_gamma = j.value("lr_gamma", cfg.lr_gamma);
  cfg.Validate();
  return cfg;
}

}  // namespace ilsmooth::nn
