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

#ifndef ILSMOOTH_EXP_CONFIG_H_
#define ILSMOOTH_EXP_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ilsmooth/calib/metrics.h"
#include "ilsmooth/distill/distill.h"
#include "ilsmooth/nn/network.h"
#include "ilsmooth/nn/train.h"
#include "ilsmooth/smoothing/targets.h"
#include "ilsmooth/synth/generative_model.h"

namespace ilsmooth::exp {

// Training methods compared in a replicate. kBayes evaluates the exact
// posterior and trains nothing.
enum class Method { kBayes, kNoLs, kLs, kLsFixed, kIls1, kIls2, kIls, kCls, kBsSoft, kBeta };
std::string ToString(Method m);
// Accepts the names produced by ToString plus "none" for kNoLs.
Method ParseMethod(const std::string& s);

// How the ILS grid is searched: the full P1 x P2 x teacher-temperature
// product, or P1/P2 taken from the ILS1 selection followed by the
// temperature grid alone.
enum class IlsSearch { kFull, kSequential };
std::string ToString(IlsSearch s);
IlsSearch ParseIlsSearch(const std::string& s);

struct HyperparameterGrids {
  std::vector<double> epsilon;  // LS, ILS2, cLS, Beta
  std::vector<double> p1;       // ILS1 / ILS shift
  std::vector<double> p2;       // ILS1 / ILS coefficient
  std::vector<double> teacher_temperature;  // ILS2 / ILS
  double fixed_epsilon = 0.2;   // LS-fixed

  // {0.001, 0.005, 0.01, 0.03, 0.05, ..., 0.19}; P1 {0.75 .. 0.85};
  // P2 {0.75 .. 2}; T {1, 2, 4, 6}.
  static HyperparameterGrids Synthetic();
};

// Teacher true-class probabilities in (low, high] split into equal bins.
struct CurveBinning {
  int num_bins = 50;
  double low = 0.2;
  double high = 1.0;

  void Validate() const;
  double Width() const { return (high - low) / num_bins; }
  double Center(int bin) const { return low + (bin + 0.5) * Width(); }
  // -1 when p is outside [low, high].
  int BinOf(double p) const;
};

struct ExperimentConfig {
  synth::GenerativeModel generative_model = synth::GenerativeModel::Canonical();
  synth::SplitSizes sizes;
  std::vector<std::uint64_t> seeds;
  std::vector<Method> methods;
  HyperparameterGrids grids = HyperparameterGrids::Synthetic();
  IlsSearch ils_search = IlsSearch::kFull;
  smoothing::CurveFamily curve_family = smoothing::CurveFamily::kQuadratic;
  double curve_cap = 0.2;
  calib::BinningSpec bins;
  nn::ArchitectureSpec architecture = nn::ArchitectureSpec::SyntheticDefault();
  nn::InitScheme init = nn::InitScheme::kFanInUniform;
  nn::TrainConfig train;
  double bs_soft_beta = 0.95;
  smoothing::BetaSmoothingParams beta;
  distill::DistillConfig distill = distill::DistillConfig::SelfDistillation();
  std::vector<double> sweep_p1;
  std::vector<double> sweep_p2;
  CurveBinning curve_bins;
  std::string output_dir = "results";

  // Throws ConfigError on an empty seed list or an empty grid needed by an
  // enabled method.
  void Validate() const;

  // Synthetic setup with seeds base_seed .. base_seed + replicates - 1 and
  // methods {bayes, nols, ls, ls_fixed, ils1, ils2, ils}.
  static ExperimentConfig Canonical(int replicates = 20, std::uint64_t base_seed = 0);
};

// Replicate seed i is base_seed + i.
std::vector<std::uint64_t> SeedRange(std::uint64_t base_seed, int count);

// Sweep grid covering P1 in [0.7, 0.975] and P2 in [1, 10].
std::vector<double> DefaultSweepP1();
std::vector<double> DefaultSweepP2();

// Every key is optional and falls back to Canonical():
// {"generative_model": "canonical" | "<path>" | {...},
//  "per_class": {"train": 50, "validation": 50, "test": 5000},
//  "seeds": [..] | {"base": 0, "count": 20},
//  "methods": ["bayes", "nols", ...],
//  "grids": {"epsilon": [..], "p1": [..], "p2": [..],
//            "teacher_temperature": [..], "fixed_epsilon": 0.2},
//  "ils_search": "full" | "sequential",
//  "curve": {"family": "quadratic", "cap": 0.2},
//  "bins": 15, "architecture": {..}, "init": "fan_in_uniform",
//  "train": {..}, "bs_soft_beta": 0.95,
//  "beta": {"alpha": 0.4, "a": 1.0},
//  "distill": {"kd_weight": 1.0, "teacher_temperature": 1.0,
//              "student_temperature": 1.0, "scale_kd_by_t_squared": false},
//  "sweep": {"p1": [..], "p2": [..]},
//  "curve_bins": {"num_bins": 50, "low": 0.2, "high": 1.0},
//  "output_dir": "results"}
ExperimentConfig ExperimentConfigFromJson(const nlohmann::json& j);
nlohmann::json ToJson(const ExperimentConfig& cfg);
ExperimentConfig LoadExperimentConfig(const std::string& path);

}  // namespace ilsmooth::exp

#endif  // ILSMOOTH_EXP_CONFIG_H_
