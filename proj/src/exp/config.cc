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

#include "ilsmooth/exp/config.h"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "ilsmooth/nn/checkpoint.h"

namespace ilsmooth::exp {
namespace {

constexpr std::pair<Method, const char*> kMethodNames[] = {
    {Method::kBayes, "bayes"},   {Method::kNoLs, "nols"},   {Method::kLs, "ls"},
    {Method::kLsFixed, "ls_fixed"}, {Method::kIls1, "ils1"}, {Method::kIls2, "ils2"},
    {Method::kIls, "ils"},       {Method::kCls, "cls"},     {Method::kBsSoft, "bs_soft"},
    {Method::kBeta, "beta"},
};

bool Uses(const ExperimentConfig& cfg, Method m) {
  return std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end();
}

void RequireGrid(const std::vector<double>& grid, const char* name) {
  if (grid.empty()) throw ConfigError(std::string("grid '") + name + "' is empty");
  for (double v : grid) {
    if (!std::isfinite(v)) throw ConfigError(std::string("non-finite value in grid ") + name);
  }
}

}  // namespace

std::string ToString(Method m) {
  for (const auto& [k, name] : kMethodNames) {
    if (k == m) return name;
  }
  return "nols";
}

Method ParseMethod(const std::string& s) {
  if (s == "none") return Method::kNoLs;
  for (const auto& [k, name] : kMethodNames) {
    if (s == name) return k;
  }
  throw ConfigError("unknown method '" + s + "'");
}

std::string ToString(IlsSearch s) {
  return s == IlsSearch::kFull ? "full" : "sequential";
}

IlsSearch ParseIlsSearch(const std::string& s) {
  if (s == "full") return IlsSearch::kFull;
  if (s == "sequential") return IlsSearch::kSequential;
  throw ConfigError("unknown ils_search '" + s + "'");
}

HyperparameterGrids HyperparameterGrids::Synthetic() {
  HyperparameterGrids g;
  g.epsilon = {0.001, 0.005, 0.01};
  for (int i = 3; i <= 19; i += 2) g.epsilon.push_back(i / 100.0);
  g.p1 = {0.75, 0.775, 0.8, 0.825, 0.85};
  g.p2 = {0.75, 1.0, 1.25, 1.5, 1.75, 2.0};
  g.teacher_temperature = {1.0, 2.0, 4.0, 6.0};
  return g;
}

void CurveBinning::Validate() const {
  if (num_bins < 1) throw ConfigError("curve num_bins must be >= 1");
  if (!(low >= 0.0 && high <= 1.0 && low < high)) {
    throw ConfigError("curve range must satisfy 0 <= low < high <= 1");
  }
}

int CurveBinning::BinOf(double p) const {
  if (!(p >= low && p <= high)) return -1;
  const int b = static_cast<int>((p - low) / Width());
  return std::min(b, num_bins - 1);
}

void ExperimentConfig::Validate() const {
  generative_model.Validate();
  if (seeds.empty()) throw ConfigError("seed list is empty");
  if (sizes.train_per_class < 1 || sizes.validation_per_class < 1 ||
      sizes.test_per_class < 1) {
    throw ConfigError("per-class split sizes must be >= 1");
  }
  if (architecture.num_classes != generative_model.num_classes() ||
      architecture.input_dim != 2) {
    throw ConfigError("architecture does not match the generative model");
  }
  architecture.Validate();
  train.Validate();
  bins.Validate();
  curve_bins.Validate();
  distill.Validate();
  if (Uses(*this, Method::kLs) || Uses(*this, Method::kIls2) ||
      Uses(*this, Method::kCls) || Uses(*this, Method::kBeta)) {
    RequireGrid(grids.epsilon, "epsilon");
  }
  if (Uses(*this, Method::kIls1) || Uses(*this, Method::kIls)) {
    RequireGrid(grids.p1, "p1");
    RequireGrid(grids.p2, "p2");
  }
  if (Uses(*this, Method::kIls2) || Uses(*this, Method::kIls)) {
    RequireGrid(grids.teacher_temperature, "teacher_temperature");
    for (double t : grids.teacher_temperature) {
      if (!(t > 0.0)) throw ConfigError("teacher temperatures must be > 0");
    }
  }
  for (double e : grids.epsilon) (void)smoothing::SmoothingFactor(e);
  (void)smoothing::SmoothingFactor(grids.fixed_epsilon);
  for (double p : grids.p1) {
    smoothing::CurveParams{curve_family, p, 1.0, curve_cap}.Validate();
  }
  for (double p : sweep_p1) {
    smoothing::CurveParams{curve_family, p, 1.0, curve_cap}.Validate();
  }
  if (!(bs_soft_beta > 0.0 && bs_soft_beta <= 1.0)) {
    throw ConfigError("bs_soft_beta must lie in (0, 1]");
  }
}

ExperimentConfig ExperimentConfig::Canonical(int replicates, std::uint64_t base_seed) {
  ExperimentConfig cfg;
  cfg.seeds = SeedRange(base_seed, replicates);
  cfg.methods = {Method::kBayes, Method::kNoLs, Method::kLs,  Method::kLsFixed,
                 Method::kIls1,  Method::kIls2, Method::kIls};
  cfg.sweep_p1 = DefaultSweepP1();
  cfg.sweep_p2 = DefaultSweepP2();
  return cfg;
}

std::vector<std::uint64_t> SeedRange(std::uint64_t base_seed, int count) {
  if (count < 1) throw ConfigError("replicate count must be >= 1");
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < count; ++i) seeds.push_back(base_seed + static_cast<std::uint64_t>(i));
  return seeds;
}

std::vector<double> DefaultSweepP1() { return {0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 0.975}; }
std::vector<double> DefaultSweepP2() { return {1.0, 2.0, 4.0, 6.0, 8.0, 10.0}; }

ExperimentConfig ExperimentConfigFromJson(const nlohmann::json& j) {
  ExperimentConfig cfg = ExperimentConfig::Canonical();
  if (j.contains("generative_model")) {
    const auto& g = j.at("generative_model");
    if (g.is_string()) {
      const auto name = g.get<std::string>();
      cfg.generative_model = name == "canonical" ? synth::GenerativeModel::Canonical()
                                                 : synth::LoadGenerativeModel(name);
    } else {
      cfg.generative_model = synth::GenerativeModelFromJson(g);
    }
  }
  if (j.contains("per_class")) {
    const auto& p = j.at("per_class");
    cfg.sizes.train_per_class = p.value("train", cfg.sizes.train_per_class);
    cfg.sizes.validation_per_class = p.value("validation", cfg.sizes.validation_per_class);
    cfg.sizes.test_per_class = p.value("test", cfg.sizes.test_per_class);
  }
  if (j.contains("seeds")) {
    const auto& s = j.at("seeds");
    if (s.is_array()) {
      cfg.seeds = s.get<std::vector<std::uint64_t>>();
    } else {
      cfg.seeds = SeedRange(s.value("base", std::uint64_t{0}), s.value("count", 20));
    }
  }
  if (j.contains("methods")) {
    cfg.methods.clear();
    for (const auto& m : j.at("methods")) cfg.methods.push_back(ParseMethod(m.get<std::string>()));
  }
  if (j.contains("grids")) {
    const auto& g = j.at("grids");
    cfg.grids.epsilon = g.value("epsilon", cfg.grids.epsilon);
    cfg.grids.p1 = g.value("p1", cfg.grids.p1);
    cfg.grids.p2 = g.value("p2", cfg.grids.p2);
    cfg.grids.teacher_temperature = g.value("teacher_temperature", cfg.grids.teacher_temperature);
    cfg.grids.fixed_epsilon = g.value("fixed_epsilon", cfg.grids.fixed_epsilon);
  }
  if (j.contains("ils_search")) cfg.ils_search = ParseIlsSearch(j.at("ils_search"));
  if (j.contains("curve")) {
    const auto& c = j.at("curve");
    if (c.contains("family")) cfg.curve_family = smoothing::ParseCurveFamily(c.at("family"));
    cfg.curve_cap = c.value("cap", cfg.curve_cap);
  }
  cfg.bins.num_bins = j.value("bins", cfg.bins.num_bins);
  if (j.contains("architecture")) cfg.architecture = nn::ArchitectureFromJson(j.at("architecture"));
  if (j.contains("init")) cfg.init = nn::ParseInitScheme(j.at("init"));
  if (j.contains("train")) cfg.train = nn::TrainConfigFromJson(j.at("train"));
  cfg.bs_soft_beta = j.value("bs_soft_beta", cfg.bs_soft_beta);
  if (j.contains("beta")) {
    cfg.beta.alpha = j.at("beta").value("alpha", cfg.beta.alpha);
    cfg.beta.a = j.at("beta").value("a", cfg.beta.a);
  }
  if (j.contains("distill")) {
    const auto& d = j.at("distill");
    cfg.distill.kd_weight = d.value("kd_weight", cfg.distill.kd_weight);
    cfg.distill.teacher_temperature = d.value("teacher_temperature", cfg.distill.teacher_temperature);
    cfg.distill.student_temperature = d.value("student_temperature", cfg.distill.student_temperature);
    cfg.distill.scale_kd_by_t_squared =
        d.value("scale_kd_by_t_squared", cfg.distill.scale_kd_by_t_squared);
  }
  if (j.contains("sweep")) {
    cfg.sweep_p1 = j.at("sweep").value("p1", cfg.sweep_p1);
    cfg.sweep_p2 = j.at("sweep").value("p2", cfg.sweep_p2);
  }
  if (j.contains("curve_bins")) {
    const auto& c = j.at("curve_bins");
    cfg.curve_bins.num_bins = c.value("num_bins", cfg.curve_bins.num_bins);
    cfg.curve_bins.low = c.value("low", cfg.curve_bins.low);
    cfg.curve_bins.high = c.value("high", cfg.curve_bins.high);
  }
  cfg.output_dir = j.value("output_dir", cfg.output_dir);
  cfg.Validate();
  return cfg;
}

nlohmann::json ToJson(const ExperimentConfig& cfg) {
  nlohmann::json methods = nlohmann::json::array();
  for (Method m : cfg.methods) methods.push_back(ToString(m));
  return {
      {"generative_model", synth::ToJson(cfg.generative_model)},
      {"per_class",
       {{"train", cfg.sizes.train_per_class},
        {"validation", cfg.sizes.validation_per_class},
        {"test", cfg.sizes.test_per_class}}},
      {"seeds", cfg.seeds},
      {"methods", methods},
      {"grids",
       {{"epsilon", cfg.grids.epsilon},
        {"p1", cfg.grids.p1},
        {"p2", cfg.grids.p2},
        {"teacher_temperature", cfg.grids.teacher_temperature},
        {"fixed_epsilon", cfg.grids.fixed_epsilon}}},
      {"ils_search", ToString(cfg.ils_search)},
      {"curve", {{"family", smoothing::ToString(cfg.curve_family)}, {"cap", cfg.curve_cap}}},
      {"bins", cfg.bins.num_bins},
      {"architecture", nn::ToJson(cfg.architecture)},
      {"init", nn::ToString(cfg.init)},
      {"train", nn::ToJson(cfg.train)},
      {"bs_soft_beta", cfg.bs_soft_beta},
      {"beta", {{"alpha", cfg.beta.alpha}, {"a", cfg.beta.a}}},
      {"distill",
       {{"kd_weight", cfg.distill.kd_weight},
        {"teacher_temperature", cfg.distill.teacher_temperature},
        {"student_temperature", cfg.distill.student_temperature},
        {"scale_kd_by_t_squared", cfg.distill.scale_kd_by_t_squared}}},
      {"sweep", {{"p1", cfg.sweep_p1}, {"p2", cfg.sweep_p2}}},
      {"curve_bins",
       {{"num_bins", cfg.curve_bins.num_bins},
        {"low", cfg.curve_bins.low},
        {"high", cfg.curve_bins.high}}},
      {"output_dir", cfg.output_dir},
  };
}

ExperimentConfig LoadExperimentConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  try {
    return ExperimentConfigFromJson(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed config " + path + ": " + e.what());
  }
}

}  // namespace ilsmooth::exp
