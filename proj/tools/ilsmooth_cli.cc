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

// Command-line front end: dataset generation, single training runs,
// evaluation, grid sweeps, the smoothing-factor curve, self-distillation and
// table reproduction.
//
// Exit codes: 0 success, 1 acceptance verdict failed or a training run
// failed, 2 usage or configuration error, 3 runtime error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "ilsmooth/calib/metrics.h"
#include "ilsmooth/calib/temperature.h"
#include "ilsmooth/distill/distill.h"
#include "ilsmooth/exp/config.h"
#include "ilsmooth/exp/reproduce.h"
#include "ilsmooth/exp/runner.h"
#include "ilsmooth/nn/checkpoint.h"
#include "ilsmooth/nn/train.h"
#include "ilsmooth/smoothing/targets.h"
#include "ilsmooth/synth/generative_model.h"

namespace {

using namespace ilsmooth;

constexpr int kExitOk = 0;
constexpr int kExitVerdict = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

struct Common {
  std::string config_path;
  std::string out;
  std::string log_level = "info";
};

exp::ExperimentConfig LoadConfig(const Common& c) {
  exp::ExperimentConfig cfg = c.config_path.empty() ? exp::ExperimentConfig::Canonical()
                                                    : exp::LoadExperimentConfig(c.config_path);
  if (!c.out.empty()) cfg.output_dir = c.out;
  return cfg;
}

void WriteJson(const std::string& path, const nlohmann::json& j) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

// Splits come from a CSV written by `generate` when given, otherwise they are
// sampled from the configured generative model.
synth::DataSplits LoadSplits(const exp::ExperimentConfig& cfg, const std::string& data_path,
                             std::uint64_t seed) {
  if (data_path.empty()) return synth::SampleSplits(cfg.generative_model, cfg.sizes, seed);
  auto read = [&](const std::string& split) {
    std::ifstream in(data_path);
    if (!in) throw std::runtime_error("cannot open " + data_path);
    auto d = synth::ReadCsv(in, split);
    d.split = synth::ParseSplit(split);
    return d;
  };
  synth::DataSplits s{read("train"), read("validation"), read("test")};
  if (s.train.size() == 0 || s.validation.size() == 0) {
    throw ConfigError(data_path + " needs train and validation rows");
  }
  return s;
}

struct TrainOptions {
  std::string strategy = "none";
  double epsilon = 0.1;
  double p1 = 0.8;
  double p2 = 2.0;
  double teacher_temperature = 1.0;
  std::string teacher;  // checkpoint; empty means the exact posterior
  std::string data;
  std::uint64_t seed = 0;
  std::string init;
};

Matrix TeacherProbs(const exp::ExperimentConfig& cfg, const TrainOptions& o, const Matrix& x) {
  if (o.teacher.empty()) {
    return calib::ApplyTemperature(synth::BayesPosterior(cfg.generative_model, x),
                                   o.teacher_temperature);
  }
  return nn::Forward(nn::LoadCheckpoint(o.teacher), x, o.teacher_temperature);
}

smoothing::TargetMatrix BuildTargets(const exp::ExperimentConfig& cfg, const TrainOptions& o,
                                     smoothing::Strategy strategy, const synth::LabeledDataset& d,
                                     const Matrix& train_x, std::uint64_t seed) {
  using smoothing::Strategy;
  const int k = cfg.generative_model.num_classes();
  smoothing::CurveParams curve{cfg.curve_family, o.p1, o.p2, cfg.curve_cap};
  auto teacher = [&] {
    return smoothing::TeacherPredictions{TeacherProbs(cfg, o, d.features), o.teacher_temperature};
  };
  switch (strategy) {
    case Strategy::kNone:
    case Strategy::kBsSoft:
      return smoothing::HardTargets(d.labels, k);
    case Strategy::kLs:
      return smoothing::StandardLs(d.labels, k, smoothing::SmoothingFactor(o.epsilon));
    case Strategy::kLsFixed:
      return smoothing::StandardLs(d.labels, k,
                                   smoothing::SmoothingFactor(cfg.grids.fixed_epsilon));
    case Strategy::kIls1:
      return smoothing::Ils1Targets(d.labels, k, teacher(), curve);
    case Strategy::kIls2:
      return smoothing::Ils2Targets(d.labels, k, teacher(), smoothing::SmoothingFactor(o.epsilon));
    case Strategy::kIls:
      return smoothing::IlsTargets(d.labels, k, teacher(), curve);
    case Strategy::kCls:
      return smoothing::ClsTargets(train_x, d.labels, k, smoothing::SmoothingFactor(o.epsilon));
    case Strategy::kBeta: {
      auto params = cfg.beta;
      params.target_epsilon = o.epsilon;
      return smoothing::BetaTargets(d.labels, k, params, seed);
    }
  }
  throw ConfigError("unhandled strategy");
}

int RunTrain(const Common& c, const TrainOptions& o) {
  const auto cfg = LoadConfig(c);
  const auto data = LoadSplits(cfg, o.data, o.seed);
  const auto strategy = smoothing::ParseStrategy(o.strategy);
  const auto init = o.init.empty() ? cfg.init : nn::ParseInitScheme(o.init);
  auto arch = cfg.architecture;
  arch.num_classes = cfg.generative_model.num_classes();
  const auto initial =
      nn::NetworkModel::Initialize(arch, MixSeed(o.seed, exp::kInitStream), init);

  const auto train_targets =
      BuildTargets(cfg, o, strategy, data.train, data.train.features, MixSeed(o.seed, exp::kBetaTrainStream));
  const auto val_targets = BuildTargets(cfg, o, strategy, data.validation, data.train.features,
                                        MixSeed(o.seed, exp::kBetaValidationStream));
  const nn::ValidationSet val{data.validation.features, val_targets, &data.validation.labels};
  nn::TrainResult result =
      strategy == smoothing::Strategy::kBsSoft
          ? nn::Train(initial, data.train.features,
                      smoothing::BsSoftProvider(data.train.features, data.train.labels,
                                                arch.num_classes, cfg.bs_soft_beta),
                      val, cfg.train)
          : nn::Train(initial, data.train.features, train_targets, val, cfg.train);

  const Matrix val_logits = nn::Logits(result.model, data.validation.features);
  const auto fit = calib::FitTemperature(val_logits, data.validation.labels);
  nlohmann::json report;
  if (data.test.size() > 0) {
    const Matrix logits = nn::Logits(result.model, data.test.features);
    report["test"] =
        calib::Evaluate(Softmax(logits), data.test.labels, cfg.bins, &data.test.density_tags)
            .ToJson();
    auto scaled = calib::Evaluate(Softmax(logits, fit.temperature), data.test.labels, cfg.bins,
                                  &data.test.density_tags);
    scaled.fitted_temperature = fit.temperature;
    report["test_temperature_scaled"] = scaled.ToJson();
  }
  report["strategy"] = o.strategy;
  report["seed"] = o.seed;
  report["best_epoch"] = result.log.best_epoch;
  report["best_val_loss"] = result.log.best_val_loss;
  report["epochs_run"] = static_cast<int>(result.log.epochs.size()) - 1;
  report["fitted_temperature"] = fit.temperature;

  const std::string model_path = (std::filesystem::path(cfg.output_dir) / "model.bin").string();
  std::filesystem::create_directories(cfg.output_dir);
  nlohmann::json meta = {{"strategy", o.strategy},
                         {"epsilon", o.epsilon},
                         {"p1", o.p1},
                         {"p2", o.p2},
                         {"teacher_temperature", o.teacher_temperature},
                         {"init", nn::ToString(init)},
                         {"train", nn::ToJson(cfg.train)}};
  nn::SaveCheckpoint(model_path, result.model, meta);
  WriteJson((std::filesystem::path(cfg.output_dir) / "report.json").string(), report);
  spdlog::info("wrote {} and report.json", model_path);
  return kExitOk;
}

int RunGenerate(const Common& c, std::uint64_t seed, const std::string& out_path) {
  const auto cfg = LoadConfig(c);
  const auto s = synth::SampleSplits(cfg.generative_model, cfg.sizes, seed);
  const std::vector<synth::LabeledDataset> parts = {s.train, s.validation, s.test};
  if (out_path.empty() || out_path == "-") {
    synth::WriteCsv(std::cout, parts);
    return kExitOk;
  }
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  synth::WriteCsv(out, parts);
  return kExitOk;
}

int RunEvaluate(const Common& c, const std::string& checkpoint, const std::string& data_path,
                const std::string& split, int bins, const std::string& reliability) {
  std::ifstream in(data_path);
  if (!in) throw std::runtime_error("cannot open " + data_path);
  const auto data = synth::ReadCsv(in, split);
  if (data.size() == 0) throw ConfigError("no rows for split '" + split + "' in " + data_path);
  const auto model = nn::LoadCheckpoint(checkpoint);
  calib::BinningSpec spec;
  spec.num_bins = bins;
  spec.Validate();
  const auto report = calib::Evaluate(nn::Forward(model, data.features), data.labels, spec,
                                      &data.density_tags);
  if (!reliability.empty()) {
    std::ofstream out(reliability);
    if (!out) throw std::runtime_error("cannot write " + reliability);
    calib::WriteReliabilityCsv(out, report);
  }
  WriteJson(c.out, report.ToJson());
  return kExitOk;
}

int FinishSuite(const exp::ExperimentConfig& cfg, const exp::SuiteResult& r) {
  exp::WriteSuite(cfg.output_dir, r);
  spdlog::info("results in {}", cfg.output_dir);
  for (const auto& f : r.table.failures) spdlog::error("failed run: {}", f);
  return r.table.failures.empty() ? kExitOk : kExitVerdict;
}

int RunSweep(const Common& c, bool surface) {
  const auto cfg = LoadConfig(c);
  exp::SuiteTasks tasks;
  tasks.sweep = surface;
  return FinishSuite(cfg, exp::RunSuite(cfg, tasks));
}

int RunCurve(const Common& c) {
  const auto cfg = LoadConfig(c);
  exp::SuiteTasks tasks;
  tasks.methods = false;
  tasks.curve = true;
  const auto r = exp::RunSuite(cfg, tasks);
  if (!r.curve.empty()) {
    const auto& low = exp::CurveMinimum(r.curve);
    spdlog::info("curve minimum: epsilon {:.4f} at teacher probability {:.3f}", low.mean_epsilon,
                 low.center);
  }
  return FinishSuite(cfg, r);
}

int RunDistill(const Common& c, const std::string& teacher_path, const std::string& tag,
               const std::string& data_path, std::uint64_t seed) {
  const auto cfg = LoadConfig(c);
  const auto data = LoadSplits(cfg, data_path, seed);
  const auto teacher = nn::LoadCheckpoint(teacher_path);
  const auto result = distill::Distill(teacher, teacher.arch, MixSeed(seed, exp::kStudentStream),
                                       data, cfg.distill, cfg.train, cfg.bins);
  std::filesystem::create_directories(cfg.output_dir);
  const auto student_path = (std::filesystem::path(cfg.output_dir) / "student.bin").string();
  nn::SaveCheckpoint(student_path, result.student,
                     {{"teacher", teacher_path}, {"teacher_strategy", tag}});
  nlohmann::json report = {{"teacher", teacher_path},
                           {"teacher_strategy", tag},
                           {"seed", seed},
                           {"best_epoch", result.log.best_epoch},
                           {"test", result.report.ToJson()}};
  WriteJson((std::filesystem::path(cfg.output_dir) / "report.json").string(), report);
  spdlog::info("student accuracy {:.4f}, cwECE {:.4f}", result.report.accuracy,
               result.report.cwece);
  return kExitOk;
}

int RunReproduce(const Common& c, const std::string& table_id) {
  auto cfg = LoadConfig(c);
  if (c.out.empty()) cfg.output_dir = (std::filesystem::path(cfg.output_dir) / table_id).string();
  const auto rep = exp::ReproduceTable(table_id, cfg);
  exp::WriteSuite(cfg.output_dir, rep.result);
  WriteJson((std::filesystem::path(cfg.output_dir) / "verdict.json").string(),
            rep.verdict.ToJson());
  for (const auto& check : rep.verdict.checks) {
    std::cout << (check.passed ? "PASS " : "FAIL ") << check.name << ": " << check.detail << '\n';
  }
  std::cout << table_id << ": " << (rep.verdict.passed() ? "PASS" : "FAIL") << '\n';
  return rep.verdict.passed() ? kExitOk : kExitVerdict;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Instance-based label smoothing experiments on synthetic data"};
  app.require_subcommand(1);
  Common common;
  app.add_option("-c,--config", common.config_path, "JSON experiment config")
      ->check(CLI::ExistingFile);
  app.add_option("-o,--out", common.out, "output directory (file for evaluate)");
  app.add_option("--log-level", common.log_level, "trace, debug, info, warn, error");

  std::uint64_t seed = 0;
  std::string out_csv;
  auto* generate = app.add_subcommand("generate", "sample train/validation/test splits to CSV");
  generate->add_option("--seed", seed, "replicate seed");
  generate->add_option("--csv", out_csv, "output CSV (stdout when omitted)");

  TrainOptions train_opts;
  auto* train = app.add_subcommand("train", "train one network with a smoothing strategy");
  train->add_option("--strategy", train_opts.strategy,
                    "none, ls, ls_fixed, ils1, ils2, ils, cls, bs_soft, beta");
  train->add_option("--epsilon", train_opts.epsilon, "smoothing factor");
  train->add_option("--p1", train_opts.p1, "curve shift");
  train->add_option("--p2", train_opts.p2, "curve coefficient");
  train->add_option("--teacher-temperature", train_opts.teacher_temperature);
  train->add_option("--teacher", train_opts.teacher,
                    "teacher checkpoint (default: exact posterior)");
  train->add_option("--data", train_opts.data, "CSV from `generate` (default: sample)");
  train->add_option("--seed", train_opts.seed, "replicate seed");
  train->add_option("--init", train_opts.init, "fan_in_uniform or he_uniform");

  std::string checkpoint;
  std::string data_path;
  std::string split = "test";
  int bins = 15;
  std::string reliability;
  auto* evaluate = app.add_subcommand("evaluate", "calibration report of a checkpoint");
  evaluate->add_option("--checkpoint", checkpoint)->required();
  evaluate->add_option("--data", data_path, "CSV from `generate`")->required();
  evaluate->add_option("--split", split);
  evaluate->add_option("--bins", bins);
  evaluate->add_option("--reliability", reliability, "per-bin CSV output");

  bool surface = false;
  auto* sweep = app.add_subcommand("sweep", "grid search of every configured method");
  sweep->add_flag("--surface", surface, "also sweep the P1 x P2 loss surface");

  auto* curve = app.add_subcommand("curve", "best smoothing factor per teacher probability");

  std::string teacher_path;
  std::string teacher_tag = "unknown";
  auto* distill_cmd = app.add_subcommand("distill", "self-distill a student from a teacher");
  distill_cmd->add_option("--teacher", teacher_path, "teacher checkpoint")->required();
  distill_cmd->add_option("--teacher-strategy", teacher_tag, "strategy the teacher used");
  distill_cmd->add_option("--data", data_path, "CSV from `generate` (default: sample)");
  distill_cmd->add_option("--seed", seed, "replicate seed");

  std::string table_id;
  auto* reproduce = app.add_subcommand("reproduce", "run a table and judge it");
  reproduce->add_option("table_id", table_id, "table1, table2 or table3_appendix")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  spdlog::set_level(spdlog::level::from_str(common.log_level));

  try {
    if (*generate) return RunGenerate(common, seed, out_csv);
    if (*train) return RunTrain(common, train_opts);
    if (*evaluate) return RunEvaluate(common, checkpoint, data_path, split, bins, reliability);
    if (*sweep) return RunSweep(common, surface);
    if (*curve) return RunCurve(common);
    if (*distill_cmd) return RunDistill(common, teacher_path, teacher_tag, data_path, seed);
    if (*reproduce) return RunReproduce(common, table_id);
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
