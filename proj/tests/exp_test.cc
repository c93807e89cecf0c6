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

#include <algorithm>
#include <atomic>
#include <sstream>

#include <gtest/gtest.h>

#include "ilsmooth/exp/config.h"
#include "ilsmooth/exp/reproduce.h"
#include "ilsmooth/exp/runner.h"

namespace ilsmooth::exp {
namespace {

ExperimentConfig Tiny(std::vector<Method> methods, int replicates = 1) {
  ExperimentConfig cfg = ExperimentConfig::Canonical(replicates, 3);
  cfg.methods = std::move(methods);
  cfg.sizes = {15, 15, 100};
  cfg.architecture.hidden_layers = {8, 8};
  cfg.train.max_epochs = 15;
  cfg.train.early_stop_patience = 5;
  cfg.grids.epsilon = {0.01, 0.1};
  cfg.grids.p1 = {0.8};
  cfg.grids.p2 = {2.0};
  cfg.grids.teacher_temperature = {1.0, 2.0};
  cfg.sweep_p1 = {0.8};
  cfg.sweep_p2 = {2.0};
  return cfg;
}

bool InGrid(const std::vector<double>& grid, std::optional<double> v) {
  return v && std::find(grid.begin(), grid.end(), *v) != grid.end();
}

TEST(ConfigTest, JsonRoundTrip) {
  ExperimentConfig cfg = Tiny({Method::kLs, Method::kIls}, 4);
  cfg.ils_search = IlsSearch::kSequential;
  cfg.init = nn::InitScheme::kHeUniform;
  cfg.distill.kd_weight = 0.7;
  const nlohmann::json j = ToJson(cfg);
  EXPECT_EQ(ToJson(ExperimentConfigFromJson(j)), j);
}

TEST(ConfigTest, DefaultsAndParsing) {
  const auto cfg = ExperimentConfigFromJson(nlohmann::json::object());
  EXPECT_EQ(cfg.seeds.size(), 20u);
  EXPECT_EQ(cfg.sizes.test_per_class, 5000);
  EXPECT_EQ(cfg.grids.epsilon.front(), 0.001);
  EXPECT_EQ(cfg.grids.teacher_temperature, (std::vector<double>{1, 2, 4, 6}));
  EXPECT_EQ(ParseMethod("none"), Method::kNoLs);
  EXPECT_EQ(ParseMethod(ToString(Method::kBsSoft)), Method::kBsSoft);
  EXPECT_THROW(ParseMethod("mixup"), ConfigError);
  EXPECT_THROW(ExperimentConfigFromJson(nlohmann::json::parse(R"({"seeds": []})")), ConfigError);
  EXPECT_THROW(ExperimentConfigFromJson(nlohmann::json::parse(R"({"methods": ["bogus"]})")),
               ConfigError);
  EXPECT_EQ(SeedRange(5, 3), (std::vector<std::uint64_t>{5, 6, 7}));
}

TEST(CurveBinningTest, Range) {
  const CurveBinning b;
  EXPECT_EQ(b.BinOf(0.1), -1);
  EXPECT_EQ(b.BinOf(0.2), 0);
  EXPECT_EQ(b.BinOf(1.0), 49);
  EXPECT_NEAR(b.Center(0), 0.208, 1e-12);
}

TEST(RunnerTest, OneSeedOneMethodOneGridPointGivesTwoRows) {
  auto cfg = Tiny({Method::kLs});
  cfg.grids.epsilon = {0.05};
  const auto table = RunReplicates(cfg);
  ASSERT_EQ(table.rows.size(), 2u);
  EXPECT_FALSE(table.rows[0].temperature_scaled);
  EXPECT_TRUE(table.rows[1].temperature_scaled);
  EXPECT_EQ(*table.rows[0].epsilon, 0.05);
  EXPECT_TRUE(table.failures.empty());
}

TEST(RunnerTest, SelectionsComeFromGridsAndTempSKeepsAccuracy) {
  const auto cfg = Tiny({Method::kBayes, Method::kNoLs, Method::kLs, Method::kIls1, Method::kIls2,
                         Method::kIls});
  const auto t = RunReplicates(cfg);
  ASSERT_EQ(t.rows.size(), 12u);
  for (const auto& r : t.rows) {
    if (r.method == "ls" || r.method == "ils2") EXPECT_TRUE(InGrid(cfg.grids.epsilon, r.epsilon));
    if (r.method == "ils1" || r.method == "ils") {
      EXPECT_TRUE(InGrid(cfg.grids.p1, r.p1));
      EXPECT_TRUE(InGrid(cfg.grids.p2, r.p2));
    }
    if (r.method == "ils2" || r.method == "ils") {
      EXPECT_TRUE(InGrid(cfg.grids.teacher_temperature, r.teacher_temperature));
    }
  }
  EXPECT_EQ(t.Average("nols", false).accuracy, t.Average("nols", true).accuracy);
  EXPECT_EQ(t.Average("bayes", false).temperature, 1.0);
}

TEST(RunnerTest, AveragesAreMeans) {
  const auto t = RunReplicates(Tiny({Method::kBayes}, 3));
  const auto rows = t.Select("bayes", false);
  ASSERT_EQ(rows.size(), 3u);
  double acc = 0.0;
  for (const auto& r : rows) acc += r.accuracy;
  const auto avg = t.Average("bayes", false);
  EXPECT_NEAR(avg.accuracy, acc / 3.0, 1e-15);
  EXPECT_EQ(avg.count, 3);
  EXPECT_THROW(t.Average("ls", false), ConfigError);
}

TEST(RunnerTest, CsvIsByteDeterministic) {
  const auto cfg = Tiny({Method::kNoLs, Method::kLs});
  std::ostringstream a;
  std::ostringstream b;
  WriteRowsCsv(a, RunReplicates(cfg).rows);
  WriteRowsCsv(b, RunReplicates(cfg).rows);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')),
            "method,temperature_scaled,seed,count,accuracy,dense_accuracy,sparse_accuracy,"
            "cross_entropy,ece,cwece,validation_loss,temperature,epsilon,p1,p2,teacher_temperature");
}

TEST(RunnerTest, WorkerCountDoesNotChangeResults) {
  const auto cfg = Tiny({Method::kLs}, 2);
  setenv("ILSMOOTH_WORKERS", "1", 1);
  std::ostringstream a;
  WriteRowsCsv(a, RunReplicates(cfg).rows);
  setenv("ILSMOOTH_WORKERS", "2", 1);
  std::ostringstream b;
  WriteRowsCsv(b, RunReplicates(cfg).rows);
  unsetenv("ILSMOOTH_WORKERS");
  EXPECT_EQ(a.str(), b.str());
}

TEST(RunnerTest, SubsetCoveringAllEqualsLsSelection) {
  auto cfg = Tiny({Method::kLs});
  for (auto& cls : cfg.generative_model.classes) {
    cls.resize(1);
    cls[0].weight = 1.0;
  }
  const auto ls = RunReplicates(cfg);
  const auto dense = TuneOnSubset(cfg, DensityTag::kDense);
  ASSERT_EQ(dense.rows.size(), 2u);
  EXPECT_EQ(*dense.Average("ls_dense", false).epsilon, *ls.Average("ls", false).epsilon);
  EXPECT_EQ(dense.Average("ls_dense", false).accuracy, ls.Average("ls", false).accuracy);
  EXPECT_TRUE(TuneOnSubset(cfg, DensityTag::kSparse).rows.empty());
}

TEST(CurveTest, SingleStudentGivesFlatCurve) {
  Matrix teacher(4, 2);
  teacher << 0.9, 0.1, 0.3, 0.7, 0.55, 0.45, 0.1, 0.9;
  const Labels y = {0, 1, 0, 1};
  const std::map<double, Matrix> students = {{0.07, Matrix::Constant(4, 2, 0.5)}};
  const auto curve = EstimateSmoothingCurve(teacher, y, students);
  EXPECT_EQ(curve.size(), 3u);  // 0.9 appears twice
  for (const auto& p : curve) EXPECT_EQ(p.epsilon, 0.07);
}

TEST(CurveTest, NothingBelowRangeAndTiesToSmallerEpsilon) {
  Matrix teacher(3, 2);
  teacher << 0.1, 0.9, 0.15, 0.85, 0.6, 0.4;
  const Labels y = {0, 0, 0};
  Matrix same = Matrix::Constant(3, 2, 0.5);
  const std::map<double, Matrix> students = {{0.2, same}, {0.05, same}};
  const auto curve = EstimateSmoothingCurve(teacher, y, students);
  ASSERT_EQ(curve.size(), 1u);
  EXPECT_GE(curve[0].center, 0.2);
  EXPECT_EQ(curve[0].epsilon, 0.05);
  EXPECT_EQ(curve[0].count, 1);
  EXPECT_THROW(EstimateSmoothingCurve(teacher, y, std::map<double, Matrix>{}), ConfigError);
}

TEST(CurveTest, PicksClosestStudent) {
  Matrix teacher(2, 2);
  teacher << 0.9, 0.1, 0.902, 0.098;
  const Labels y = {0, 0};
  Matrix near = Matrix::Constant(2, 2, 0.0);
  near.col(0).setConstant(0.89);
  near.col(1).setConstant(0.11);
  const std::map<double, Matrix> students = {{0.01, Matrix::Constant(2, 2, 0.5)}, {0.1, near}};
  const auto curve = EstimateSmoothingCurve(teacher, y, students);
  ASSERT_EQ(curve.size(), 1u);
  EXPECT_EQ(curve[0].epsilon, 0.1);
  EXPECT_NEAR(curve[0].teacher_mean, 0.901, 1e-12);
  EXPECT_EQ(curve[0].count, 2);
}

TEST(CurveTest, AverageAndMinimum) {
  std::vector<std::vector<CurvePoint>> curves = {
      {{0, 0.1, 0.1, 0.03, 1}, {1, 0.3, 0.3, 0.01, 1}},
      {{1, 0.3, 0.3, 0.03, 1}, {2, 0.5, 0.5, 0.02, 1}}};
  const auto avg = AverageCurves(curves);
  ASSERT_EQ(avg.size(), 3u);
  EXPECT_NEAR(avg[1].mean_epsilon, 0.02, 1e-15);
  EXPECT_EQ(avg[1].replicates, 2);
  EXPECT_EQ(CurveMinimum(avg).bin, 1);
}

TEST(SweepTest, SingleCell) {
  const auto cells = SweepP1P2(Tiny({}), {0.8}, {2.0});
  ASSERT_EQ(cells.size(), 1u);
  EXPECT_EQ(cells[0].p1, 0.8);
  EXPECT_EQ(cells[0].p2, 2.0);
  EXPECT_EQ(cells[0].replicates, 1);
  EXPECT_GT(cells[0].mean_test_cross_entropy, 0.0);
  EXPECT_EQ(&SweepMinimum(cells), &cells[0]);
}

TEST(SuiteTest, AllTasksSmoke) {
  auto cfg = Tiny({Method::kBayes, Method::kNoLs, Method::kLs, Method::kIls}, 2);
  cfg.sweep_p1 = {0.75, 0.8};
  SuiteTasks tasks;
  tasks.subset_tuning = tasks.curve = tasks.sweep = tasks.distill = true;
  const auto r = RunSuite(cfg, tasks);
  EXPECT_TRUE(r.table.failures.empty());
  EXPECT_EQ(r.table.Select("student_bayes", false).size(), 2u);
  EXPECT_EQ(r.table.Select("student_ils", false).size(), 2u);
  EXPECT_EQ(r.table.Select("ls_dense", true).size(), 2u);
  EXPECT_EQ(r.curves.size(), 2u);
  EXPECT_FALSE(r.curve.empty());
  EXPECT_EQ(r.sweep.size(), 2u);
}

TEST(SuiteTest, OtherBaselinesRun) {
  const auto t = RunReplicates(Tiny({Method::kLsFixed, Method::kCls, Method::kBsSoft, Method::kBeta}));
  EXPECT_TRUE(t.failures.empty());
  EXPECT_EQ(t.rows.size(), 8u);
  EXPECT_EQ(*t.Average("ls_fixed", false).epsilon, 0.2);
}

TEST(ReproduceTest, UnknownTableThrows) {
  ExperimentConfig cfg = Tiny({});
  EXPECT_THROW(TasksFor("table9", &cfg), ConfigError);
  EXPECT_THROW(ReproduceTable("table9", cfg), ConfigError);
  EXPECT_THROW(Judge("table9", SuiteResult{}), ConfigError);
}

ResultRow Row(std::string method, bool ts, std::uint64_t seed, double acc, double ece, double cw) {
  ResultRow r;
  r.method = std::move(method);
  r.temperature_scaled = ts;
  r.seed = seed;
  r.accuracy = acc;
  r.cross_entropy = 0.5;
  r.ece = ece;
  r.cwece = cw;
  return r;
}

TEST(ReproduceTest, JudgeOrderingChecks) {
  SuiteResult s;
  auto& rows = s.table.rows;
  rows.push_back(Row("student_bayes", false, 0, 0.82, 0.01, 0.02));
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    rows.push_back(Row("student_nols", false, seed, 0.78, 0.02, seed < 3 ? 0.05 : 0.09));
    rows.push_back(Row("student_ls", false, seed, 0.79, 0.02, 0.07));
  }
  const Verdict v = Judge("table2", s);
  ASSERT_EQ(v.checks.size(), 2u);
  EXPECT_TRUE(v.checks[0].passed);
  EXPECT_TRUE(v.checks[1].passed);  // 3 of 5
  EXPECT_TRUE(v.passed());

  s.table.failures.push_back("seed 1 ls: diverged");
  EXPECT_FALSE(Judge("table2", s).passed());

  SuiteResult empty;
  const Verdict missing = Judge("table1", empty);
  for (const auto& c : missing.checks) EXPECT_FALSE(c.passed) << c.name;
  EXPECT_FALSE(missing.ToJson().at("passed").get<bool>());
}

TEST(ParallelForTest, CoversAllAndRethrowsFirst) {
  std::vector<std::atomic<int>> hits(50);
  ParallelFor(50, 3, [&](std::size_t i) { hits[i]++; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  try {
    ParallelFor(10, 2, [](std::size_t i) {
      if (i == 4 || i == 7) throw std::runtime_error("fail " + std::to_string(i));
    });
    FAIL() << "expected an exception";
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "fail 4");
  }
}

}  // namespace
}  // namespace ilsmooth::exp
