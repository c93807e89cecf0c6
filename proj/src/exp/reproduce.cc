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

#include "ilsmooth/exp/reproduce.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include <fmt/format.h>

namespace ilsmooth::exp {
namespace {

Check Band(const std::string& name, double observed, double expected, double tolerance) {
  return {name, std::abs(observed - expected) <= tolerance,
          fmt::format("observed {:.4f}, expected {:.4f} +/- {}", observed, expected, tolerance)};
}

Check AtMost(const std::string& name, double observed, double bound) {
  return {name, observed <= bound, fmt::format("observed {:.4f}, bound <= {}", observed, bound)};
}

Check Less(const std::string& name, double lhs, double rhs, const std::string& lhs_name,
           const std::string& rhs_name) {
  return {name, lhs < rhs, fmt::format("{} {:.4f} vs {} {:.4f}", lhs_name, lhs, rhs_name, rhs)};
}

// Guards against missing groups so that a failed method yields a failed
// check instead of an exception.
template <typename Fn>
Check Guarded(const std::string& name, Fn fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    return {name, false, e.what()};
  }
}

void CheckBayes(const ResultTable& t, std::vector<Check>* out) {
  out->push_back(Guarded("bayes_accuracy", [&] {
    return Band("bayes_accuracy", t.Average("bayes", false).accuracy, 0.8198, 0.01);
  }));
  out->push_back(Guarded("bayes_cross_entropy", [&] {
    return Band("bayes_cross_entropy", t.Average("bayes", false).cross_entropy, 0.4444, 0.02);
  }));
  out->push_back(Guarded("bayes_ece", [&] {
    return AtMost("bayes_ece", t.Average("bayes", false).ece, 0.015);
  }));
  out->push_back(Guarded("bayes_cwece", [&] {
    return AtMost("bayes_cwece", t.Average("bayes", false).cwece, 0.035);
  }));
}

}  // namespace

bool Verdict::passed() const {
  for (const auto& c : checks) {
    if (!c.passed) return false;
  }
  return failures.empty();
}

nlohmann::json Verdict::ToJson() const {
  nlohmann::json checks_json = nlohmann::json::array();
  for (const auto& c : checks) {
    checks_json.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  }
  return {{"table_id", table_id},
          {"passed", passed()},
          {"checks", checks_json},
          {"failures", failures}};
}

SuiteTasks TasksFor(const std::string& table_id, ExperimentConfig* cfg) {
  SuiteTasks tasks;
  if (table_id == "table1") {
    cfg->methods = {Method::kBayes, Method::kNoLs, Method::kLs, Method::kLsFixed};
    tasks.subset_tuning = true;
  } else if (table_id == "table2") {
    cfg->methods = {Method::kBayes, Method::kNoLs, Method::kLs};
    tasks.distill = true;
  } else if (table_id == "table3_appendix") {
    cfg->methods = {Method::kBayes, Method::kNoLs, Method::kLs, Method::kLsFixed,
                    Method::kIls1, Method::kIls2, Method::kIls};
  } else {
    throw ConfigError("unknown table id '" + table_id +
                      "' (expected table1, table2 or table3_appendix)");
  }
  return tasks;
}

Verdict Judge(const std::string& table_id, const SuiteResult& result) {
  const ResultTable& t = result.table;
  Verdict v;
  v.table_id = table_id;
  v.failures = t.failures;
  if (table_id == "table1") {
    CheckBayes(t, &v.checks);
    v.checks.push_back(Guarded("ls_accuracy_above_nols", [&] {
      return Less("ls_accuracy_above_nols", t.Average("nols", false).accuracy,
                  t.Average("ls", false).accuracy, "nols", "ls");
    }));
    v.checks.push_back(Guarded("ls_ece_below_nols", [&] {
      return Less("ls_ece_below_nols", t.Average("ls", false).ece, t.Average("nols", false).ece,
                  "ls", "nols");
    }));
    v.checks.push_back(Guarded("nols_temps_cwece_below_ls", [&] {
      return Less("nols_temps_cwece_below_ls", t.Average("nols", true).cwece,
                  t.Average("ls", false).cwece, "nols+temps", "ls");
    }));
    v.checks.push_back(Guarded("ls_sparse_gain", [&] {
      const double gain =
          *t.Average("ls", false).sparse_accuracy - *t.Average("nols", false).sparse_accuracy;
      return Check{"ls_sparse_gain", gain >= 0.03,
                   fmt::format("ls - nols sparse accuracy {:.4f}, required >= 0.03", gain)};
    }));
    v.checks.push_back(Guarded("subset_epsilon_gap", [&] {
      const double dense = *t.Average("ls_dense", false).epsilon;
      const double sparse = *t.Average("ls_sparse", false).epsilon;
      return Check{"subset_epsilon_gap", sparse - dense >= 0.03,
                   fmt::format("dense eps {:.4f}, sparse eps {:.4f}, required gap >= 0.03", dense,
                               sparse)};
    }));
  } else if (table_id == "table2") {
    v.checks.push_back(Guarded("student_bayes_accuracy", [&] {
      return Band("student_bayes_accuracy", t.Average("student_bayes", false).accuracy, 0.8192,
                  0.015);
    }));
    v.checks.push_back(Guarded("student_cwece_nols_teacher_wins", [&] {
      std::map<std::uint64_t, double> ls;
      for (const auto& r : t.Select("student_ls", false)) ls[r.seed] = r.cwece;
      int wins = 0;
      int pairs = 0;
      for (const auto& r : t.Select("student_nols", false)) {
        auto it = ls.find(r.seed);
        if (it == ls.end()) continue;
        ++pairs;
        if (r.cwece < it->second) ++wins;
      }
      if (pairs == 0) throw ConfigError("no paired student rows");
      const double frac = static_cast<double>(wins) / pairs;
      return Check{"student_cwece_nols_teacher_wins", frac >= 0.6,
                   fmt::format("NoLS teacher better in {}/{} replicates ({:.2f}), required >= 0.60",
                               wins, pairs, frac)};
    }));
  } else if (table_id == "table3_appendix") {
    CheckBayes(t, &v.checks);
    v.checks.push_back(Guarded("ils1_cross_entropy_below_ls", [&] {
      return Less("ils1_cross_entropy_below_ls", t.Average("ils1", false).cross_entropy,
                  t.Average("ls", false).cross_entropy, "ils1", "ls");
    }));
    v.checks.push_back(Guarded("ils_cwece_below_ls", [&] {
      return Less("ils_cwece_below_ls", t.Average("ils", false).cwece,
                  t.Average("ls", false).cwece, "ils", "ls");
    }));
    v.checks.push_back(Guarded("ils_accuracy_at_least_ls", [&] {
      const double ils = t.Average("ils", false).accuracy;
      const double ls = t.Average("ls", false).accuracy;
      return Check{"ils_accuracy_at_least_ls", ils >= ls,
                   fmt::format("ils {:.4f} vs ls {:.4f}", ils, ls)};
    }));
  } else {
    throw ConfigError("unknown table id '" + table_id + "'");
  }
  return v;
}

Reproduction ReproduceTable(const std::string& table_id, ExperimentConfig cfg) {
  const SuiteTasks tasks = TasksFor(table_id, &cfg);
  Reproduction r;
  r.result = RunSuite(cfg, tasks);
  r.verdict = Judge(table_id, r.result);
  return r;
}

void WriteSuite(const std::string& dir, const SuiteResult& result) {
  std::filesystem::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream out(std::filesystem::path(dir) / name);
    if (!out) throw std::runtime_error("cannot write " + name + " in " + dir);
    return out;
  };
  {
    auto out = open("rows.csv");
    WriteRowsCsv(out, result.table.rows);
  }
  {
    auto out = open("averages.csv");
    WriteRowsCsv(out, result.table.Averages());
  }
  {
    auto out = open("failures.txt");
    for (const auto& f : result.table.failures) out << f << '\n';
  }
  if (!result.curve.empty()) {
    auto out = open("curve.csv");
    WriteCurveCsv(out, result.curve);
  }
  if (!result.sweep.empty()) {
    auto out = open("sweep.csv");
    WriteSweepCsv(out, result.sweep);
  }
}

}  // namespace ilsmooth::exp
