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

#ifndef ILSMOOTH_EXP_REPRODUCE_H_
#define ILSMOOTH_EXP_REPRODUCE_H_

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ilsmooth/exp/config.h"
#include "ilsmooth/exp/runner.h"

namespace ilsmooth::exp {

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;  // observed values against the expectation
};

struct Verdict {
  std::string table_id;
  std::vector<Check> checks;
  std::vector<std::string> failures;  // failed training runs

  bool passed() const;
  nlohmann::json ToJson() const;
};

// Table ids: "table1" (Bayes, NoLS, LS, LS-fixed, dense/sparse tuning),
// "table2" (self-distillation students of Bayes, NoLS and LS teachers) and
// "table3_appendix" (adds ILS1, ILS2 and ILS). Throws ConfigError on any
// other id.
SuiteTasks TasksFor(const std::string& table_id, ExperimentConfig* cfg);

// Band and ordering checks on a finished suite.
Verdict Judge(const std::string& table_id, const SuiteResult& result);

struct Reproduction {
  SuiteResult result;
  Verdict verdict;
};

// Runs the suite for `table_id` on `cfg` (methods are overridden to the
// table's rows) and judges it.
Reproduction ReproduceTable(const std::string& table_id, ExperimentConfig cfg);

// Writes rows.csv, averages.csv, failures.txt and, when present, curve.csv
// and sweep.csv into `dir`; creates the directory.
void WriteSuite(const std::string& dir, const SuiteResult& result);

}  // namespace ilsmooth::exp

#endif  // ILSMOOTH_EXP_REPRODUCE_H_
