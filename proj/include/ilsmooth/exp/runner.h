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

#ifndef ILSMOOTH_EXP_RUNNER_H_
#define ILSMOOTH_EXP_RUNNER_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ilsmooth/common.h"
#include "ilsmooth/exp/config.h"
#include "ilsmooth/nn/network.h"

namespace ilsmooth::exp {

// Sub-stream offsets mixed into a replicate seed. Data sampling uses
// synth::SampleSplits on the replicate seed itself.
inline constexpr std::uint64_t kInitStream = 16;
inline constexpr std::uint64_t kStudentStream = 17;
inline constexpr std::uint64_t kBetaTrainStream = 18;
inline constexpr std::uint64_t kBetaValidationStream = 19;

// One evaluated model on one replicate's test split.
struct ResultRow {
  std::string method;
  bool temperature_scaled = false;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  std::optional<double> dense_accuracy;
  std::optional<double> sparse_accuracy;
  double cross_entropy = 0.0;
  double ece = 0.0;
  double cwece = 0.0;
  // Hard-label validation NLL at the reported temperature.
  double validation_loss = 0.0;
  double temperature = 1.0;
  std::optional<double> epsilon;
  std::optional<double> p1;
  std::optional<double> p2;
  std::optional<double> teacher_temperature;
  int count = 1;  // rows averaged into this one
};

struct ResultTable {
  std::vector<ResultRow> rows;
  std::vector<std::string> failures;

  // Rows of one (method, temperature_scaled) group.
  std::vector<ResultRow> Select(const std::string& method, bool temperature_scaled) const;
  // Arithmetic means per (method, temperature_scaled), in order of first
  // appearance. Optional fields are averaged over the rows that carry them.
  std::vector<ResultRow> Averages() const;
  // Average of one group; throws ConfigError if the group is empty.
  ResultRow Average(const std::string& method, bool temperature_scaled) const;
};

// Shortest round-trip formatting; identical tables give identical bytes.
void WriteRowsCsv(std::ostream& out, const std::vector<ResultRow>& rows);

// Point of the best-smoothing-factor curve for one teacher-probability bin.
struct CurvePoint {
  int bin = 0;
  double center = 0.0;
  double teacher_mean = 0.0;  // mean teacher true-class probability in the bin
  double epsilon = 0.0;       // chosen smoothing factor
  int count = 0;              // instances in the bin
};

// For each bin of teacher true-class probabilities, picks the epsilon whose
// student has the mean predicted true-class probability closest to the
// teacher's mean over the bin's instances. Ties go to the smaller epsilon.
// Instances outside the binning range are discarded and empty bins emit
// nothing. Throws ConfigError when no students are given.
std::vector<CurvePoint> EstimateSmoothingCurve(
    const Matrix& teacher_probs, const Labels& labels,
    const std::map<double, Matrix>& student_probs, const CurveBinning& bins = {});

// Same with students given as networks evaluated on `features`.
std::vector<CurvePoint> EstimateSmoothingCurve(
    const Matrix& teacher_probs, const Matrix& features, const Labels& labels,
    const std::map<double, nn::NetworkModel>& students, const CurveBinning& bins = {});

// Per-bin mean of the chosen epsilon across replicate curves.
struct CurveSummary {
  int bin = 0;
  double center = 0.0;
  double mean_epsilon = 0.0;
  int replicates = 0;
};
std::vector<CurveSummary> AverageCurves(const std::vector<std::vector<CurvePoint>>& curves);
// The summary entry with the smallest mean epsilon (lowest bin on ties).
const CurveSummary& CurveMinimum(const std::vector<CurveSummary>& curve);

void WriteCurveCsv(std::ostream& out, const std::vector<CurveSummary>& curve);

struct SweepCell {
  double p1 = 0.0;
  double p2 = 0.0;
  double mean_test_cross_entropy = 0.0;
  double mean_validation_loss = 0.0;
  int replicates = 0;
};

const SweepCell& SweepMinimum(const std::vector<SweepCell>& cells);
void WriteSweepCsv(std::ostream& out, const std::vector<SweepCell>& cells);

struct SuiteTasks {
  bool methods = true;        // cfg.methods
  bool subset_tuning = false; // LS tuned on dense / sparse validation subsets
  bool curve = false;         // smoothing-factor curve with the Bayes teacher
  bool sweep = false;         // ILS1 over cfg.sweep_p1 x cfg.sweep_p2
  bool distill = false;       // students of Bayes, NoLS, LS (and ILS) teachers
};

struct SuiteResult {
  // Methods use their ToString names. Subset rows are "ls_dense" and
  // "ls_sparse"; students are "student_bayes", "student_nols",
  // "student_ls" and "student_ils".
  ResultTable table;
  std::vector<std::vector<CurvePoint>> curves;  // per replicate
  std::vector<CurveSummary> curve;
  std::vector<SweepCell> sweep;
};

// Runs every replicate of `cfg` on a worker pool. Models are shared between
// tasks within a replicate (the LS grid serves LS, subset tuning, the curve
// and the LS teacher). A failed training run is listed in
// table.failures and the rest of the replicate continues.
SuiteResult RunSuite(const ExperimentConfig& cfg, const SuiteTasks& tasks);

// Per seed and method: grid search by hard-label validation NLL, then test
// rows without and with temperature scaling. With scaling, the temperature is
// fitted on validation for every grid point and the combination with the
// lowest scaled validation NLL is selected.
ResultTable RunReplicates(const ExperimentConfig& cfg);

// LS grid with selection restricted to validation instances carrying `tag`.
// Replicates whose validation split lacks the tag are skipped with a warning.
ResultTable TuneOnSubset(const ExperimentConfig& cfg, DensityTag tag);

std::vector<SweepCell> SweepP1P2(const ExperimentConfig& cfg, const std::vector<double>& p1,
                                 const std::vector<double>& p2);

// Number of worker threads: ILSMOOTH_WORKERS if set to a positive integer,
// otherwise the hardware concurrency (at least 1).
int WorkerCount();

// Calls fn(i) for i in [0, n) on `workers` threads. Exceptions escaping fn
// are rethrown after all workers finish (the first by index wins).
void ParallelFor(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace ilsmooth::exp

#endif  // ILSMOOTH_EXP_RUNNER_H_
