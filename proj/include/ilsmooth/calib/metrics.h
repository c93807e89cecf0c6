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

#ifndef ILSMOOTH_CALIB_METRICS_H_
#define ILSMOOTH_CALIB_METRICS_H_

#include <iosfwd>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "ilsmooth/common.h"

namespace ilsmooth::calib {

// Equal-width bins over [0, 1]: B_1 = [0, 1/N], B_n = ((n-1)/N, n/N].
// A value exactly on an edge belongs to the lower bin.
struct BinningSpec {
  int num_bins = 15;

  void Validate() const;
  // Zero-based bin index of a probability in [0, 1].
  int BinOf(double p) const;
  double UpperEdge(int bin) const { return static_cast<double>(bin + 1) / num_bins; }
  double LowerEdge(int bin) const { return static_cast<double>(bin) / num_bins; }
};

struct ReliabilityBin {
  int index = 0;
  long count = 0;
  // Mean predicted probability in the bin (confidence for ECE bins).
  double mean_predicted = 0.0;
  // Fraction correct (ECE) or fraction of the class (cwECE); 0 if empty.
  double observed = 0.0;
};

// Confidence is the row maximum; the predicted class is the argmax with ties
// going to the lowest class index. Empty bins contribute zero.
double Ece(const Matrix& predictions, const Labels& labels,
           const BinningSpec& bins = {});

// Average over classes of the binned calibration error of column j against
// the indicator of class j.
double Cwece(const Matrix& predictions, const Labels& labels,
             const BinningSpec& bins = {});

std::vector<ReliabilityBin> ConfidenceReliability(const Matrix& predictions,
                                                  const Labels& labels,
                                                  const BinningSpec& bins);
// One bin list per class.
std::vector<std::vector<ReliabilityBin>> ClasswiseReliability(
    const Matrix& predictions, const Labels& labels, const BinningSpec& bins);

double Accuracy(const Matrix& predictions, const Labels& labels);
// Mean -log(max(p_true, 1e-12)).
double CrossEntropy(const Matrix& predictions, const Labels& labels);

struct CalibrationReport {
  long num_instances = 0;
  double accuracy = 0.0;
  double cross_entropy = 0.0;
  double ece = 0.0;
  double cwece = 0.0;
  std::optional<double> dense_accuracy;
  std::optional<double> sparse_accuracy;
  // ece, cwece and both reliability tables share these bins.
  BinningSpec bins;
  std::vector<ReliabilityBin> per_bin;
  std::vector<std::vector<ReliabilityBin>> per_class;
  std::optional<double> fitted_temperature;

  nlohmann::json ToJson() const;
};

// Aggregates all metrics. With `density_tags`, also reports accuracy on the
// dense and sparse subsets (left empty when a subset has no instances).
CalibrationReport Evaluate(const Matrix& predictions, const Labels& labels,
                           const BinningSpec& bins = {},
                           const std::vector<DensityTag>* density_tags = nullptr);

// Columns: kind,class,bin,lower,upper,count,mean_predicted,observed
// (kind is "confidence" or "classwise"; class is -1 for confidence bins).
void WriteReliabilityCsv(std::ostream& out, const CalibrationReport& report);

// counts[r][b]: number of rows whose r-th largest probability falls in bin b.
struct RankHistograms {
  BinningSpec bins;
  std::vector<std::vector<long>> counts;
};

RankHistograms PredictionHistograms(const Matrix& predictions, int num_bins);

// Columns: series,rank,bin,lower,upper,count
void WriteHistogramCsv(std::ostream& out, const RankHistograms& hist,
                       const std::string& series);

}  // namespace ilsmooth::calib

#endif  // ILSMOOTH_CALIB_METRICS_H_
