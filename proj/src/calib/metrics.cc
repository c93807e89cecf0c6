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

#include "ilsmooth/calib/metrics.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>

namespace ilsmooth::calib {
namespace {

constexpr double kLogFloor = 1e-12;

void CheckInputs(const Matrix& predictions, const Labels& labels) {
  if (predictions.rows() == 0) throw ShapeError("empty prediction matrix");
  if (static_cast<std::size_t>(predictions.rows()) != labels.size()) {
    throw ShapeError("prediction rows and labels differ in length");
  }
  for (int y : labels) {
    if (y < 0 || y >= predictions.cols()) throw ShapeError("label out of range");
  }
}

struct BinAccumulator {
  std::vector<long> count;
  std::vector<double> predicted;
  std::vector<double> observed;

  explicit BinAccumulator(int n) : count(n, 0), predicted(n, 0.0), observed(n, 0.0) {}

  void Add(int bin, double p, double hit) {
    ++count[bin];
    predicted[bin] += p;
    observed[bin] += hit;
  }

  double Error() const {
    long total = 0;
    for (long c : count) total += c;
    if (total == 0) return 0.0;
    double err = 0.0;
    for (std::size_t b = 0; b < count.size(); ++b) {
      if (count[b] == 0) continue;
      const double c = static_cast<double>(count[b]);
      err += (c / static_cast<double>(total)) *
             std::abs(observed[b] / c - predicted[b] / c);
    }
    return err;
  }

  std::vector<ReliabilityBin> Table() const {
    std::vector<ReliabilityBin> out;
    for (std::size_t b = 0; b < count.size(); ++b) {
      ReliabilityBin r;
      r.index = static_cast<int>(b);
      r.count = count[b];
      if (count[b] > 0) {
        r.mean_predicted = predicted[b] / static_cast<double>(count[b]);
        r.observed = observed[b] / static_cast<double>(count[b]);
      }
      out.push_back(r);
    }
    return out;
  }
};

BinAccumulator AccumulateConfidence(const Matrix& predictions,
                                    const Labels& labels,
                                    const BinningSpec& bins) {
  BinAccumulator acc(bins.num_bins);
  const auto predicted = ArgmaxRows(predictions);
  for (Eigen::Index i = 0; i < predictions.rows(); ++i) {
    const double conf = predictions(i, predicted[i]);
    acc.Add(bins.BinOf(conf), conf, predicted[i] == labels[i] ? 1.0 : 0.0);
  }
  return acc;
}

BinAccumulator AccumulateClass(const Matrix& predictions, const Labels& labels,
                               const BinningSpec& bins, int j) {
  BinAccumulator acc(bins.num_bins);
  for (Eigen::Index i = 0; i < predictions.rows(); ++i) {
    const double p = predictions(i, j);
    acc.Add(bins.BinOf(p), p, labels[i] == j ? 1.0 : 0.0);
  }
  return acc;
}

nlohmann::json BinsToJson(const std::vector<ReliabilityBin>& bins) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& b : bins) {
    arr.push_back({{"bin", b.index},
                   {"count", b.count},
                   {"mean_predicted", b.mean_predicted},
                   {"observed", b.observed}});
  }
  return arr;
}

}  // namespace

void BinningSpec::Validate() const {
  if (num_bins < 1) throw ConfigError("num_bins must be >= 1");
}

int BinningSpec::BinOf(double p) const {
  int idx = static_cast<int>(std::ceil(p * num_bins)) - 1;
  idx = std::clamp(idx, 0, num_bins - 1);
  // Correct for rounding in p * N so that values on an edge n/N (as computed
  // by division) land in the lower bin, and values just above move up.
  if (idx > 0 && p <= LowerEdge(idx)) --idx;
  if (idx < num_bins - 1 && p > UpperEdge(idx)) ++idx;
  return idx;
}

double Ece(const Matrix& predictions, const Labels& labels,
           const BinningSpec& bins) {
  bins.Validate();
  CheckInputs(predictions, labels);
  return AccumulateConfidence(predictions, labels, bins).Error();
}

double Cwece(const Matrix& predictions, const Labels& labels,
             const BinningSpec& bins) {
  bins.Validate();
  CheckInputs(predictions, labels);
  double total = 0.0;
  for (Eigen::Index j = 0; j < predictions.cols(); ++j) {
    total += AccumulateClass(predictions, labels, bins, static_cast<int>(j)).Error();
  }
  return total / static_cast<double>(predictions.cols());
}

std::vector<ReliabilityBin> ConfidenceReliability(const Matrix& predictions,
                                                  const Labels& labels,
                                                  const BinningSpec& bins) {
  bins.Validate();
  CheckInputs(predictions, labels);
  return AccumulateConfidence(predictions, labels, bins).Table();
}

std::vector<std::vector<ReliabilityBin>> ClasswiseReliability(
    const Matrix& predictions, const Labels& labels, const BinningSpec& bins) {
  bins.Validate();
  CheckInputs(predictions, labels);
  std::vector<std::vector<ReliabilityBin>> out;
  for (Eigen::Index j = 0; j < predictions.cols(); ++j) {
    out.push_back(
        AccumulateClass(predictions, labels, bins, static_cast<int>(j)).Table());
  }
  return out;
}

double Accuracy(const Matrix& predictions, const Labels& labels) {
  CheckInputs(predictions, labels);
  const auto predicted = ArgmaxRows(predictions);
  long hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predicted[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double CrossEntropy(const Matrix& predictions, const Labels& labels) {
  CheckInputs(predictions, labels);
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    total -= std::log(std::max(predictions(i, labels[i]), kLogFloor));
  }
  return total / static_cast<double>(labels.size());
}

nlohmann::json CalibrationReport::ToJson() const {
  nlohmann::json j = {{"num_instances", num_instances},
                      {"accuracy", accuracy},
                      {"cross_entropy", cross_entropy},
                      {"ece", ece},
                      {"cwece", cwece},
                      {"num_bins", bins.num_bins},
                      {"per_bin", BinsToJson(per_bin)}};
  nlohmann::json cls = nlohmann::json::array();
  for (const auto& c : per_class) cls.push_back(BinsToJson(c));
  j["per_class"] = cls;
  j["dense_accuracy"] = dense_accuracy ? nlohmann::json(*dense_accuracy) : nlohmann::json(nullptr);
  j["sparse_accuracy"] = sparse_accuracy ? nlohmann::json(*sparse_accuracy) : nlohmann::json(nullptr);
  j["fitted_temperature"] =
      fitted_temperature ? nlohmann::json(*fitted_temperature) : nlohmann::json(nullptr);
  return j;
}

CalibrationReport Evaluate(const Matrix& predictions, const Labels& labels,
                           const BinningSpec& bins,
                           const std::vector<DensityTag>* density_tags) {
  bins.Validate();
  CheckInputs(predictions, labels);
  if (density_tags != nullptr && density_tags->size() != labels.size()) {
    throw ShapeError("density tags and labels differ in length");
  }
  CalibrationReport r;
  r.num_instances = static_cast<long>(labels.size());
  r.bins = bins;
  r.accuracy = Accuracy(predictions, labels);
  r.cross_entropy = CrossEntropy(predictions, labels);
  const BinAccumulator conf = AccumulateConfidence(predictions, labels, bins);
  r.ece = conf.Error();
  r.per_bin = conf.Table();
  double cw = 0.0;
  for (Eigen::Index j = 0; j < predictions.cols(); ++j) {
    const BinAccumulator acc =
        AccumulateClass(predictions, labels, bins, static_cast<int>(j));
    cw += acc.Error();
    r.per_class.push_back(acc.Table());
  }
  r.cwece = cw / static_cast<double>(predictions.cols());

  if (density_tags != nullptr) {
    const auto predicted = ArgmaxRows(predictions);
    long hits[2] = {0, 0};
    long total[2] = {0, 0};
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const int t = (*density_tags)[i] == DensityTag::kDense ? 0 : 1;
      ++total[t];
      hits[t] += predicted[i] == labels[i];
    }
    if (total[0] > 0) r.dense_accuracy = static_cast<double>(hits[0]) / total[0];
    if (total[1] > 0) r.sparse_accuracy = static_cast<double>(hits[1]) / total[1];
  }
  return r;
}

void WriteReliabilityCsv(std::ostream& out, const CalibrationReport& report) {
  out << "kind,class,bin,lower,upper,count,mean_predicted,observed\n";
  auto rows = [&](const char* kind, int cls,
                  const std::vector<ReliabilityBin>& bins) {
    for (const auto& b : bins) {
      out << kind << ',' << cls << ',' << b.index << ','
          << report.bins.LowerEdge(b.index) << ','
          << report.bins.UpperEdge(b.index) << ',' << b.count << ','
          << b.mean_predicted << ',' << b.observed << '\n';
    }
  };
  rows("confidence", -1, report.per_bin);
  for (std::size_t j = 0; j < report.per_class.size(); ++j) {
    rows("classwise", static_cast<int>(j), report.per_class[j]);
  }
}

RankHistograms PredictionHistograms(const Matrix& predictions, int num_bins) {
  RankHistograms h;
  h.bins.num_bins = num_bins;
  h.bins.Validate();
  const auto k = static_cast<std::size_t>(predictions.cols());
  h.counts.assign(k, std::vector<long>(num_bins, 0));
  std::vector<double> row(k);
  for (Eigen::Index i = 0; i < predictions.rows(); ++i) {
    for (std::size_t j = 0; j < k; ++j) row[j] = predictions(i, j);
    std::sort(row.begin(), row.end(), std::greater<>());
    for (std::size_t r = 0; r < k; ++r) ++h.counts[r][h.bins.BinOf(row[r])];
  }
  return h;
}

void WriteHistogramCsv(std::ostream& out, const RankHistograms& hist,
                       const std::string& series) {
  for (std::size_t r = 0; r < hist.counts.size(); ++r) {
    for (int b = 0; b < hist.bins.num_bins; ++b) {
      out << series << ',' << r + 1 << ',' << b << ','
          << hist.bins.LowerEdge(b) << ',' << hist.bins.UpperEdge(b) << ','
          << hist.counts[r][b] << '\n';
    }
  }
}

}  // namespace ilsmooth::calib
