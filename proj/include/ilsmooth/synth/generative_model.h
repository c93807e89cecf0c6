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

#ifndef ILSMOOTH_SYNTH_GENERATIVE_MODEL_H_
#define ILSMOOTH_SYNTH_GENERATIVE_MODEL_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ilsmooth/common.h"

namespace ilsmooth::synth {

// Bivariate Gaussian with identity covariance.
struct GaussianComponent {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  double weight = 1.0;
  DensityTag tag = DensityTag::kDense;
};

// Class-conditional mixtures of unit-covariance 2-D Gaussians.
struct GenerativeModel {
  std::vector<std::vector<GaussianComponent>> classes;
  std::vector<double> class_priors;

  int num_classes() const { return static_cast<int>(classes.size()); }

  // Throws ConfigError unless every class has components with weights in
  // (0, 1] summing to 1 and the priors form a distribution.
  void Validate() const;

  // Three classes, each an 80/20 mixture of a dense (left) and a sparse
  // (right) Gaussian: class 0 at (-4, 1)/(2, 1), class 1 at (-4, -1)/(2, -1),
  // class 2 at (-1, 0)/(5, 0). Uniform priors.
  static GenerativeModel Canonical();
};

enum class Split { kTrain, kValidation, kTest };
std::string ToString(Split split);
Split ParseSplit(const std::string& s);

struct LabeledDataset {
  Matrix features;  // N x 2
  Labels labels;
  std::vector<DensityTag> density_tags;
  Split split = Split::kTrain;

  std::size_t size() const { return labels.size(); }
  // Throws ShapeError on inconsistent lengths or out-of-range labels.
  void Validate(int num_classes) const;

  // Indices of instances carrying `tag`.
  std::vector<int> IndicesWithTag(DensityTag tag) const;
  LabeledDataset Subset(std::span<const int> rows) const;
};

// Draws exactly `per_class` instances of every class, in class order. Each
// instance picks a component by weight and samples its Gaussian; the chosen
// component's tag is recorded. Deterministic in `seed`.
LabeledDataset Sample(const GenerativeModel& model, int per_class,
                      std::uint64_t seed, Split split = Split::kTrain);

struct SplitSizes {
  int train_per_class = 50;
  int validation_per_class = 50;
  int test_per_class = 5000;
};

struct DataSplits {
  LabeledDataset train;
  LabeledDataset validation;
  LabeledDataset test;
};

// Samples the three splits from independent sub-streams of `seed`.
DataSplits SampleSplits(const GenerativeModel& model, const SplitSizes& sizes,
                        std::uint64_t seed);

// log sum_k w_ck N(x; mu_ck, I) for every class c, computed with
// log-sum-exp. Rows are instances.
Matrix ClassLogDensities(const GenerativeModel& model, const Matrix& features);

// Exact class posterior P(c | x), normalized in log space.
Matrix BayesPosterior(const GenerativeModel& model, const Matrix& features);

nlohmann::json ToJson(const GenerativeModel& model);
// {"classes": [[{"mean": [x, y], "weight": w, "tag": "dense"}, ...], ...],
//  "priors": [...]}; priors default to uniform.
GenerativeModel GenerativeModelFromJson(const nlohmann::json& j);
GenerativeModel LoadGenerativeModel(const std::string& path);

// CSV with header `x1,x2,label,density_tag,split`.
void WriteCsv(std::ostream& out, const LabeledDataset& data);
void WriteCsv(std::ostream& out, std::span<const LabeledDataset> parts);
// Reads rows of the given split (or all rows when split_filter is empty).
LabeledDataset ReadCsv(std::istream& in, const std::string& split_filter = "");

}  // namespace ilsmooth::synth

#endif  // ILSMOOTH_SYNTH_GENERATIVE_MODEL_H_
