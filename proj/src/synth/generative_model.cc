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

#include "ilsmooth/synth/generative_model.h"

#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace ilsmooth::synth {
namespace {

constexpr double kWeightTolerance = 1e-9;

double LogSumExp(const std::vector<double>& v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

}  // namespace

void GenerativeModel::Validate() const {
  if (classes.size() < 2) throw ConfigError("need at least two classes");
  if (class_priors.size() != classes.size()) {
    throw ConfigError("one prior per class required");
  }
  double prior_sum = 0.0;
  for (double p : class_priors) {
    if (!(p > 0.0 && p <= 1.0)) throw ConfigError("priors must lie in (0, 1]");
    prior_sum += p;
  }
  if (std::abs(prior_sum - 1.0) > kWeightTolerance) {
    throw ConfigError("class priors must sum to 1");
  }
  for (const auto& comps : classes) {
    if (comps.empty()) throw ConfigError("class without components");
    double s = 0.0;
    for (const auto& c : comps) {
      if (!(c.weight > 0.0 && c.weight <= 1.0)) {
        throw ConfigError("component weight must lie in (0, 1]");
      }
      if (!c.mean.allFinite()) throw ConfigError("non-finite component mean");
      s += c.weight;
    }
    if (std::abs(s - 1.0) > kWeightTolerance) {
      throw ConfigError("component weights of a class must sum to 1");
    }
  }
}

GenerativeModel GenerativeModel::Canonical() {
  auto cls = [](double dx, double dy, double sx, double sy) {
    return std::vector<GaussianComponent>{
        {Eigen::Vector2d(dx, dy), 0.8, DensityTag::kDense},
        {Eigen::Vector2d(sx, sy), 0.2, DensityTag::kSparse}};
  };
  GenerativeModel m;
  m.classes = {cls(-4, 1, 2, 1), cls(-4, -1, 2, -1), cls(-1, 0, 5, 0)};
  m.class_priors = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  return m;
}

std::string ToString(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "train";
}

Split ParseSplit(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "validation" || s == "val") return Split::kValidation;
  if (s == "test") return Split::kTest;
  throw ConfigError("unknown split '" + s + "'");
}

void LabeledDataset::Validate(int num_classes) const {
  const auto n = labels.size();
  if (static_cast<std::size_t>(features.rows()) != n || density_tags.size() != n) {
    throw ShapeError("dataset columns have inconsistent lengths");
  }
  for (int y : labels) {
    if (y < 0 || y >= num_classes) throw ShapeError("label out of range");
  }
}

std::vector<int> LabeledDataset::IndicesWithTag(DensityTag tag) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < density_tags.size(); ++i) {
    if (density_tags[i] == tag) out.push_back(static_cast<int>(i));
  }
  return out;
}

LabeledDataset LabeledDataset::Subset(std::span<const int> rows) const {
  LabeledDataset out;
  out.split = split;
  out.features = SelectRows(features, rows);
  for (int r : rows) {
    out.labels.push_back(labels[r]);
    out.density_tags.push_back(density_tags[r]);
  }
  return out;
}

LabeledDataset Sample(const GenerativeModel& model, int per_class,
                      std::uint64_t seed, Split split) {
  model.Validate();
  if (per_class < 1) throw ConfigError("per_class must be >= 1");
  const int k = model.num_classes();
  LabeledDataset data;
  data.split = split;
  data.features.resize(static_cast<Eigen::Index>(per_class) * k, 2);
  data.labels.reserve(data.features.rows());
  data.density_tags.reserve(data.features.rows());

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Index row = 0;
  for (int c = 0; c < k; ++c) {
    const auto& comps = model.classes[c];
    for (int i = 0; i < per_class; ++i, ++row) {
      const double u = unit(rng);
      std::size_t pick = comps.size() - 1;
      double acc = 0.0;
      for (std::size_t m = 0; m < comps.size(); ++m) {
        acc += comps[m].weight;
        if (u < acc) {
          pick = m;
          break;
        }
      }
      const double x = normal(rng);
      const double y = normal(rng);
      data.features(row, 0) = comps[pick].mean.x() + x;
      data.features(row, 1) = comps[pick].mean.y() + y;
      data.labels.push_back(c);
      data.density_tags.push_back(comps[pick].tag);
    }
  }
  return data;
}

DataSplits SampleSplits(const GenerativeModel& model, const SplitSizes& sizes,
                        std::uint64_t seed) {
  return {Sample(model, sizes.train_per_class, MixSeed(seed, 1), Split::kTrain),
          Sample(model, sizes.validation_per_class, MixSeed(seed, 2),
                 Split::kValidation),
          Sample(model, sizes.test_per_class, MixSeed(seed, 3), Split::kTest)};
}

Matrix ClassLogDensities(const GenerativeModel& model, const Matrix& features) {
  if (features.cols() != 2) throw ShapeError("features must be 2-D");
  if (!features.allFinite()) throw NumericError("non-finite query point");
  const int k = model.num_classes();
  const double log_norm = -std::log(2.0 * std::numbers::pi);
  Matrix out(features.rows(), k);
  std::vector<double> terms;
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const Eigen::Vector2d x(features(i, 0), features(i, 1));
    for (int c = 0; c < k; ++c) {
      terms.clear();
      for (const auto& comp : model.classes[c]) {
        terms.push_back(std::log(comp.weight) + log_norm -
                        0.5 * (x - comp.mean).squaredNorm());
      }
      out(i, c) = LogSumExp(terms);
    }
  }
  return out;
}

Matrix BayesPosterior(const GenerativeModel& model, const Matrix& features) {
  Matrix log_joint = ClassLogDensities(model, features);
  for (int c = 0; c < model.num_classes(); ++c) {
    log_joint.col(c).array() += std::log(model.class_priors[c]);
  }
  return Softmax(log_joint);
}

nlohmann::json ToJson(const GenerativeModel& model) {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& comps : model.classes) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : comps) {
      arr.push_back({{"mean", {c.mean.x(), c.mean.y()}},
                     {"weight", c.weight},
                     {"tag", ToString(c.tag)}});
    }
    classes.push_back(arr);
  }
  return {{"classes", classes}, {"priors", model.class_priors}};
}

GenerativeModel GenerativeModelFromJson(const nlohmann::json& j) {
  GenerativeModel m;
  for (const auto& arr : j.at("classes")) {
    std::vector<GaussianComponent> comps;
    for (const auto& c : arr) {
      const auto mean = c.at("mean").get<std::vector<double>>();
      if (mean.size() != 2) throw ConfigError("component mean must be 2-D");
      comps.push_back({Eigen::Vector2d(mean[0], mean[1]), c.at("weight").get<double>(),
                       ParseDensityTag(c.value("tag", std::string("dense")))});
    }
    m.classes.push_back(std::move(comps));
  }
  if (j.contains("priors")) {
    m.class_priors = j.at("priors").get<std::vector<double>>();
  } else {
    m.class_priors.assign(m.classes.size(), 1.0 / static_cast<double>(m.classes.size()));
  }
  m.Validate();
  return m;
}

GenerativeModel LoadGenerativeModel(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open generative model file " + path);
  return GenerativeModelFromJson(nlohmann::json::parse(in));
}

void WriteCsv(std::ostream& out, std::span<const LabeledDataset> parts) {
  out << "x1,x2,label,density_tag,split\n";
  out.precision(17);
  for (const auto& d : parts) {
    for (std::size_t i = 0; i < d.size(); ++i) {
      out << d.features(i, 0) << ',' << d.features(i, 1) << ',' << d.labels[i]
          << ',' << ToString(d.density_tags[i]) << ',' << ToString(d.split)
          << '\n';
    }
  }
}

void WriteCsv(std::ostream& out, const LabeledDataset& data) {
  WriteCsv(out, std::span<const LabeledDataset>(&data, 1));
}

LabeledDataset ReadCsv(std::istream& in, const std::string& split_filter) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty dataset CSV");
  LabeledDataset data;
  if (!split_filter.empty()) data.split = ParseSplit(split_filter);
  std::vector<std::array<double, 2>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string f[5];
    for (auto& field : f) std::getline(ss, field, ',');
    if (!split_filter.empty() && ParseSplit(f[4]) != data.split) continue;
    try {
      rows.push_back({std::stod(f[0]), std::stod(f[1])});
      data.labels.push_back(std::stoi(f[2]));
    } catch (const std::exception&) {
      throw ConfigError("malformed dataset row: " + line);
    }
    data.density_tags.push_back(ParseDensityTag(f[3]));
    if (split_filter.empty()) data.split = ParseSplit(f[4]);
  }
  data.features.resize(static_cast<Eigen::Index>(rows.size()), 2);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    data.features(i, 0) = rows[i][0];
    data.features(i, 1) = rows[i][1];
  }
  return data;
}

}  // namespace ilsmooth::synth
