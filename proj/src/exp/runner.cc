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

#include "ilsmooth/exp/runner.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <ostream>
#include <thread>
#include <utility>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "ilsmooth/calib/metrics.h"
#include "ilsmooth/calib/temperature.h"
#include "ilsmooth/distill/distill.h"
#include "ilsmooth/nn/train.h"
#include "ilsmooth/smoothing/targets.h"
#include "ilsmooth/synth/generative_model.h"

namespace ilsmooth::exp {
namespace {

using nn::TargetMatrix;
using smoothing::SmoothingFactor;
using smoothing::TeacherPredictions;

struct Candidate {
  std::optional<double> epsilon;
  std::optional<double> p1;
  std::optional<double> p2;
  std::optional<double> teacher_temperature;
  nn::NetworkModel model;
  Matrix val_logits;
  std::optional<Matrix> test_logits;  // set when there is no network
};

struct Selection {
  std::size_t index = 0;
  double val_loss = 0.0;
  double temperature = 1.0;
};

// Lowest hard-label validation NLL, optionally after fitting a temperature,
// over the validation rows in `rows` (all when null). First wins ties.
Selection Select(const std::vector<Candidate>& cands, const Labels& val_labels,
                 const std::vector<int>* rows, bool temperature_scaled) {
  Labels labels = val_labels;
  if (rows != nullptr) {
    labels.clear();
    for (int r : *rows) labels.push_back(val_labels[r]);
  }
  Selection best;
  best.val_loss = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const Matrix logits =
        rows != nullptr ? SelectRows(cands[i].val_logits, *rows) : cands[i].val_logits;
    double loss = 0.0;
    double t = 1.0;
    if (temperature_scaled) {
      const calib::TemperatureFit fit = calib::FitTemperature(logits, labels);
      loss = fit.validation_nll_after;
      t = fit.temperature;
    } else {
      loss = calib::NllAtTemperature(logits, labels, 1.0);
    }
    if (loss < best.val_loss) best = {i, loss, t};
  }
  if (!std::isfinite(best.val_loss)) throw NumericError("no candidate has a finite validation loss");
  return best;
}

Matrix VStack(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() + b.rows(), a.cols());
  out << a, b;
  return out;
}

Labels Concat(const Labels& a, const Labels& b) {
  Labels out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

struct ReplicateOutput {
  std::vector<ResultRow> rows;
  std::vector<std::string> failures;
  std::vector<CurvePoint> curve;
  bool has_curve = false;
  // Per sweep cell (row-major over p1 x p2): test CE and validation NLL.
  std::vector<std::optional<std::pair<double, double>>> sweep;
};

bool Uses(const ExperimentConfig& cfg, Method m) {
  return std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end();
}

class Replicate {
 public:
  Replicate(const ExperimentConfig& cfg, std::uint64_t seed, ReplicateOutput* out)
      : cfg_(cfg),
        seed_(seed),
        out_(out),
        data_(synth::SampleSplits(cfg.generative_model, cfg.sizes, seed)),
        k_(cfg.generative_model.num_classes()),
        init_(nn::NetworkModel::Initialize(cfg.architecture, MixSeed(seed, kInitStream),
                                           cfg.init)) {}

  void Run(const SuiteTasks& tasks) {
    if (tasks.methods) {
      for (Method m : cfg_.methods) RunMethod(m);
    }
    if (tasks.subset_tuning) {
      RunSubset(DensityTag::kDense, "ls_dense");
      RunSubset(DensityTag::kSparse, "ls_sparse");
    }
    if (tasks.curve) RunCurve();
    if (tasks.sweep) RunSweep();
    if (tasks.distill) RunDistill();
  }

 private:
  // ---- training ----

  std::optional<Candidate> Fit(const std::string& what, Candidate c,
                               const std::function<nn::TrainResult()>& train) {
    try {
      nn::TrainResult r = train();
      c.model = std::move(r.model);
      c.val_logits = nn::Logits(c.model, data_.validation.features);
      return c;
    } catch (const std::exception& e) {
      out_->failures.push_back(fmt::format("seed {} {}: {}", seed_, what, e.what()));
      spdlog::warn("seed {} {} failed: {}", seed_, what, e.what());
      return std::nullopt;
    }
  }

  std::optional<Candidate> FitTargets(const std::string& what, Candidate c,
                                      const std::function<TargetMatrix(const Labels&, bool)>& targets) {
    return Fit(what, std::move(c), [&] {
      const TargetMatrix train_t = targets(data_.train.labels, true);
      const TargetMatrix val_t = targets(data_.validation.labels, false);
      return nn::Train(init_, data_.train.features, train_t,
                       {data_.validation.features, val_t, &data_.validation.labels},
                       cfg_.train);
    });
  }

  static void Push(std::vector<Candidate>* v, std::optional<Candidate> c) {
    if (c) v->push_back(std::move(*c));
  }

  const std::vector<Candidate>& Bayes() {
    if (!bayes_) {
      bayes_.emplace();
      Candidate c;
      c.val_logits = LogJoint(data_.validation.features);
      c.test_logits = LogJoint(data_.test.features);
      bayes_->push_back(std::move(c));
    }
    return *bayes_;
  }

  Matrix LogJoint(const Matrix& x) const {
    Matrix lj = synth::ClassLogDensities(cfg_.generative_model, x);
    for (int c = 0; c < k_; ++c) lj.col(c).array() += std::log(cfg_.generative_model.class_priors[c]);
    return lj;
  }

  const std::vector<Candidate>& NoLs() {
    if (!nols_) {
      nols_.emplace();
      Push(&*nols_, FitTargets("nols", {}, [&](const Labels& y, bool) {
             return smoothing::HardTargets(y, k_);
           }));
      if (!nols_->empty()) {
        teacher_train_logits_ = nn::Logits(nols_->front().model, data_.train.features);
        teacher_val_logits_ = nols_->front().val_logits;
        teacher_temperature_ =
            calib::FitTemperature(teacher_val_logits_, data_.validation.labels).temperature;
      }
    }
    return *nols_;
  }

  // Teacher predictions of the NoLS network on the train or validation split.
  TeacherPredictions Teacher(bool train, double temperature) {
    return TeacherPredictions::FromLogits(train ? teacher_train_logits_ : teacher_val_logits_,
                                          temperature);
  }

  bool HasTeacher() { return !NoLs().empty(); }

  const std::vector<Candidate>& LsGrid() {
    if (!ls_) {
      ls_.emplace();
      for (double e : cfg_.grids.epsilon) {
        Candidate c;
        c.epsilon = e;
        Push(&*ls_, FitTargets(fmt::format("ls eps={}", e), std::move(c),
                               [&](const Labels& y, bool) {
                                 return smoothing::StandardLs(y, k_, SmoothingFactor(e));
                               }));
      }
    }
    return *ls_;
  }

  smoothing::CurveParams Curve(double p1, double p2) const {
    return {cfg_.curve_family, p1, p2, cfg_.curve_cap};
  }

  std::optional<Candidate> Ils1(double p1, double p2) {
    const auto key = std::make_pair(p1, p2);
    auto it = ils1_cache_.find(key);
    if (it != ils1_cache_.end()) return it->second;
    std::optional<Candidate> c;
    if (HasTeacher()) {
      Candidate base;
      base.p1 = p1;
      base.p2 = p2;
      const auto params = Curve(p1, p2);
      c = FitTargets(fmt::format("ils1 p1={} p2={}", p1, p2), std::move(base),
                     [&](const Labels& y, bool train) {
                       return smoothing::Ils1Targets(y, k_, Teacher(train, teacher_temperature_),
                                                     params);
                     });
    }
    ils1_cache_.emplace(key, c);
    return c;
  }

  const std::vector<Candidate>& Ils1Grid() {
    if (!ils1_) {
      ils1_.emplace();
      for (double p1 : cfg_.grids.p1) {
        for (double p2 : cfg_.grids.p2) Push(&*ils1_, Ils1(p1, p2));
      }
    }
    return *ils1_;
  }

  std::vector<Candidate> Ils2Grid() {
    std::vector<Candidate> out;
    if (!HasTeacher()) return out;
    for (double e : cfg_.grids.epsilon) {
      for (double t : cfg_.grids.teacher_temperature) {
        Candidate c;
        c.epsilon = e;
        c.teacher_temperature = t;
        Push(&out, FitTargets(fmt::format("ils2 eps={} T={}", e, t), std::move(c),
                              [&](const Labels& y, bool train) {
                                return smoothing::Ils2Targets(y, k_, Teacher(train, t),
                                                              SmoothingFactor(e));
                              }));
      }
    }
    return out;
  }

  const std::vector<Candidate>& IlsGrid() {
    if (ils_) return *ils_;
    ils_.emplace();
    if (!HasTeacher()) return *ils_;
    std::vector<std::pair<double, double>> shapes;
    if (cfg_.ils_search == IlsSearch::kSequential) {
      const auto& grid = Ils1Grid();
      if (grid.empty()) return *ils_;
      const auto& pick = grid[Select(grid, data_.validation.labels, nullptr, false).index];
      shapes.emplace_back(*pick.p1, *pick.p2);
    } else {
      for (double p1 : cfg_.grids.p1) {
        for (double p2 : cfg_.grids.p2) shapes.emplace_back(p1, p2);
      }
    }
    for (const auto& [p1, p2] : shapes) {
      const auto params = Curve(p1, p2);
      for (double t : cfg_.grids.teacher_temperature) {
        Candidate c;
        c.p1 = p1;
        c.p2 = p2;
        c.teacher_temperature = t;
        Push(&*ils_, FitTargets(fmt::format("ils p1={} p2={} T={}", p1, p2, t), std::move(c),
                                [&](const Labels& y, bool train) {
                                  const auto eps = smoothing::Ils1Epsilons(
                                      y, Teacher(train, teacher_temperature_), params);
                                  return smoothing::Ils2Targets(y, k_, Teacher(train, t), eps);
                                }));
      }
    }
    return *ils_;
  }

  std::vector<Candidate> ClsGrid() {
    std::vector<Candidate> out;
    const Matrix sim = smoothing::ClassSimilarity(data_.train.features, data_.train.labels, k_);
    for (double e : cfg_.grids.epsilon) {
      Candidate c;
      c.epsilon = e;
      Push(&out, FitTargets(fmt::format("cls eps={}", e), std::move(c),
                            [&](const Labels& y, bool) {
                              return smoothing::ClsTargets(sim, y, SmoothingFactor(e));
                            }));
    }
    return out;
  }

  std::vector<Candidate> BsSoft() {
    std::vector<Candidate> out;
    const auto provider = smoothing::BsSoftProvider(data_.train.features, data_.train.labels, k_,
                                                    cfg_.bs_soft_beta);
    Push(&out, Fit("bs_soft", {}, [&] {
           const TargetMatrix val_t = smoothing::HardTargets(data_.validation.labels, k_);
           return nn::Train(init_, data_.train.features, provider,
                            {data_.validation.features, val_t, &data_.validation.labels},
                            cfg_.train);
         }));
    return out;
  }

  std::vector<Candidate> BetaGrid() {
    std::vector<Candidate> out;
    for (double e : cfg_.grids.epsilon) {
      smoothing::BetaSmoothingParams params = cfg_.beta;
      params.target_epsilon = e;
      try {
        params.Validate();
      } catch (const ConfigError&) {
        spdlog::debug("beta eps={} unreachable, skipped", e);
        continue;
      }
      Candidate c;
      c.epsilon = e;
      Push(&out, FitTargets(fmt::format("beta eps={}", e), std::move(c),
                            [&](const Labels& y, bool train) {
                              return smoothing::BetaTargets(
                                  y, k_, params,
                                  MixSeed(seed_, train ? kBetaTrainStream : kBetaValidationStream));
                            }));
    }
    return out;
  }

  // ---- evaluation ----

  ResultRow Evaluate(const std::string& name, const Candidate& c, bool temperature_scaled,
                     const Selection& s) const {
    const Matrix logits = c.test_logits ? *c.test_logits : nn::Logits(c.model, data_.test.features);
    const calib::CalibrationReport rep = calib::Evaluate(
        Softmax(logits, s.temperature), data_.test.labels, cfg_.bins, &data_.test.density_tags);
    ResultRow row;
    row.method = name;
    row.temperature_scaled = temperature_scaled;
    row.seed = seed_;
    row.accuracy = rep.accuracy;
    row.dense_accuracy = rep.dense_accuracy;
    row.sparse_accuracy = rep.sparse_accuracy;
    row.cross_entropy = rep.cross_entropy;
    row.ece = rep.ece;
    row.cwece = rep.cwece;
    row.validation_loss = s.val_loss;
    row.temperature = s.temperature;
    row.epsilon = c.epsilon;
    row.p1 = c.p1;
    row.p2 = c.p2;
    row.teacher_temperature = c.teacher_temperature;
    return row;
  }

  void Emit(const std::string& name, const std::vector<Candidate>& cands,
            const std::vector<int>* rows = nullptr) {
    if (cands.empty()) return;
    for (bool scaled : {false, true}) {
      const Selection s = Select(cands, data_.validation.labels, rows, scaled);
      out_->rows.push_back(Evaluate(name, cands[s.index], scaled, s));
    }
  }

  void RunMethod(Method m) {
    const std::string name = ToString(m);
    switch (m) {
      case Method::kBayes: Emit(name, Bayes()); break;
      case Method::kNoLs: Emit(name, NoLs()); break;
      case Method::kLs: Emit(name, LsGrid()); break;
      case Method::kLsFixed: {
        std::vector<Candidate> v;
        Candidate c;
        c.epsilon = cfg_.grids.fixed_epsilon;
        const double e = cfg_.grids.fixed_epsilon;
        Push(&v, FitTargets(fmt::format("ls_fixed eps={}", e), std::move(c),
                            [&](const Labels& y, bool) {
                              return smoothing::StandardLs(y, k_, SmoothingFactor(e));
                            }));
        Emit(name, v);
        break;
      }
      case Method::kIls1: Emit(name, Ils1Grid()); break;
      case Method::kIls2: Emit(name, Ils2Grid()); break;
      case Method::kIls: Emit(name, IlsGrid()); break;
      case Method::kCls: Emit(name, ClsGrid()); break;
      case Method::kBsSoft: Emit(name, BsSoft()); break;
      case Method::kBeta: Emit(name, BetaGrid()); break;
    }
  }

  void RunSubset(DensityTag tag, const std::string& name) {
    const std::vector<int> rows = data_.validation.IndicesWithTag(tag);
    if (rows.empty()) {
      spdlog::warn("seed {}: no {} validation instances, {} skipped", seed_, ToString(tag), name);
      return;
    }
    Emit(name, LsGrid(), &rows);
  }

  void RunCurve() {
    const auto& grid = LsGrid();
    if (grid.empty()) return;
    const Matrix x = VStack(data_.train.features, data_.validation.features);
    const Labels y = Concat(data_.train.labels, data_.validation.labels);
    std::map<double, Matrix> students;
    for (const auto& c : grid) students.emplace(*c.epsilon, nn::Forward(c.model, x));
    out_->curve = EstimateSmoothingCurve(synth::BayesPosterior(cfg_.generative_model, x), y,
                                         students, cfg_.curve_bins);
    out_->has_curve = true;
  }

  void RunSweep() {
    for (double p1 : cfg_.sweep_p1) {
      for (double p2 : cfg_.sweep_p2) {
        const auto c = Ils1(p1, p2);
        if (!c) {
          out_->sweep.emplace_back(std::nullopt);
          continue;
        }
        const Matrix probs = nn::Forward(c->model, data_.test.features);
        out_->sweep.emplace_back(std::make_pair(
            calib::CrossEntropy(probs, data_.test.labels),
            calib::NllAtTemperature(c->val_logits, data_.validation.labels, 1.0)));
      }
    }
  }

  void Student(const std::string& name, const Matrix& train_probs, const Matrix& val_probs) {
    std::vector<Candidate> v;
    Push(&v, Fit(name, {}, [&] {
           const auto r = distill::Distill(
               train_probs, val_probs,
               nn::NetworkModel::Initialize(cfg_.architecture, MixSeed(seed_, kStudentStream),
                                            cfg_.init),
               data_, cfg_.distill, cfg_.train, cfg_.bins);
           return nn::TrainResult{r.student, r.log};
         }));
    Emit(name, v);
  }

  void StudentOf(const std::string& name, const std::vector<Candidate>& grid) {
    if (grid.empty()) return;
    const auto& teacher = grid[Select(grid, data_.validation.labels, nullptr, false).index];
    const double t = cfg_.distill.teacher_temperature;
    Student(name, nn::Forward(teacher.model, data_.train.features, t),
            nn::Forward(teacher.model, data_.validation.features, t));
  }

  void RunDistill() {
    const double t = cfg_.distill.teacher_temperature;
    Student("student_bayes", Softmax(LogJoint(data_.train.features), t),
            Softmax(LogJoint(data_.validation.features), t));
    StudentOf("student_nols", NoLs());
    StudentOf("student_ls", LsGrid());
    if (Uses(cfg_, Method::kIls)) StudentOf("student_ils", IlsGrid());
  }

  const ExperimentConfig& cfg_;
  std::uint64_t seed_;
  ReplicateOutput* out_;
  synth::DataSplits data_;
  int k_;
  nn::NetworkModel init_;

  std::optional<std::vector<Candidate>> bayes_;
  std::optional<std::vector<Candidate>> nols_;
  std::optional<std::vector<Candidate>> ls_;
  std::optional<std::vector<Candidate>> ils1_;
  std::optional<std::vector<Candidate>> ils_;
  std::map<std::pair<double, double>, std::optional<Candidate>> ils1_cache_;
  Matrix teacher_train_logits_;
  Matrix teacher_val_logits_;
  double teacher_temperature_ = 1.0;
};

std::string Opt(const std::optional<double>& v) {
  return v ? fmt::format("{}", *v) : std::string();
}

}  // namespace

std::vector<ResultRow> ResultTable::Select(const std::string& method,
                                           bool temperature_scaled) const {
  std::vector<ResultRow> out;
  for (const auto& r : rows) {
    if (r.method == method && r.temperature_scaled == temperature_scaled) out.push_back(r);
  }
  return out;
}

namespace {

ResultRow Mean(const std::vector<ResultRow>& group) {
  ResultRow m;
  m.method = group.front().method;
  m.temperature_scaled = group.front().temperature_scaled;
  m.count = static_cast<int>(group.size());
  const double n = static_cast<double>(group.size());
  auto mean_opt = [&](auto field) {
    double s = 0.0;
    int c = 0;
    for (const auto& r : group) {
      if (r.*field) {
        s += *(r.*field);
        ++c;
      }
    }
    return c > 0 ? std::optional<double>(s / c) : std::nullopt;
  };
  for (const auto& r : group) {
    m.accuracy += r.accuracy;
    m.cross_entropy += r.cross_entropy;
    m.ece += r.ece;
    m.cwece += r.cwece;
    m.validation_loss += r.validation_loss;
  }
  double t = 0.0;
  for (const auto& r : group) t += r.temperature;
  m.accuracy /= n;
  m.cross_entropy /= n;
  m.ece /= n;
  m.cwece /= n;
  m.validation_loss /= n;
  m.temperature = t / n;
  m.dense_accuracy = mean_opt(&ResultRow::dense_accuracy);
  m.sparse_accuracy = mean_opt(&ResultRow::sparse_accuracy);
  m.epsilon = mean_opt(&ResultRow::epsilon);
  m.p1 = mean_opt(&ResultRow::p1);
  m.p2 = mean_opt(&ResultRow::p2);
  m.teacher_temperature = mean_opt(&ResultRow::teacher_temperature);
  return m;
}

}  // namespace

std::vector<ResultRow> ResultTable::Averages() const {
  std::vector<std::pair<std::string, bool>> keys;
  for (const auto& r : rows) {
    const auto key = std::make_pair(r.method, r.temperature_scaled);
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
  }
  std::vector<ResultRow> out;
  for (const auto& [method, scaled] : keys) out.push_back(Mean(Select(method, scaled)));
  return out;
}

ResultRow ResultTable::Average(const std::string& method, bool temperature_scaled) const {
  const auto group = Select(method, temperature_scaled);
  if (group.empty()) {
    throw ConfigError(fmt::format("no rows for method {} (temperature scaled: {})", method,
                                  temperature_scaled));
  }
  return Mean(group);
}

void WriteRowsCsv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << "method,temperature_scaled,seed,count,accuracy,dense_accuracy,sparse_accuracy,"
         "cross_entropy,ece,cwece,validation_loss,temperature,epsilon,p1,p2,"
         "teacher_temperature\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.method,
                       r.temperature_scaled ? 1 : 0, r.seed, r.count, r.accuracy,
                       Opt(r.dense_accuracy), Opt(r.sparse_accuracy), r.cross_entropy, r.ece,
                       r.cwece, r.validation_loss, r.temperature, Opt(r.epsilon), Opt(r.p1),
                       Opt(r.p2), Opt(r.teacher_temperature));
  }
}

std::vector<CurvePoint> EstimateSmoothingCurve(const Matrix& teacher_probs, const Labels& labels,
                                               const std::map<double, Matrix>& student_probs,
                                               const CurveBinning& bins) {
  if (student_probs.empty()) throw ConfigError("no students given for curve estimation");
  bins.Validate();
  const auto n = static_cast<Eigen::Index>(labels.size());
  if (teacher_probs.rows() != n) throw ShapeError("teacher rows do not match labels");
  for (const auto& [eps, p] : student_probs) {
    if (p.rows() != n || p.cols() != teacher_probs.cols()) {
      throw ShapeError(fmt::format("student eps={} has mismatched shape", eps));
    }
  }
  const int nb = bins.num_bins;
  std::vector<double> teacher_sum(nb, 0.0);
  std::vector<int> count(nb, 0);
  std::vector<std::vector<double>> student_sum(student_probs.size(), std::vector<double>(nb, 0.0));
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[i];
    if (y < 0 || y >= teacher_probs.cols()) throw ShapeError("label out of range");
    const int b = bins.BinOf(teacher_probs(i, y));
    if (b < 0) continue;
    teacher_sum[b] += teacher_probs(i, y);
    ++count[b];
    std::size_t s = 0;
    for (const auto& [eps, p] : student_probs) student_sum[s++][b] += p(i, y);
  }
  std::vector<CurvePoint> out;
  for (int b = 0; b < nb; ++b) {
    if (count[b] == 0) continue;
    const double target = teacher_sum[b] / count[b];
    double best_gap = std::numeric_limits<double>::infinity();
    double best_eps = 0.0;
    std::size_t s = 0;
    for (const auto& [eps, p] : student_probs) {
      const double gap = std::abs(student_sum[s++][b] / count[b] - target);
      if (gap < best_gap) {
        best_gap = gap;
        best_eps = eps;
      }
    }
    out.push_back({b, bins.Center(b), target, best_eps, count[b]});
  }
  return out;
}

std::vector<CurvePoint> EstimateSmoothingCurve(const Matrix& teacher_probs, const Matrix& features,
                                               const Labels& labels,
                                               const std::map<double, nn::NetworkModel>& students,
                                               const CurveBinning& bins) {
  std::map<double, Matrix> probs;
  for (const auto& [eps, model] : students) probs.emplace(eps, nn::Forward(model, features));
  return EstimateSmoothingCurve(teacher_probs, labels, probs, bins);
}

std::vector<CurveSummary> AverageCurves(const std::vector<std::vector<CurvePoint>>& curves) {
  std::map<int, CurveSummary> acc;
  for (const auto& curve : curves) {
    for (const auto& p : curve) {
      auto& s = acc[p.bin];
      s.bin = p.bin;
      s.center = p.center;
      s.mean_epsilon += p.epsilon;
      ++s.replicates;
    }
  }
  std::vector<CurveSummary> out;
  for (auto& [bin, s] : acc) {
    s.mean_epsilon /= s.replicates;
    out.push_back(s);
  }
  return out;
}

const CurveSummary& CurveMinimum(const std::vector<CurveSummary>& curve) {
  if (curve.empty()) throw ConfigError("empty smoothing curve");
  const CurveSummary* best = &curve.front();
  for (const auto& s : curve) {
    if (s.mean_epsilon < best->mean_epsilon) best = &s;
  }
  return *best;
}

void WriteCurveCsv(std::ostream& out, const std::vector<CurveSummary>& curve) {
  out << "bin,center,mean_epsilon,replicates\n";
  for (const auto& s : curve) {
    out << fmt::format("{},{},{},{}\n", s.bin, s.center, s.mean_epsilon, s.replicates);
  }
}

const SweepCell& SweepMinimum(const std::vector<SweepCell>& cells) {
  const SweepCell* best = nullptr;
  for (const auto& c : cells) {
    if (c.replicates == 0) continue;
    if (best == nullptr || c.mean_test_cross_entropy < best->mean_test_cross_entropy) best = &c;
  }
  if (best == nullptr) throw ConfigError("sweep has no evaluated cells");
  return *best;
}

void WriteSweepCsv(std::ostream& out, const std::vector<SweepCell>& cells) {
  out << "p1,p2,mean_test_cross_entropy,mean_validation_loss,replicates\n";
  for (const auto& c : cells) {
    out << fmt::format("{},{},{},{},{}\n", c.p1, c.p2, c.mean_test_cross_entropy,
                       c.mean_validation_loss, c.replicates);
  }
}

SuiteResult RunSuite(const ExperimentConfig& cfg, const SuiteTasks& tasks) {
  cfg.Validate();
  if (tasks.sweep && (cfg.sweep_p1.empty() || cfg.sweep_p2.empty())) {
    throw ConfigError("sweep grids are empty");
  }
  if ((tasks.subset_tuning || tasks.curve || tasks.distill) && cfg.grids.epsilon.empty()) {
    throw ConfigError("epsilon grid is empty");
  }
  std::vector<ReplicateOutput> outputs(cfg.seeds.size());
  ParallelFor(cfg.seeds.size(), WorkerCount(), [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    try {
      Replicate(cfg, cfg.seeds[i], &outputs[i]).Run(tasks);
    } catch (const std::exception& e) {
      outputs[i].failures.push_back(fmt::format("seed {}: {}", cfg.seeds[i], e.what()));
      spdlog::error("seed {} aborted: {}", cfg.seeds[i], e.what());
    }
    spdlog::info("replicate {} (seed {}) finished in {:.1f}s", i, cfg.seeds[i],
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  });

  SuiteResult result;
  for (auto& o : outputs) {
    for (auto& r : o.rows) result.table.rows.push_back(std::move(r));
    for (auto& f : o.failures) result.table.failures.push_back(std::move(f));
    if (o.has_curve) result.curves.push_back(std::move(o.curve));
  }
  result.curve = AverageCurves(result.curves);
  if (tasks.sweep) {
    std::size_t cell = 0;
    for (double p1 : cfg.sweep_p1) {
      for (double p2 : cfg.sweep_p2) {
        SweepCell c{p1, p2, 0.0, 0.0, 0};
        for (const auto& o : outputs) {
          if (cell < o.sweep.size() && o.sweep[cell]) {
            c.mean_test_cross_entropy += o.sweep[cell]->first;
            c.mean_validation_loss += o.sweep[cell]->second;
            ++c.replicates;
          }
        }
        if (c.replicates > 0) {
          c.mean_test_cross_entropy /= c.replicates;
          c.mean_validation_loss /= c.replicates;
        }
        result.sweep.push_back(c);
        ++cell;
      }
    }
  }
  return result;
}

ResultTable RunReplicates(const ExperimentConfig& cfg) { return RunSuite(cfg, {}).table; }

ResultTable TuneOnSubset(const ExperimentConfig& cfg, DensityTag tag) {
  SuiteTasks tasks;
  tasks.methods = false;
  tasks.subset_tuning = true;
  SuiteResult all = RunSuite(cfg, tasks);
  const std::string keep = tag == DensityTag::kDense ? "ls_dense" : "ls_sparse";
  ResultTable out;
  out.failures = std::move(all.table.failures);
  for (auto& r : all.table.rows) {
    if (r.method == keep) out.rows.push_back(std::move(r));
  }
  return out;
}

std::vector<SweepCell> SweepP1P2(const ExperimentConfig& cfg, const std::vector<double>& p1,
                                 const std::vector<double>& p2) {
  ExperimentConfig c = cfg;
  c.sweep_p1 = p1;
  c.sweep_p2 = p2;
  SuiteTasks tasks;
  tasks.methods = false;
  tasks.sweep = true;
  return RunSuite(c, tasks).sweep;
}

int WorkerCount() {
  if (const char* env = std::getenv("ILSMOOTH_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
    spdlog::warn("ignoring invalid ILSMOOTH_WORKERS='{}'", env);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void ParallelFor(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  auto run = [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) run(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) run(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace ilsmooth::exp
