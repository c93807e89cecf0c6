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

#include "ilsmooth/calib/temperature.h"

#include <cmath>
#include <limits>

namespace ilsmooth::calib {
namespace {

constexpr double kLogFloor = 1e-12;
constexpr int kMaxShrinks = 8;

}  // namespace

double NllAtTemperature(const Matrix& logits, const Labels& labels,
                        double temperature) {
  if (static_cast<std::size_t>(logits.rows()) != labels.size()) {
    throw ShapeError("logit rows and labels differ in length");
  }
  if (logits.rows() == 0) throw ShapeError("empty logit matrix");
  const Matrix log_p = LogSoftmax(logits, temperature);
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) total -= log_p(i, labels[i]);
  return total / static_cast<double>(labels.size());
}

TemperatureFit FitTemperature(const Matrix& logits, const Labels& labels,
                              const TemperatureSearch& search) {
  if (!(search.min_temperature > 0.0 &&
        search.min_temperature < search.max_temperature)) {
    throw ConfigError("invalid temperature search range");
  }
  auto f = [&](double log_t) {
    const double v = NllAtTemperature(logits, labels, std::exp(log_t));
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  TemperatureFit fit;
  fit.validation_nll_before = NllAtTemperature(logits, labels, 1.0);

  double lo = std::log(search.min_temperature);
  double hi = std::log(search.max_temperature);
  // Shrink toward T = 1 while the bracket ends are non-finite.
  for (int s = 0; s < kMaxShrinks && !(std::isfinite(f(lo)) && std::isfinite(f(hi))); ++s) {
    if (!std::isfinite(f(lo))) lo *= 0.5;
    if (!std::isfinite(f(hi))) hi *= 0.5;
  }
  if (!std::isfinite(f(lo)) && !std::isfinite(f(hi)) &&
      !std::isfinite(fit.validation_nll_before)) {
    throw NumericError("validation NLL is non-finite for every temperature");
  }

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > search.log_tolerance) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  const double best_log_t = 0.5 * (a + b);
  const double best = f(best_log_t);
  if (std::isfinite(best) && best <= fit.validation_nll_before) {
    fit.temperature = std::exp(best_log_t);
    fit.validation_nll_after = best;
  } else {
    fit.temperature = 1.0;
    fit.validation_nll_after = fit.validation_nll_before;
  }
  return fit;
}

Matrix LogitsFromProbabilities(const Matrix& probabilities) {
  return probabilities.cwiseMax(kLogFloor).array().log().matrix();
}

Matrix ApplyTemperature(const Matrix& probabilities, double temperature) {
  if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
  return Softmax(LogitsFromProbabilities(probabilities), temperature);
}

}  // namespace ilsmooth::calib
