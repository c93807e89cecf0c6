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

#ifndef ILSMOOTH_CALIB_TEMPERATURE_H_
#define ILSMOOTH_CALIB_TEMPERATURE_H_

#include "ilsmooth/common.h"

namespace ilsmooth::calib {

struct TemperatureFit {
  double temperature = 1.0;
  double validation_nll_before = 0.0;  // at T = 1
  double validation_nll_after = 0.0;   // at the fitted T
};

struct TemperatureSearch {
  double min_temperature = 0.05;
  double max_temperature = 20.0;
  // Bracket width on log T at which the search stops.
  double log_tolerance = 1e-4;
};

// Mean negative log-likelihood of softmax(logits / T) at the true labels.
double NllAtTemperature(const Matrix& logits, const Labels& labels,
                        double temperature);

// Golden-section search for the NLL-minimizing temperature on log T. If the
// search ends worse than T = 1, T = 1 is returned, so the fitted NLL never
// exceeds the unscaled one. Throws NumericError if the NLL is non-finite
// across the whole bracket.
TemperatureFit FitTemperature(const Matrix& logits, const Labels& labels,
                              const TemperatureSearch& search = {});

// Logits recovered from probabilities as log(max(p, 1e-12)); exact up to a
// per-row additive constant, which softmax ignores.
Matrix LogitsFromProbabilities(const Matrix& probabilities);

// softmax(log(p) / T).
Matrix ApplyTemperature(const Matrix& probabilities, double temperature);

}  // namespace ilsmooth::calib

#endif  // ILSMOOTH_CALIB_TEMPERATURE_H_
