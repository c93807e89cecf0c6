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

#ifndef ILSMOOTH_SYNTH_BAYES_REPORT_H_
#define ILSMOOTH_SYNTH_BAYES_REPORT_H_

#include "ilsmooth/calib/metrics.h"
#include "ilsmooth/synth/generative_model.h"

namespace ilsmooth::synth {

// Evaluates the exact posterior as a classifier on `test`, including the
// dense/sparse accuracy split.
calib::CalibrationReport BayesReport(const GenerativeModel& model,
                                     const LabeledDataset& test,
                                     const calib::BinningSpec& bins = {});

}  // namespace ilsmooth::synth

#endif  // ILSMOOTH_SYNTH_BAYES_REPORT_H_
