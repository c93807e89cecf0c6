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

#include "ilsmooth/synth/bayes_report.h"

namespace ilsmooth::synth {

calib::CalibrationReport BayesReport(const GenerativeModel& model,
                                     const LabeledDataset& test,
                                     const calib::BinningSpec& bins) {
  if (test.size() == 0) throw ShapeError("empty test set");
  test.Validate(model.num_classes());
  return calib::Evaluate(BayesPosterior(model, test.features), test.labels,
                         bins, &test.density_tags);
}

}  // namespace ilsmooth::synth
