// Copyright 2026 The structprompt Authors.
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

#ifndef STRUCTPROMPT_METRICS_H_
#define STRUCTPROMPT_METRICS_H_

#include <map>
#include <string>
#include <vector>

#include "structprompt/core_model.h"

namespace structprompt {

enum class Averaging { kMicro, kMacro };

// Multi-class F1 over aligned label lists. Micro averaging over
// single-label decisions equals accuracy. Macro averaging skips classes
// absent from both lists; a class that occurs in gold but is never
// predicted (or vice versa) contributes 0. Empty input scores 0.
// Throws kLengthMismatch.
double ComputeF1(const std::vector<int> &predictions,
                 const std::vector<int> &gold, Averaging averaging);

// F1 of a single class treated as positive.
double ClassF1(const std::vector<int> &predictions,
               const std::vector<int> &gold, int positive);

// Expected calibration error of top-label confidences with equal-width
// bins over [0, 1].
double ExpectedCalibrationError(const std::vector<double> &confidences,
                                const std::vector<bool> &correct,
                                int bins = 10);

// Predicted and gold labels pooled per subproblem, plus violation counts.
struct LabelTally {
  std::map<std::string, std::vector<int>> predicted;
  std::map<std::string, std::vector<int>> gold;
  std::map<std::string, long> violations;

  // Adds every decision of `problem` (which must carry gold) under
  // assignment `a`, and its per-tag violation counts.
  void Add(const StructuredProblem &problem, const Assignment &a);

  // Micro / macro F1 of one subproblem, or pooled over all subproblems when
  // `subproblem` is empty (macro is then the mean of per-subproblem macro).
  double F1(const std::string &subproblem, Averaging averaging) const;
  long TotalViolations() const;
};

}  // namespace structprompt

#endif  // STRUCTPROMPT_METRICS_H_
