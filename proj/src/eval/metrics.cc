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

#include "structprompt/metrics.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "structprompt/error.h"

namespace structprompt {

namespace {

void CheckLengths(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(ErrorCode::kLengthMismatch,
                std::to_string(a) + " predictions vs " + std::to_string(b) +
                    " gold labels");
  }
}

double F1FromCounts(long tp, long fp, long fn) {
  if (tp == 0) return 0.0;
  return 2.0 * tp / (2.0 * tp + fp + fn);
}

}  // namespace

double ClassF1(const std::vector<int> &predictions,
               const std::vector<int> &gold, int positive) {
  CheckLengths(predictions.size(), gold.size());
  long tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool p = predictions[i] == positive, g = gold[i] == positive;
    tp += p && g;
    fp += p && !g;
    fn += !p && g;
  }
  return F1FromCounts(tp, fp, fn);
}

double ComputeF1(const std::vector<int> &predictions,
                 const std::vector<int> &gold, Averaging averaging) {
  CheckLengths(predictions.size(), gold.size());
  if (gold.empty()) return 0.0;
  if (averaging == Averaging::kMicro) {
    // Every decision contributes exactly one prediction and one gold label,
    // so pooled FP and FN both equal the number of errors.
    long correct = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      correct += predictions[i] == gold[i];
    }
    return static_cast<double>(correct) / static_cast<double>(gold.size());
  }
  std::set<int> classes(gold.begin(), gold.end());
  classes.insert(predictions.begin(), predictions.end());
  double sum = 0;
  for (int c : classes) sum += ClassF1(predictions, gold, c);
  return sum / static_cast<double>(classes.size());
}

double ExpectedCalibrationError(const std::vector<double> &confidences,
                                const std::vector<bool> &correct, int bins) {
  CheckLengths(confidences.size(), correct.size());
  if (confidences.empty() || bins < 1) return 0.0;
  std::vector<double> conf_sum(bins, 0.0), acc_sum(bins, 0.0);
  std::vector<long> count(bins, 0);
  for (std::size_t i = 0; i < confidences.size(); ++i) {
    const double c = std::clamp(confidences[i], 0.0, 1.0);
    const int b = std::min(bins - 1, static_cast<int>(c * bins));
    conf_sum[b] += c;
    acc_sum[b] += correct[i] ? 1.0 : 0.0;
    ++count[b];
  }
  double ece = 0;
  for (int b = 0; b < bins; ++b) {
    if (count[b] == 0) continue;
    ece += std::abs(acc_sum[b] - conf_sum[b]) /
           static_cast<double>(confidences.size());
  }
  return ece;
}

void LabelTally::Add(const StructuredProblem &problem, const Assignment &a) {
  if (!problem.gold()) {
    throw Error(ErrorCode::kNoGold, "evaluation needs gold labels");
  }
  const auto pred = problem.LabelsFromAssignment(a);
  const auto gold_labels = problem.LabelsFromAssignment(*problem.gold());
  for (std::size_t j = 0; j < pred.size(); ++j) {
    const auto &sub = problem.decisions()[j].id.subproblem;
    predicted[sub].push_back(pred[j]);
    gold[sub].push_back(gold_labels[j]);
  }
  for (const auto &[tag, n] : CountAllViolations(problem, a)) {
    violations[tag] += n;
  }
}

double LabelTally::F1(const std::string &subproblem,
                      Averaging averaging) const {
  if (!subproblem.empty()) {
    auto p = predicted.find(subproblem);
    if (p == predicted.end()) return 0.0;
    return ComputeF1(p->second, gold.at(subproblem), averaging);
  }
  if (averaging == Averaging::kMacro) {
    if (predicted.empty()) return 0.0;
    double sum = 0;
    for (const auto &[sub, p] : predicted) {
      sum += ComputeF1(p, gold.at(sub), Averaging::kMacro);
    }
    return sum / static_cast<double>(predicted.size());
  }
  std::vector<int> all_p, all_g;
  for (const auto &[sub, p] : predicted) {
    all_p.insert(all_p.end(), p.begin(), p.end());
    const auto &g = gold.at(sub);
    all_g.insert(all_g.end(), g.begin(), g.end());
  }
  return ComputeF1(all_p, all_g, Averaging::kMicro);
}

long LabelTally::TotalViolations() const {
  long total = 0;
  for (const auto &[tag, n] : violations) total += n;
  return total;
}

}  // namespace structprompt
