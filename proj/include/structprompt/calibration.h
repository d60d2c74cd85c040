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

// Trainable score calibrators. A calibrator maps the raw score vector w of
// one decision to s = softmax(W w + b). Calibrators are keyed by
// (subproblem, strategy) because label spaces differ between subproblems.
//
// Two trainers are provided: a local one minimizing cross-entropy per
// calibrator, and a global one minimizing the structured hinge
//
//   L = max(0, sum_i s_i yhat_i - sum_i s_i y_i)
//
// over outcome variables, where yhat is the MAP assignment under the
// current calibrated scores.

#ifndef STRUCTPROMPT_CALIBRATION_H_
#define STRUCTPROMPT_CALIBRATION_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "structprompt/core_model.h"
#include "structprompt/ilp.h"

namespace structprompt {

enum class CalibratorKind : std::uint8_t { kIdentity, kAffineSoftmax };

struct Calibrator {
  std::string subproblem;
  std::string strategy;
  CalibratorKind kind = CalibratorKind::kIdentity;
  int dim = 0;
  // Row-major dim x dim.
  std::vector<double> weights;
  std::vector<double> bias;

  static Calibrator Identity(std::string subproblem, std::string strategy,
                             int dim);
  // W = I, b = 0: the softmax of the raw scores, which keeps their argmax.
  static Calibrator Affine(std::string subproblem, std::string strategy,
                           int dim);

  // Throws kDimMismatch.
  std::vector<double> Apply(const std::vector<double> &w) const;

  bool operator==(const Calibrator &) const = default;
};

void to_json(json &j, const Calibrator &c);
void from_json(const json &j, Calibrator &c);

using CalibratorKey = std::pair<std::string, std::string>;

class CalibratorSet {
 public:
  void Put(Calibrator c);
  const Calibrator *Find(const std::string &subproblem,
                         const std::string &strategy) const;
  const std::map<CalibratorKey, Calibrator> &all() const { return items_; }
  bool empty() const { return items_.empty(); }

  // Tables without a calibrator pass through unchanged.
  ScoreTable Calibrate(const ScoreTable &table) const;
  // The problem with every table calibrated.
  StructuredProblem Apply(const StructuredProblem &problem) const;

  json ToJson() const;
  static CalibratorSet FromJson(const json &j);

  bool operator==(const CalibratorSet &) const = default;

 private:
  std::map<CalibratorKey, Calibrator> items_;
};

// An affine calibrator for every (subproblem, strategy) pair seen in
// `problems`, with dimension checks across problems.
CalibratorSet AffineCalibratorsFor(const std::vector<StructuredProblem> &problems);

enum class Objective : std::uint8_t { kLocalCrossEntropy, kGlobalHinge };

struct TrainConfig {
  Objective objective = Objective::kLocalCrossEntropy;
  double learning_rate = 0.01;
  // Examples per step for local training; problems per step for global
  // training unless document_batches is set (one problem per step).
  int batch_size = 32;
  bool document_batches = false;
  int epochs = 30;
  std::uint64_t seed = 0;
  // Epochs without dev improvement before stopping; 0 disables.
  int patience = 5;
  // Adds a Hamming cost (1 per wrong decision, spread over its outcomes) to
  // the loss-augmented inference of global training. Off by default.
  bool hamming_cost = false;
  SolveLimits solve_limits;
  // Per-epoch metrics as JSONL; disabled when empty.
  std::filesystem::path log_path;
};

void to_json(json &j, const TrainConfig &c);
void from_json(const json &j, TrainConfig &c);

struct TrainStats {
  int epochs_run = 0;
  int best_epoch = 0;
  double best_dev = 0.0;
  int skipped_steps = 0;
  std::vector<json> log;
};

// One softmax-regression calibrator per (subproblem, strategy), each trained
// only on tables of its own strategy. Returns the parameters with the lowest
// dev cross-entropy (train loss when dev is empty). Throws kNoGold and
// kDiverged.
CalibratorSet TrainLocal(const std::vector<StructuredProblem> &train,
                         const std::vector<StructuredProblem> &dev,
                         const TrainConfig &config, TrainStats *stats = nullptr);

// Joint training through MAP inference, starting from `init` (affine
// calibrators are created for any missing key). Model selection keeps the
// parameters with the best dev constrained micro-F1, the starting point
// included. Steps whose solve exceeds its budget are skipped and counted.
CalibratorSet TrainGlobal(const std::vector<StructuredProblem> &train,
                          const std::vector<StructuredProblem> &dev,
                          const TrainConfig &config, CalibratorSet init = {},
                          TrainStats *stats = nullptr);

// Parameter gradients, laid out like the calibrators.
struct CalibratorGrad {
  std::vector<double> weights;
  std::vector<double> bias;
};
using GradientSet = std::map<CalibratorKey, CalibratorGrad>;

// Structured hinge of `problem` (raw tables) under `calibrators`, with
// `predicted` held fixed; `cost` is added inside the max. When `grad` is
// non-null and the loss is positive, accumulates dL/dparams for affine
// calibrators into it. Throws kNoGold.
double HingeLoss(const StructuredProblem &problem,
                 const CalibratorSet &calibrators, const Assignment &predicted,
                 GradientSet *grad = nullptr, double cost = 0.0);

// Mean cross-entropy of calibrated tables against gold labels.
double CrossEntropy(const std::vector<StructuredProblem> &problems,
                    const CalibratorSet &calibrators);

struct CalibrationReport {
  // Keyed by subproblem; "" pools every decision.
  std::map<std::string, double> micro_f1_constrained;
  std::map<std::string, double> macro_f1_constrained;
  std::map<std::string, double> micro_f1_unconstrained;
  std::map<std::string, double> macro_f1_unconstrained;
  std::map<std::string, long> violations_constrained;
  std::map<std::string, long> violations_unconstrained;
  double ece = 0.0;
  int solver_failures = 0;
};

void to_json(json &j, const CalibrationReport &r);

CalibrationReport EvaluateCalibration(
    const CalibratorSet &calibrators,
    const std::vector<StructuredProblem> &problems,
    const SolveLimits &limits = {});

// ---------------------------------------------------------------------------

// Synthetic morality-style benchmark: one 5-way foundation decision and
// 2-4 16-way role decisions per item, tied by the role/foundation
// alignment. Foundation scores carry a fixed label bias; in a share of the
// items every role score is pushed toward the roles of one wrong
// foundation, so the role errors are correlated across entities and only a
// joint reweighting of the two subproblems repairs them.
struct DistortedBenchmarkOptions {
  int train_items = 400;
  int dev_items = 100;
  int test_items = 400;
  double foundation_signal = 2.0;
  double foundation_noise = 1.0;
  std::vector<double> foundation_bias = {2.0, 0.5, 0.0, -1.0, 0.0};
  double role_signal = 2.5;
  double role_noise = 0.8;
  double corruption_rate = 0.5;
  double corruption_shift = 2.2;
};

struct DistortedBenchmark {
  std::vector<StructuredProblem> train, dev, test;
};

DistortedBenchmark MakeDistortedBenchmark(
    std::uint64_t seed, const DistortedBenchmarkOptions &options = {});

// Trainer settings tuned for the benchmark: raw scores there are already
// probabilities, so steps are larger than the library defaults.
TrainConfig BenchmarkLocalConfig(std::uint64_t seed);
TrainConfig BenchmarkGlobalConfig(std::uint64_t seed);

// Test-split reports at the three calibration levels. Global training is
// warm-started from the local calibrators.
struct CalibrationLevels {
  CalibrationReport none, local, global;
};

CalibrationLevels RunCalibrationLevels(const DistortedBenchmark &bench,
                                       const TrainConfig &local,
                                       const TrainConfig &global);

}  // namespace structprompt

#endif  // STRUCTPROMPT_CALIBRATION_H_
