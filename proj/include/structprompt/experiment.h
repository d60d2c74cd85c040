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

// Experiment orchestration: configuration, per-fold scoring, calibration and
// inference, metrics, and report emission.
//
// One report row corresponds to one configured strategy (a prompting method
// at a shot count, possibly asked in several context variants that are
// joined through decision variables). Every row is evaluated twice: with the
// per-decision argmax and with constrained MAP inference ("+ constr").

#ifndef STRUCTPROMPT_EXPERIMENT_H_
#define STRUCTPROMPT_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "structprompt/calibration.h"
#include "structprompt/coref.h"
#include "structprompt/llm_backend.h"
#include "structprompt/morality.h"
#include "structprompt/prompts.h"
#include "structprompt/scoring.h"

namespace structprompt {

inline constexpr const char *kTaskMorality = "morality";

enum class CalibrationMode : std::uint8_t { kNone, kLocal, kGlobal };

std::string_view CalibrationModeName(CalibrationMode mode);
CalibrationMode ParseCalibrationMode(std::string_view name);

struct StrategyConfig {
  std::string method;
  int shots = 0;
  // Morality only; coreference always uses the plain variant.
  std::vector<ContextVariant> variants = {ContextVariant::kPlain};

  // Row label, e.g. "true_false (5-shot)".
  std::string Label() const;
  bool operator==(const StrategyConfig &) const = default;
};

void to_json(json &j, const StrategyConfig &s);
void from_json(const json &j, StrategyConfig &s);

struct ExperimentConfig {
  std::string task = kTaskMorality;  // "morality" or "coref"
  std::filesystem::path dataset;
  std::string dataset_format = "jsonl";  // coref also accepts "conll"
  BackendDescriptor backend;
  int max_in_flight = 4;
  std::vector<StrategyConfig> strategies;
  // When false only unconstrained rows are reported.
  bool constrained = true;
  MoralityConstraints morality_constraints;
  CorefConstraints coref_constraints;
  int coref_window = 0;
  CalibrationMode calibration = CalibrationMode::kNone;
  TrainConfig train;
  std::uint64_t seed = 0;
  int folds = 5;
  double dev_fraction = 0.1;
  ScoringOptions scoring;
  SolveLimits solve;
  std::filesystem::path templates_dir;  // built-in templates when empty
  std::filesystem::path output_dir = "out";
  std::filesystem::path cache_dir;  // <output_dir>/cache when empty
  int workers = 1;
};

void to_json(json &j, const ExperimentConfig &c);
void from_json(const json &j, ExperimentConfig &c);

// Throws kConfigError.
void ValidateConfig(const ExperimentConfig &c);
ExperimentConfig LoadConfig(const std::filesystem::path &path);
std::filesystem::path CacheDir(const ExperimentConfig &c);

// ---------------------------------------------------------------------------

struct Stat {
  double mean = 0.0;
  std::optional<double> stdev;  // absent with a single fold
  bool operator==(const Stat &) const = default;
};

Stat Summarize(const std::vector<double> &values);
void to_json(json &j, const Stat &s);
void from_json(const json &j, Stat &s);

struct FoldMetrics {
  int fold = 0;
  int instances = 0;
  // Keyed by subproblem; "" pools all decisions.
  std::map<std::string, double> micro_f1;
  std::map<std::string, double> macro_f1;
  std::map<std::string, long> violations;
  double ece = 0.0;
  int solver_failures = 0;
  std::int64_t nodes_explored = 0;
  bool operator==(const FoldMetrics &) const = default;
};

void to_json(json &j, const FoldMetrics &m);
void from_json(const json &j, FoldMetrics &m);

struct ReportRow {
  std::string method;
  std::string label;
  bool constrained = false;
  std::vector<FoldMetrics> folds;
  std::map<std::string, Stat> micro_f1;
  std::map<std::string, Stat> macro_f1;
  std::map<std::string, long> violations;  // summed over folds
  bool operator==(const ReportRow &) const = default;
};

void to_json(json &j, const ReportRow &r);
void from_json(const json &j, ReportRow &r);

struct MetricsReport {
  json config;
  std::string task;
  int folds = 0;
  std::vector<std::string> subproblems;
  std::vector<std::string> tags;  // hard-constraint tags
  std::map<std::string, std::string> conventions;
  std::vector<ReportRow> rows;
  std::int64_t scoring_requests = 0;  // distinct completions needed
  bool operator==(const MetricsReport &) const = default;
};

void to_json(json &j, const MetricsReport &r);
void from_json(const json &j, MetricsReport &r);

// Fills the mean/stdev/total fields of every row from its folds.
void Aggregate(MetricsReport &report);

// Non-deterministic run statistics, kept out of the report.
struct RunStats {
  double wall_seconds = 0.0;
  std::vector<double> fold_seconds;
  std::int64_t backend_requests = 0;
  std::int64_t cache_hits = 0;
  std::int64_t cache_misses = 0;
};

void to_json(json &j, const RunStats &s);

enum class RunStage : std::uint8_t { kScore, kCalibrate, kEvaluate };

struct RunOptions {
  // Used instead of MakeBackend(config.backend) when set.
  Backend *backend = nullptr;
  RunStage stop_after = RunStage::kEvaluate;
  std::function<void(const std::string &)> progress;
};

// Runs every fold. Writes scores.jsonl, solutions.jsonl, calibrators/ and
// (for kEvaluate) the report files to config.output_dir. Errors keep their
// code and gain fold/instance context; files written so far are kept.
MetricsReport RunExperiment(const ExperimentConfig &config,
                            const RunOptions &options = {},
                            RunStats *stats = nullptr);

// Writes report.json, report.md and report.svg into `dir`.
void EmitReport(const MetricsReport &report, const std::filesystem::path &dir);
std::string ReportMarkdown(const MetricsReport &report);
std::string ReportSvg(const MetricsReport &report);
std::string ReportJsonText(const MetricsReport &report);
MetricsReport LoadReport(const std::filesystem::path &path);

// ---------------------------------------------------------------------------
// Prompt planning, shared by the runner and the fixture script builder.

struct ScoringJob {
  std::size_t item = 0;
  DecisionId decision;
  int num_labels = 0;
  int gold = 0;
  PromptBundle bundle;
};

// Loaded corpus for either task.
struct TaskData {
  std::string task;
  std::vector<TweetInstance> tweets;
  std::vector<CorefDocument> docs;
  std::size_t size() const {
    return task == kTaskMorality ? tweets.size() : docs.size();
  }
  std::string ItemId(std::size_t i) const;
};

TaskData LoadTaskData(const ExperimentConfig &config);

// Every scoring job of one strategy for `items`, with shots drawn from the
// fold's training items.
std::vector<ScoringJob> PlanJobs(const ExperimentConfig &config,
                                 const TaskData &data,
                                 const StrategyConfig &strategy,
                                 const std::vector<std::size_t> &items,
                                 const std::vector<std::size_t> &shot_pool,
                                 const TemplateSet &templates);

// Items each fold scores: its test items, plus train and dev when the
// configuration calibrates.
std::vector<std::size_t> ItemsToScore(const ExperimentConfig &config,
                                      const FoldSplit &split);

// ---------------------------------------------------------------------------
// Fixtures: small corpora with a scripted mock backend whose scores are
// chosen so that per-decision argmaxes break the hard constraints.

struct Fixture {
  ExperimentConfig config;
  json script;  // MockBackend script
};

// Writes <dir>/data.jsonl, <dir>/script.json and <dir>/config.json.
// `strategies` defaults to every method at 0 shots.
Fixture MakeMoralityFixture(const std::filesystem::path &dir,
                            std::vector<StrategyConfig> strategies = {},
                            int num_tweets = 20);
Fixture MakeCorefFixture(const std::filesystem::path &dir,
                         std::vector<StrategyConfig> strategies = {},
                         int num_docs = 12);

// Target score tables in tenths, per decision; shared by both fixtures'
// script builders.
using FixtureTargets = std::map<DecisionId, std::vector<int>>;

json BuildFixtureScript(const ExperimentConfig &config, const TaskData &data,
                        const FixtureTargets &targets);

}  // namespace structprompt

#endif  // STRUCTPROMPT_EXPERIMENT_H_
