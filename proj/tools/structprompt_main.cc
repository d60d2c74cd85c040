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

// Command-line front end.
//
//   structprompt score     --config c.json [overrides]
//   structprompt calibrate --config c.json [overrides] | --benchmark
//   structprompt evaluate  --config c.json [overrides]
//   structprompt infer     --problem p.json [--no-constraints] [--lp out.lp]
//   structprompt report    --in report.json [--out dir]
//   structprompt fixture   --task morality|coref --out dir
//
// Exit codes: 0 ok, 2 configuration error, 3 data error, 4 backend error,
// 1 anything else.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "structprompt/calibration.h"
#include "structprompt/error.h"
#include "structprompt/experiment.h"
#include "structprompt/ilp.h"

namespace sp = structprompt;
namespace fs = std::filesystem;

namespace {

struct Overrides {
  std::string config;
  std::string task;
  std::string dataset;
  std::vector<std::string> strategies;
  std::optional<int> shots;
  std::string context;
  std::string constraints;
  std::string calibration;
  std::string endpoint;
  std::string model;
  std::string cache_dir;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> folds;
  std::optional<int> workers;
  bool print_config = false;
  bool quiet = false;
};

void AddRunFlags(CLI::App *cmd, Overrides &o) {
  cmd->add_option("--config", o.config, "Experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--task", o.task, "morality or coref");
  cmd->add_option("--dataset", o.dataset, "Dataset path");
  cmd->add_option("--strategy", o.strategies,
                  "method[:shots], repeatable; replaces the configured list");
  cmd->add_option("--shots", o.shots, "Shot count for every strategy");
  cmd->add_option("--context", o.context,
                  "Morality context variants: plain or both")
      ->check(CLI::IsMember({"plain", "both"}));
  cmd->add_option("--constraints", o.constraints, "Report '+ constr' rows")
      ->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--calibration", o.calibration, "none, local or global")
      ->check(CLI::IsMember({"none", "local", "global"}));
  cmd->add_option("--endpoint", o.endpoint,
                  "Backend URL or 'mock' (STRUCTPROMPT_ENDPOINT overrides)");
  cmd->add_option("--model", o.model, "Model id, or script path for mock");
  cmd->add_option("--cache-dir", o.cache_dir, "Score cache directory");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--seed", o.seed, "Top-level seed");
  cmd->add_option("--folds", o.folds, "Number of folds");
  cmd->add_option("--workers", o.workers, "Parallel scoring/solving workers");
  cmd->add_flag("--print-config", o.print_config,
                "Print the resolved config and exit");
  cmd->add_flag("-q,--quiet", o.quiet, "No progress output");
}

// "method" or "method:shots".
sp::StrategyConfig ParseStrategyArg(const std::string &arg) {
  sp::StrategyConfig sc;
  const auto colon = arg.find(':');
  sc.method = arg.substr(0, colon);
  if (colon != std::string::npos) {
    try {
      sc.shots = std::stoi(arg.substr(colon + 1));
    } catch (const std::exception &) {
      throw sp::Error(sp::ErrorCode::kConfigError,
                      "bad shot count in '" + arg + "'");
    }
  }
  return sc;
}

sp::ExperimentConfig Resolve(const Overrides &o) {
  sp::ExperimentConfig c = sp::LoadConfig(o.config);
  if (!o.task.empty()) c.task = o.task;
  if (!o.dataset.empty()) c.dataset = o.dataset;
  if (!o.strategies.empty()) {
    c.strategies.clear();
    for (const auto &s : o.strategies) c.strategies.push_back(ParseStrategyArg(s));
  }
  for (auto &s : c.strategies) {
    if (o.shots) s.shots = *o.shots;
    if (o.context == "plain") s.variants = {sp::ContextVariant::kPlain};
    if (o.context == "both") {
      s.variants = {sp::ContextVariant::kPlain,
                    sp::ContextVariant::kIdeologyTopic};
    }
  }
  if (!o.constraints.empty()) c.constrained = o.constraints == "on";
  if (!o.calibration.empty()) {
    c.calibration = sp::ParseCalibrationMode(o.calibration);
  }
  if (!o.endpoint.empty()) c.backend.endpoint = o.endpoint;
  if (!o.model.empty()) c.backend.model_id = o.model;
  if (!o.cache_dir.empty()) c.cache_dir = o.cache_dir;
  if (!o.out.empty()) c.output_dir = o.out;
  if (o.seed) c.seed = *o.seed;
  if (o.folds) c.folds = *o.folds;
  if (o.workers) c.workers = *o.workers;
  sp::ValidateConfig(c);
  return c;
}

int RunStage(const Overrides &o, sp::RunStage stage) {
  const sp::ExperimentConfig c = Resolve(o);
  if (o.print_config) {
    std::cout << sp::json(c).dump(2) << "\n";
    return 0;
  }
  sp::RunOptions options;
  options.stop_after = stage;
  if (!o.quiet) {
    options.progress = [](const std::string &m) {
      std::fprintf(stderr, "%s\n", m.c_str());
    };
  }
  sp::RunStats stats;
  const sp::MetricsReport report = sp::RunExperiment(c, options, &stats);
  if (stage == sp::RunStage::kEvaluate) std::cout << sp::ReportMarkdown(report);
  std::fprintf(stderr,
               "%.1f s, %lld backend requests, %lld cache hits; output in %s\n",
               stats.wall_seconds,
               static_cast<long long>(stats.backend_requests),
               static_cast<long long>(stats.cache_hits),
               c.output_dir.string().c_str());
  return 0;
}

int RunBenchmark(int seeds, std::uint64_t first_seed) {
  std::printf("| seed | none | local | global | ordered |\n");
  std::printf("|---:|---:|---:|---:|:---:|\n");
  int ordered = 0;
  for (int i = 0; i < seeds; ++i) {
    const std::uint64_t seed = first_seed + static_cast<std::uint64_t>(i);
    const auto levels = sp::RunCalibrationLevels(
        sp::MakeDistortedBenchmark(seed), sp::BenchmarkLocalConfig(seed),
        sp::BenchmarkGlobalConfig(seed));
    const double none = levels.none.micro_f1_constrained.at("");
    const double local = levels.local.micro_f1_constrained.at("");
    const double global = levels.global.micro_f1_constrained.at("");
    const bool ok = global >= local && local >= none;
    ordered += ok;
    std::printf("| %llu | %.3f | %.3f | %.3f | %s |\n",
                static_cast<unsigned long long>(seed), none, local, global,
                ok ? "yes" : "no");
  }
  std::printf("\nglobal >= local >= none on %d of %d seeds\n", ordered, seeds);
  return 0;
}

int RunInfer(const std::string &path, bool no_constraints, bool brute_force,
             const std::string &lp_path) {
  std::ifstream in(path);
  if (!in) throw sp::Error(sp::ErrorCode::kIoError, "cannot read " + path);
  sp::json j;
  try {
    j = sp::json::parse(in);
  } catch (const sp::json::exception &e) {
    throw sp::Error(sp::ErrorCode::kSchemaError, path + ": " + e.what());
  }
  sp::StructuredProblem p = sp::ProblemFromJson(j);
  if (no_constraints) p = p.WithoutHardConstraints();
  if (!lp_path.empty()) {
    std::ofstream lp(lp_path);
    lp << sp::ExportLp(p);
    if (!lp) throw sp::Error(sp::ErrorCode::kIoError, "cannot write " + lp_path);
  }
  const sp::SolveResult r = brute_force ? sp::BruteForceMap(p) : sp::SolveMap(p);
  sp::json out{{"objective", r.objective},
               {"proven_optimal", r.proven_optimal},
               {"nodes_explored", r.nodes_explored},
               {"labels", sp::json::object()},
               {"violations", sp::CountAllViolations(p, r.assignment)}};
  const auto labels = p.LabelsFromAssignment(r.assignment);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out["labels"][p.decisions()[i].id.ToString()] = labels[i];
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Structured inference over LLM confidence scores"};
  app.require_subcommand(1);

  Overrides score_o, cal_o, eval_o;
  auto *score = app.add_subcommand("score", "Score every fold and cache it");
  AddRunFlags(score, score_o);

  auto *evaluate = app.add_subcommand(
      "evaluate", "Score, calibrate, infer and write the report");
  AddRunFlags(evaluate, eval_o);

  auto *calibrate = app.add_subcommand(
      "calibrate", "Train calibrators per fold, or run the synthetic benchmark");
  bool benchmark = false;
  int bench_seeds = 10;
  std::uint64_t bench_seed = 1;
  calibrate->add_flag("--benchmark", benchmark,
                      "Run the synthetic distorted-score benchmark");
  calibrate->add_option("--seeds", bench_seeds, "Benchmark seeds")
      ->check(CLI::PositiveNumber);
  calibrate->add_option("--first-seed", bench_seed, "First benchmark seed");
  calibrate->add_option("--config", cal_o.config, "Experiment config (JSON)")
      ->check(CLI::ExistingFile);
  calibrate->add_option("--calibration", cal_o.calibration, "local or global")
      ->check(CLI::IsMember({"local", "global"}));
  calibrate->add_option("--out", cal_o.out, "Output directory");
  calibrate->add_option("--cache-dir", cal_o.cache_dir, "Score cache");
  calibrate->add_option("--seed", cal_o.seed, "Top-level seed");
  calibrate->add_flag("-q,--quiet", cal_o.quiet, "No progress output");

  std::string problem_path, lp_path;
  bool no_constraints = false, brute_force = false;
  auto *infer = app.add_subcommand("infer", "MAP inference on a problem file");
  infer->add_option("--problem", problem_path, "Problem JSON")->required();
  infer->add_flag("--no-constraints", no_constraints,
                  "Drop hard constraints before solving");
  infer->add_flag("--brute-force", brute_force, "Enumerate instead of B&B");
  infer->add_option("--lp", lp_path, "Also write the problem in LP format");

  std::string report_in, report_out;
  auto *report = app.add_subcommand("report", "Re-render a JSON report");
  report->add_option("--in", report_in, "report.json")->required();
  report->add_option("--out", report_out, "Directory for md/svg/json copies");

  std::string fixture_task, fixture_out;
  std::vector<std::string> fixture_strategies;
  int fixture_items = 0;
  auto *fixture = app.add_subcommand(
      "fixture", "Write a fixture corpus, mock script and config");
  fixture->add_option("--task", fixture_task, "morality or coref")
      ->required()
      ->check(CLI::IsMember({"morality", "coref"}));
  fixture->add_option("--out", fixture_out, "Directory")->required();
  fixture->add_option("--strategy", fixture_strategies, "method[:shots]");
  fixture->add_option("--items", fixture_items, "Tweets or documents");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*score) return RunStage(score_o, sp::RunStage::kScore);
    if (*evaluate) return RunStage(eval_o, sp::RunStage::kEvaluate);
    if (*calibrate) {
      if (benchmark) return RunBenchmark(bench_seeds, bench_seed);
      if (cal_o.config.empty()) {
        throw sp::Error(sp::ErrorCode::kConfigError,
                        "calibrate needs --config or --benchmark");
      }
      if (cal_o.calibration.empty()) cal_o.calibration = "global";
      return RunStage(cal_o, sp::RunStage::kCalibrate);
    }
    if (*infer) {
      return RunInfer(problem_path, no_constraints, brute_force, lp_path);
    }
    if (*report) {
      const sp::MetricsReport r = sp::LoadReport(report_in);
      if (!report_out.empty()) sp::EmitReport(r, report_out);
      std::cout << sp::ReportMarkdown(r);
      return 0;
    }
    if (*fixture) {
      std::vector<sp::StrategyConfig> strategies;
      for (const auto &s : fixture_strategies) {
        sp::StrategyConfig sc = ParseStrategyArg(s);
        if (fixture_task == "morality") {
          sc.variants = {sp::ContextVariant::kPlain,
                         sp::ContextVariant::kIdeologyTopic};
        }
        strategies.push_back(sc);
      }
      const sp::Fixture fx =
          fixture_task == "morality"
              ? sp::MakeMoralityFixture(fixture_out, strategies,
                                        fixture_items > 0 ? fixture_items : 20)
              : sp::MakeCorefFixture(fixture_out, strategies,
                                     fixture_items > 0 ? fixture_items : 12);
      std::printf("wrote %s (%zu scripted prompts)\n",
                  (fs::path(fixture_out) / "config.json").string().c_str(),
                  fx.script["entries"].size());
      return 0;
    }
  } catch (const sp::Error &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return sp::ExitCodeFor(e.code());
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
