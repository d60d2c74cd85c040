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

#include "structprompt/experiment.h"

#include <fstream>
#include <sstream>

#include "doctest.h"
#include "structprompt/constraints.h"
#include "test_util.h"

namespace structprompt {
namespace {

namespace fs = std::filesystem;
using testing::CodeOf;

fs::path Fresh(const std::string &name) {
  const auto dir = fs::temp_directory_path() / ("structprompt_exp_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string Slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig MinimalConfig() {
  ExperimentConfig c;
  c.dataset = "data.jsonl";
  c.strategies = {{kTrueFalse, 0, {ContextVariant::kPlain}}};
  return c;
}

TEST_CASE("config round trip and validation") {
  ExperimentConfig c = MinimalConfig();
  c.strategies.push_back(
      {kMultipleChoice, 5,
       {ContextVariant::kPlain, ContextVariant::kIdeologyTopic}});
  c.calibration = CalibrationMode::kGlobal;
  c.morality_constraints.role_uniqueness = false;
  c.seed = 99;
  const json j = c;
  const ExperimentConfig back = j.get<ExperimentConfig>();
  CHECK(json(back) == j);
  CHECK(back.strategies[1].variants.size() == 2);
  CHECK_FALSE(back.morality_constraints.role_uniqueness);
  CHECK_NOTHROW(ValidateConfig(back));

  auto invalid = [](auto mutate) {
    ExperimentConfig x = MinimalConfig();
    mutate(x);
    return CodeOf([&] { ValidateConfig(x); });
  };
  CHECK(invalid([](auto &x) { x.strategies.clear(); }) ==
        ErrorCode::kConfigError);
  CHECK(invalid([](auto &x) { x.strategies[0].shots = 3; }) ==
        ErrorCode::kConfigError);
  CHECK(invalid([](auto &x) {
          x.strategies[0] = {kGenerativeClassification, 2, {}};
        }) == ErrorCode::kConfigError);
  CHECK(invalid([](auto &x) { x.strategies[0].method = "guess"; }) ==
        ErrorCode::kConfigError);
  CHECK(invalid([](auto &x) {
          x.task = kTaskCoref;
          x.strategies[0].variants = {ContextVariant::kIdeologyTopic};
        }) == ErrorCode::kConfigError);
  CHECK(invalid([](auto &x) { x.backend.mode = BackendMode::kBlackBox; }) ==
        ErrorCode::kConfigError);
  CHECK(invalid([](auto &x) { x.folds = 0; }) == ErrorCode::kConfigError);
  CHECK(CodeOf([] { json{{"taks", "coref"}}.get<ExperimentConfig>(); }) ==
        ErrorCode::kConfigError);
  CHECK(CodeOf([] {
          json{{"calibration", "sometimes"}}.get<ExperimentConfig>();
        }) == ErrorCode::kConfigError);
}

TEST_CASE("config paths resolve against the config file") {
  const auto dir = Fresh("paths");
  std::ofstream(dir / "c.json")
      << R"({"dataset": "d.jsonl", "strategies": ["true_false"],
             "backend": {"endpoint": "mock", "model_id": "s.json"}})";
  const auto c = LoadConfig(dir / "c.json");
  CHECK(c.dataset == dir / "d.jsonl");
  CHECK(c.output_dir == dir / "out");
  CHECK(CacheDir(c) == dir / "out" / "cache");
  CHECK(c.backend.model_id == (dir / "s.json").generic_string());
}

TEST_CASE("fold summaries") {
  const Stat one = Summarize({0.5});
  CHECK(one.mean == 0.5);
  CHECK_FALSE(one.stdev.has_value());
  const Stat three = Summarize({1.0, 2.0, 3.0});
  CHECK(three.mean == doctest::Approx(2.0));
  CHECK(*three.stdev == doctest::Approx(1.0));
}

TEST_CASE("fixture scripts reproduce their target tables") {
  const auto dir = Fresh("targets");
  Fixture fx = MakeCorefFixture(dir / "fx", {}, 4);
  fx.config.folds = 2;
  RunOptions opts;
  opts.stop_after = RunStage::kScore;
  // Zero-shot prompts do not depend on the split, so the script still fits.
  RunExperiment(fx.config, opts);
  const auto records = ReadScoreRecords(fx.config.output_dir / "scores.jsonl");
  REQUIRE(records.size() > 0);
  for (const auto &r : records) {
    const auto &s = r.table.scores;
    REQUIRE(s.size() == 2);
    // Targets are tenths; true/false carries the 1e-3 floor.
    const double tenths = std::round(s[0] * 10.0);
    CHECK(s[0] == doctest::Approx(tenths / 10.0).epsilon(2e-3));
    CHECK(s[0] + s[1] == doctest::Approx(1.0));
  }
}

TEST_CASE("morality fixture: constrained rows never violate") {
  const auto dir = Fresh("morality");
  const Fixture fx = MakeMoralityFixture(dir);
  RunStats stats;
  const MetricsReport report = RunExperiment(fx.config, {}, &stats);
  REQUIRE(report.rows.size() == 10);
  CHECK(report.tags == std::vector<std::string>{kTagAlignment, kTagMutex});
  long unconstrained_total = 0;
  for (const auto &row : report.rows) {
    CAPTURE(row.label);
    REQUIRE(row.folds.size() == 5);
    for (const auto &tag : report.tags) {
      if (row.constrained) {
        CHECK(row.violations.at(tag) == 0);
      } else {
        unconstrained_total += row.violations.at(tag);
      }
    }
    if (!row.constrained) CHECK(row.violations.at(kTagAlignment) > 0);
  }
  CHECK(unconstrained_total > 0);
  // Constraints fix the scripted conflicts, so "+ constr" is at least as good.
  for (std::size_t i = 0; i + 1 < report.rows.size(); i += 2) {
    CHECK(report.rows[i + 1].micro_f1.at("").mean >=
          report.rows[i].micro_f1.at("").mean);
  }
  CHECK(stats.backend_requests > 0);
  CHECK(fs::exists(fx.config.output_dir / "report.md"));
  CHECK(fs::exists(fx.config.output_dir / "report.svg"));
  CHECK(fs::exists(fx.config.output_dir / "timing.json"));
}

TEST_CASE("coref fixture: transitivity repairs the scripted conflicts") {
  const auto dir = Fresh("coref");
  const Fixture fx = MakeCorefFixture(dir);
  const MetricsReport report = RunExperiment(fx.config);
  REQUIRE(report.rows.size() == 10);
  for (const auto &row : report.rows) {
    CAPTURE(row.label);
    if (row.constrained) {
      CHECK(row.violations.at(kTagTransitivity) == 0);
      CHECK(row.macro_f1.at(kCorefPair).mean == doctest::Approx(1.0));
    } else {
      CHECK(row.violations.at(kTagTransitivity) > 0);
    }
  }
}

TEST_CASE("reruns are byte-identical and the warm cache sends nothing") {
  const auto dir = Fresh("determinism");
  Fixture fx = MakeMoralityFixture(
      dir, {{kTrueFalse, 2, {ContextVariant::kPlain}},
            {kGenerationSampling, 0, {ContextVariant::kPlain}}});
  fx.config.workers = 4;
  RunStats cold, warm;
  RunExperiment(fx.config, {}, &cold);
  const std::string first = Slurp(fx.config.output_dir / "report.json");
  fs::remove(fx.config.output_dir / "report.json");
  RunExperiment(fx.config, {}, &warm);
  CHECK(Slurp(fx.config.output_dir / "report.json") == first);
  CHECK(cold.backend_requests > 0);
  CHECK(warm.backend_requests == 0);
  CHECK(warm.cache_misses == 0);

  // A cold cache in a second directory gives the same numbers.
  fx.config.cache_dir = dir / "other-cache";
  fx.config.workers = 1;
  RunStats again;
  RunExperiment(fx.config, {}, &again);
  CHECK(Slurp(fx.config.output_dir / "report.json") != first);  // config differs
  CHECK(LoadReport(fx.config.output_dir / "report.json").rows ==
        json::parse(first).get<MetricsReport>().rows);
  CHECK(again.backend_requests == cold.backend_requests);
}

TEST_CASE("report formats") {
  const auto dir = Fresh("formats");
  Fixture fx = MakeCorefFixture(dir, {{kTrueFalse, 0}}, 4);
  fx.config.folds = 1;
  const MetricsReport report = RunExperiment(fx.config);
  const std::string md = ReportMarkdown(report);
  CHECK(md.find("| + constr |") != std::string::npos);
  CHECK(md.find("| true_false (0-shot) |") != std::string::npos);
  CHECK(md.find("±") == std::string::npos);
  CHECK(md.find("transitivity viol.") != std::string::npos);
  CHECK(LoadReport(fx.config.output_dir / "report.json") == report);
  CHECK(ReportSvg(report).find("<circle") != std::string::npos);

  MetricsReport multi = report;
  multi.folds = 2;
  for (auto &row : multi.rows) row.folds.push_back(row.folds[0]);
  Aggregate(multi);
  CHECK(ReportMarkdown(multi).find("±") != std::string::npos);
  CHECK(CodeOf([&] { LoadReport(dir / "missing.json"); }) ==
        ErrorCode::kIoError);
}

TEST_CASE("errors carry fold and instance context") {
  const auto dir = Fresh("errors");
  Fixture fx = MakeCorefFixture(dir, {{kTrueFalse, 0}}, 4);
  MockBackend empty;
  RunOptions opts;
  opts.backend = &empty;
  try {
    RunExperiment(fx.config, opts);
    FAIL("expected an error");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::kMalformedResponse);
    CHECK(std::string(e.what()).find("fold 0, true_false (0-shot), doc-") !=
          std::string::npos);
  }
  // Scores of earlier folds stay on disk.
  CHECK(fs::exists(fx.config.output_dir / "scores.jsonl"));

  fx.config.dataset = dir / "absent.jsonl";
  CHECK(CodeOf([&] { RunExperiment(fx.config); }) == ErrorCode::kIoError);
}

TEST_CASE("calibrated runs train per fold") {
  const auto dir = Fresh("calibrated");
  Fixture fx = MakeCorefFixture(dir, {{kVerbalizedConfidence, 0}}, 10);
  fx.config.calibration = CalibrationMode::kGlobal;
  fx.config.train.epochs = 3;
  const MetricsReport report = RunExperiment(fx.config);
  for (const auto &row : report.rows) {
    if (row.constrained) CHECK(row.violations.at(kTagTransitivity) == 0);
  }
  CHECK(fs::exists(fx.config.output_dir / "calibrators" /
                   "fold0-verbalized_confidence-0.json"));
}

}  // namespace
}  // namespace structprompt
