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

#include "structprompt/calibration.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "structprompt/constraints.h"
#include "structprompt/morality.h"
#include "test_util.h"

namespace structprompt {
namespace {

using testing::CodeOf;
using testing::Dec;
using testing::Table;

// Single-decision problem with gold label `gold`.
StructuredProblem One(int i, std::vector<double> scores, int gold,
                      const std::string &strategy = "tf") {
  const auto id = Dec("x", "item" + std::to_string(i), "label");
  const int n = static_cast<int>(scores.size());
  return BuildProblem({{id, n}}, {Table(id, strategy, std::move(scores))}, {},
                      std::map<DecisionId, int>{{id, gold}});
}

double Accuracy(const CalibratorSet &cals,
                const std::vector<StructuredProblem> &problems) {
  int hit = 0;
  for (const auto &p : problems) {
    const auto cp = cals.Apply(p);
    const auto pred = cp.LabelsFromAssignment(LocalArgmax(cp));
    hit += pred == cp.LabelsFromAssignment(*cp.gold());
  }
  return static_cast<double>(hit) / static_cast<double>(problems.size());
}

TEST_CASE("calibrate examples") {
  const auto id = Calibrator::Identity("s", "tf", 2);
  CHECK(id.Apply({0.7, 0.3}) == std::vector<double>{0.7, 0.3});

  auto zero = Calibrator::Affine("s", "tf", 3);
  std::fill(zero.weights.begin(), zero.weights.end(), 0.0);
  for (double v : zero.Apply({0.9, 0.05, 0.05})) {
    CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }

  auto sharp = Calibrator::Affine("s", "tf", 2);
  sharp.weights = {10, 0, 0, 10};
  const auto s = sharp.Apply({0.7, 0.3});
  CHECK(s[0] == doctest::Approx(0.9820137900379085).epsilon(1e-12));
  CHECK(s[1] == doctest::Approx(0.017986209962091555).epsilon(1e-12));

  CHECK(CodeOf([&] { sharp.Apply({1.0, 0.0, 0.0}); }) ==
        ErrorCode::kDimMismatch);
}

TEST_CASE("calibrator set json round trip") {
  CalibratorSet set;
  auto a = Calibrator::Affine(kMoralRole, "tf", 3);
  a.bias = {0.25, -1.5, 0.0};
  set.Put(a);
  set.Put(Calibrator::Identity(kMoralFoundation, "mc", 5));
  const auto back = CalibratorSet::FromJson(json::parse(set.ToJson().dump()));
  CHECK(back == set);
  CHECK(CodeOf([] {
          CalibratorSet::FromJson(json::parse(R"({"calibrators":[{"x":1}]})"));
        }) == ErrorCode::kSchemaError);
}

TEST_CASE("train config json") {
  TrainConfig c;
  c.objective = Objective::kGlobalHinge;
  c.document_batches = true;
  c.hamming_cost = true;
  const TrainConfig back = json(c).get<TrainConfig>();
  CHECK(back.objective == Objective::kGlobalHinge);
  CHECK(back.document_batches);
  CHECK(back.hamming_cost);
  CHECK(CodeOf([] {
          json::parse(R"({"objective":"other"})").get<TrainConfig>();
        }) == ErrorCode::kConfigError);
  CHECK(CodeOf([] {
          json::parse(R"({"learning_rate":0})").get<TrainConfig>();
        }) == ErrorCode::kConfigError);
}

TEST_CASE("local training on one-hot scores") {
  std::mt19937_64 rng(3);
  std::vector<StructuredProblem> train, dev;
  for (int i = 0; i < 200; ++i) {
    const int g = static_cast<int>(rng() % 3);
    std::vector<double> w(3, 0.0);
    w[g] = 1.0;
    (i < 150 ? train : dev).push_back(One(i, w, g));
  }
  TrainConfig cfg;
  cfg.learning_rate = 2.0;
  cfg.epochs = 200;
  cfg.patience = 0;
  TrainStats stats;
  const auto cals = TrainLocal(train, dev, cfg, &stats);
  CHECK(CrossEntropy(train, cals) < 0.05);
  CHECK(Accuracy(cals, dev) >= Accuracy({}, dev));
  CHECK(stats.log.size() == 200);
}

TEST_CASE("local training on gold-independent scores finds the majority") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::vector<double> prior = {0.6, 0.3, 0.1};
  std::discrete_distribution<int> draw(prior.begin(), prior.end());
  std::vector<StructuredProblem> train, dev, test;
  for (int i = 0; i < 1500; ++i) {
    std::vector<double> w = {unit(rng), unit(rng), unit(rng)};
    const double sum = w[0] + w[1] + w[2];
    for (double &v : w) v /= sum;
    const int g = draw(rng);
    (i < 800 ? train : i < 1000 ? dev : test).push_back(One(i, w, g));
  }
  TrainConfig cfg;
  cfg.learning_rate = 0.5;
  cfg.epochs = 40;
  const auto cals = TrainLocal(train, dev, cfg);
  // The analytic majority rate is 0.6.
  CHECK(Accuracy(cals, test) == doctest::Approx(0.6).epsilon(0.08));
}

TEST_CASE("local training undoes a monotone distortion") {
  std::mt19937_64 rng(11);
  std::gamma_distribution<double> gamma(1.0, 1.0);
  std::vector<StructuredProblem> train, dev, test;
  int oracle_hits = 0, test_count = 0;
  for (int i = 0; i < 1500; ++i) {
    std::vector<double> p(4);
    double sum = 0;
    for (double &v : p) sum += (v = gamma(rng));
    for (double &v : p) v /= sum;
    std::discrete_distribution<int> draw(p.begin(), p.end());
    const int g = draw(rng);
    std::vector<double> w(4);
    double sq = 0;
    for (int k = 0; k < 4; ++k) sq += p[k] * p[k];
    for (int k = 0; k < 4; ++k) w[k] = p[k] * p[k] / sq;
    auto &split = i < 800 ? train : i < 1000 ? dev : test;
    split.push_back(One(i, w, g));
    if (i >= 1000) {
      ++test_count;
      oracle_hits += std::max_element(p.begin(), p.end()) - p.begin() == g;
    }
  }
  TrainConfig cfg;
  cfg.learning_rate = 0.5;
  cfg.epochs = 40;
  const auto cals = TrainLocal(train, dev, cfg);
  const double oracle = static_cast<double>(oracle_hits) / test_count;
  CHECK(Accuracy(cals, test) >= 0.98 * oracle);
  CHECK(CrossEntropy(test, cals) < CrossEntropy(test, {}));
}

TEST_CASE("local calibrators see only their own strategy") {
  std::vector<StructuredProblem> train;
  for (int i = 0; i < 40; ++i) {
    const auto id = Dec("x", "item" + std::to_string(i), "label");
    train.push_back(BuildProblem(
        {{id, 2}},
        {Table(id, "a", {1.0, 0.0}), Table(id, "b", {0.5, 0.5})}, {},
        std::map<DecisionId, int>{{id, 0}}));
  }
  TrainConfig cfg;
  cfg.epochs = 5;
  auto with_b = TrainLocal(train, {}, cfg);
  std::vector<StructuredProblem> only_a;
  for (int i = 0; i < 40; ++i) only_a.push_back(One(i, {1.0, 0.0}, 0, "a"));
  auto without_b = TrainLocal(only_a, {}, cfg);
  CHECK(*with_b.Find("label", "a") == *without_b.Find("label", "a"));
  CHECK(with_b.all().size() == 2);
}

TEST_CASE("training needs gold") {
  const auto id = Dec("x");
  const auto p = BuildProblem({{id, 2}}, {Table(id, "tf", {0.5, 0.5})}, {});
  CHECK(CodeOf([&] { TrainLocal({p}, {}, TrainConfig{}); }) ==
        ErrorCode::kNoGold);
  TrainConfig g;
  g.objective = Objective::kGlobalHinge;
  CHECK(CodeOf([&] { TrainGlobal({p}, {}, g); }) == ErrorCode::kNoGold);
  CHECK(CodeOf([&] { HingeLoss(p, {}, LocalArgmax(p)); }) ==
        ErrorCode::kNoGold);
}

TEST_CASE("local training reports divergence") {
  std::vector<StructuredProblem> train;
  for (int i = 0; i < 20; ++i) train.push_back(One(i, {1e300, -1e300}, 1));
  TrainConfig cfg;
  cfg.learning_rate = 1e300;
  cfg.epochs = 3;
  CHECK(CodeOf([&] { TrainLocal(train, {}, cfg); }) == ErrorCode::kDiverged);
}

TEST_CASE("hinge is zero at gold") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    auto p = testing::RandomProblem(rng);
    p = p.WithGold(LocalArgmax(p));
    GradientSet g;
    CHECK(HingeLoss(p, {}, *p.gold(), &g) == 0.0);
    CHECK(g.empty());
  }
}

TEST_CASE("hinge is the score difference") {
  // Predicted outcomes carry 0.9 + 0.6 + 0.5 = 2.0, gold ones
  // 0.9 + 0.4 + 0.4 = 1.7.
  const auto a = Dec("a"), b = Dec("b"), c = Dec("c");
  const auto p = BuildProblem(
      {{a, 2}, {b, 2}, {c, 2}},
      {Table(a, "tf", {0.9, 0.1}), Table(b, "tf", {0.4, 0.6}),
       Table(c, "tf", {0.5, 0.4})},
      {}, std::map<DecisionId, int>{{a, 0}, {b, 0}, {c, 1}});
  const auto pred = p.AssignmentFromLabels(std::vector<int>{0, 1, 0});
  CHECK(HingeLoss(p, {}, pred) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(HingeLoss(p, {}, pred, nullptr, 0.5) ==
        doctest::Approx(0.8).epsilon(1e-12));
  // Reversed roles give a negative margin, clipped to 0.
  const auto flipped = p.WithGold(pred);
  CHECK(HingeLoss(flipped, {}, *p.gold()) == 0.0);
}

// Random multi-strategy problem whose subproblems fix the label count, so
// one calibrator per (subproblem, strategy) fits every table.
StructuredProblem GradientProblem(std::mt19937_64 &rng) {
  std::uniform_int_distribution<int> count(1, 4), labels(2, 4), strat(1, 2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = count(rng);
  const int strategies = strat(rng);
  std::vector<DecisionSpec> decisions;
  std::vector<ScoreTable> tables;
  std::map<DecisionId, int> gold;
  for (int j = 0; j < n; ++j) {
    const int k = labels(rng);
    const auto id = Dec("d" + std::to_string(j), "t", "sub" + std::to_string(k));
    decisions.push_back({id, k});
    for (int s = 0; s < strategies; ++s) {
      std::vector<double> w(k);
      for (double &v : w) v = unit(rng);
      tables.push_back(Table(id, "s" + std::to_string(s), w));
    }
    gold[id] = static_cast<int>(rng() % k);
  }
  return BuildProblem(decisions, tables, {}, gold);
}

TEST_CASE("hinge gradient matches central differences") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> normal(0.0, 1.0);
  int checked = 0;
  double worst = 0;
  while (checked < 100) {
    const auto p = GradientProblem(rng);
    CalibratorSet cals = AffineCalibratorsFor({p});
    for (const auto &[key, c0] : cals.all()) {
      Calibrator c = c0;
      for (double &v : c.weights) v += normal(rng);
      for (double &v : c.bias) v += normal(rng);
      cals.Put(c);
    }
    std::vector<int> labels;
    for (const auto &d : p.decisions()) {
      labels.push_back(static_cast<int>(rng() % d.num_labels));
    }
    const auto pred = p.AssignmentFromLabels(labels);
    GradientSet grad;
    const double loss = HingeLoss(p, cals, pred, &grad);
    if (loss < 1e-3) continue;
    ++checked;

    const double h = 1e-4;
    double diff_sq = 0, norm_a = 0, norm_n = 0;
    for (const auto &[key, c0] : cals.all()) {
      const auto &g = grad.at(key);
      auto probe = [&](bool bias, std::size_t i) {
        CalibratorSet up = cals, down = cals;
        Calibrator cu = c0, cd = c0;
        (bias ? cu.bias : cu.weights)[i] += h;
        (bias ? cd.bias : cd.weights)[i] -= h;
        up.Put(cu);
        down.Put(cd);
        const double numeric =
            (HingeLoss(p, up, pred) - HingeLoss(p, down, pred)) / (2 * h);
        const double analytic = (bias ? g.bias : g.weights)[i];
        diff_sq += (numeric - analytic) * (numeric - analytic);
        norm_a += analytic * analytic;
        norm_n += numeric * numeric;
      };
      for (std::size_t i = 0; i < c0.weights.size(); ++i) probe(false, i);
      for (std::size_t i = 0; i < c0.bias.size(); ++i) probe(true, i);
    }
    const double scale = std::max({std::sqrt(norm_a), std::sqrt(norm_n), 1e-12});
    worst = std::max(worst, std::sqrt(diff_sq) / scale);
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("identity calibrators leave metrics unchanged") {
  const auto bench = MakeDistortedBenchmark(7, {20, 5, 60});
  CalibratorSet identity;
  identity.Put(Calibrator::Identity(kMoralFoundation, "tf", kNumFoundations));
  identity.Put(Calibrator::Identity(kMoralRole, "tf", kNumRoles));
  const json plain = EvaluateCalibration({}, bench.test);
  const json same = EvaluateCalibration(identity, bench.test);
  CHECK(plain.dump() == same.dump());
}

TEST_CASE("constrained evaluation has no violations") {
  const auto bench = MakeDistortedBenchmark(8, {20, 5, 80});
  const auto report = EvaluateCalibration({}, bench.test);
  for (const auto &[tag, n] : report.violations_constrained) CHECK(n == 0);
  long unconstrained = 0;
  for (const auto &[tag, n] : report.violations_unconstrained) {
    unconstrained += n;
  }
  CHECK(unconstrained > 0);
  CHECK(report.solver_failures == 0);
}

TEST_CASE("benchmark is deterministic and well formed") {
  const auto a = MakeDistortedBenchmark(4, {10, 2, 3});
  const auto b = MakeDistortedBenchmark(4, {10, 2, 3});
  REQUIRE(a.train.size() == 10);
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    CHECK(ProblemToJson(a.train[i]) == ProblemToJson(b.train[i]));
    CHECK(IsFeasible(a.train[i], *a.train[i].gold()));
  }
}

TEST_CASE("global training writes its log and keeps the best start") {
  const auto bench = MakeDistortedBenchmark(9, {60, 30, 10});
  const auto path = std::filesystem::temp_directory_path() /
                    "structprompt_global_log.jsonl";
  std::filesystem::remove(path);
  TrainConfig cfg = BenchmarkGlobalConfig(9);
  cfg.epochs = 3;
  cfg.log_path = path;
  TrainStats stats;
  TrainGlobal(bench.train, bench.dev, cfg, {}, &stats);
  std::ifstream in(path);
  int lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  CHECK(lines == 4);
  CHECK(stats.best_dev >= stats.log.front()["dev_f1"].get<double>());
  std::filesystem::remove(path);
}

TEST_CASE("calibration ordering on one benchmark seed") {
  const auto bench = MakeDistortedBenchmark(1);
  const auto levels =
      RunCalibrationLevels(bench, BenchmarkLocalConfig(1),
                           BenchmarkGlobalConfig(1));
  const auto c = [](const CalibrationReport &r) {
    return r.micro_f1_constrained.at("");
  };
  const auto u = [](const CalibrationReport &r) {
    return r.micro_f1_unconstrained.at("");
  };
  MESSAGE("none " << c(levels.none) << " local " << c(levels.local)
                  << " global " << c(levels.global));
  CHECK(c(levels.global) >= c(levels.local));
  CHECK(c(levels.local) >= c(levels.none));
  CHECK(c(levels.none) >= u(levels.none));
  CHECK(c(levels.local) >= u(levels.local));
  CHECK(c(levels.global) >= u(levels.global));
}

}  // namespace
}  // namespace structprompt
