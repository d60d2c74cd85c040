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

#include <cmath>
#include <cstdio>
#include <random>

#include "structprompt/calibration.h"
#include "structprompt/morality.h"

namespace structprompt {

namespace {

constexpr const char *kBenchStrategy = "tf";

std::vector<double> SoftmaxOf(std::vector<double> z) {
  double top = z[0];
  for (double v : z) top = std::max(top, v);
  double sum = 0;
  for (double &v : z) {
    v = std::exp(v - top);
    sum += v;
  }
  for (double &v : z) v /= sum;
  return z;
}

StructuredProblem MakeItem(std::mt19937_64 &rng, const std::string &name,
                           const DistortedBenchmarkOptions &o) {
  std::uniform_int_distribution<int> pick_foundation(0, kNumFoundations - 1);
  std::uniform_int_distribution<int> pick_entities(2, 4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> fnoise(0.0, o.foundation_noise);
  std::normal_distribution<double> rnoise(0.0, o.role_noise);

  const int f = pick_foundation(rng);
  const int entities = pick_entities(rng);
  const auto &group = MoralityAlignment()[f];
  std::uniform_int_distribution<int> pick_role(
      0, static_cast<int>(group.size()) - 1);

  DecisionId fid{name, kMoralFoundation, "tweet"};
  std::vector<DecisionSpec> decisions{{fid, kNumFoundations}};
  std::vector<ScoreTable> tables;
  std::map<DecisionId, int> gold{{fid, f}};

  std::vector<double> zf(kNumFoundations);
  for (int k = 0; k < kNumFoundations; ++k) {
    zf[k] = (k == f ? o.foundation_signal : 0.0) + fnoise(rng) +
            (k < static_cast<int>(o.foundation_bias.size())
                 ? o.foundation_bias[k]
                 : 0.0);
  }
  tables.push_back({fid, kBenchStrategy, SoftmaxOf(zf), {}});

  const bool corrupt = unit(rng) < o.corruption_rate;
  const int wrong = (f + 1 + std::uniform_int_distribution<int>(
                                 0, kNumFoundations - 2)(rng)) %
                    kNumFoundations;
  AlignmentSpec align;
  align.foundation = fid;
  align.table = MoralityAlignment();
  for (int e = 0; e < entities; ++e) {
    const int role = group[pick_role(rng)];
    DecisionId rid{name, kMoralRole, "entity-" + std::to_string(e)};
    std::vector<double> zr(kNumRoles);
    for (int k = 0; k < kNumRoles; ++k) {
      zr[k] = (k == role ? o.role_signal : 0.0) + rnoise(rng) +
              (corrupt && kRoleFoundation[k] == wrong ? o.corruption_shift
                                                      : 0.0);
    }
    decisions.push_back({rid, kNumRoles});
    tables.push_back({rid, kBenchStrategy, SoftmaxOf(zr), {}});
    gold[rid] = role;
    align.roles.push_back(rid);
  }
  return BuildProblem(decisions, tables, {align}, gold);
}

std::vector<StructuredProblem> MakeSplit(std::mt19937_64 &rng,
                                         const std::string &split, int n,
                                         const DistortedBenchmarkOptions &o) {
  std::vector<StructuredProblem> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "%s-%05d", split.c_str(), i);
    out.push_back(MakeItem(rng, name, o));
  }
  return out;
}

}  // namespace

DistortedBenchmark MakeDistortedBenchmark(
    std::uint64_t seed, const DistortedBenchmarkOptions &options) {
  std::mt19937_64 rng(seed);
  DistortedBenchmark b;
  b.train = MakeSplit(rng, "train", options.train_items, options);
  b.dev = MakeSplit(rng, "dev", options.dev_items, options);
  b.test = MakeSplit(rng, "test", options.test_items, options);
  return b;
}

TrainConfig BenchmarkLocalConfig(std::uint64_t seed) {
  TrainConfig c;
  c.learning_rate = 0.5;
  c.epochs = 60;
  c.patience = 0;
  c.seed = seed;
  return c;
}

TrainConfig BenchmarkGlobalConfig(std::uint64_t seed) {
  TrainConfig c;
  c.objective = Objective::kGlobalHinge;
  c.learning_rate = 0.5;
  c.document_batches = true;
  c.epochs = 30;
  c.patience = 0;
  c.seed = seed;
  return c;
}

CalibrationLevels RunCalibrationLevels(const DistortedBenchmark &bench,
                                       const TrainConfig &local,
                                       const TrainConfig &global) {
  CalibrationLevels out;
  const CalibratorSet local_cals = TrainLocal(bench.train, bench.dev, local);
  const CalibratorSet global_cals =
      TrainGlobal(bench.train, bench.dev, global, local_cals);
  out.none = EvaluateCalibration({}, bench.test, global.solve_limits);
  out.local = EvaluateCalibration(local_cals, bench.test, global.solve_limits);
  out.global =
      EvaluateCalibration(global_cals, bench.test, global.solve_limits);
  return out;
}

}  // namespace structprompt
