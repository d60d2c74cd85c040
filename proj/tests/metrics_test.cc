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

#include "doctest.h"
#include "structprompt/constraints.h"
#include "test_util.h"

namespace structprompt {
namespace {

using testing::CodeOf;
using testing::Dec;
using testing::Table;

// 7 true positives, 3 false positives, 3 false negatives, 7 true negatives.
void BinaryCounts(std::vector<int> &pred, std::vector<int> &gold) {
  auto push = [&](int p, int g, int n) {
    for (int i = 0; i < n; ++i) {
      pred.push_back(p);
      gold.push_back(g);
    }
  };
  push(1, 1, 7);
  push(1, 0, 3);
  push(0, 1, 3);
  push(0, 0, 7);
}

TEST_CASE("f1 from confusion counts") {
  std::vector<int> pred, gold;
  BinaryCounts(pred, gold);
  CHECK(ClassF1(pred, gold, 1) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(ComputeF1(pred, gold, Averaging::kMacro) ==
        doctest::Approx(0.7).epsilon(1e-12));
  CHECK(ComputeF1(pred, gold, Averaging::kMicro) ==
        doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("micro f1 is accuracy") {
  const std::vector<int> pred = {0, 1, 2, 2, 1, 0, 3};
  const std::vector<int> gold = {0, 2, 2, 2, 1, 1, 3};
  CHECK(ComputeF1(pred, gold, Averaging::kMicro) ==
        doctest::Approx(5.0 / 7.0));
}

TEST_CASE("macro f1 skips classes absent everywhere") {
  // Label space is larger than the observed labels; only 0 and 1 count.
  const std::vector<int> pred = {0, 0, 1};
  const std::vector<int> gold = {0, 1, 1};
  // class 0: tp 1 fp 1 fn 0 -> 2/3; class 1: tp 1 fp 0 fn 1 -> 2/3.
  CHECK(ComputeF1(pred, gold, Averaging::kMacro) ==
        doctest::Approx(2.0 / 3.0));
  // A gold class never predicted contributes 0.
  CHECK(ComputeF1({0, 0}, {0, 4}, Averaging::kMacro) ==
        doctest::Approx((2.0 / 3.0 + 0.0) / 2.0));
  CHECK(ComputeF1({}, {}, Averaging::kMacro) == 0.0);
  CHECK(CodeOf([] { ComputeF1({0}, {0, 1}, Averaging::kMicro); }) ==
        ErrorCode::kLengthMismatch);
}

TEST_CASE("expected calibration error") {
  CHECK(ExpectedCalibrationError({0.9, 0.9}, {true, false}) ==
        doctest::Approx(0.4));
  CHECK(ExpectedCalibrationError({1.0, 0.55}, {true, true}) ==
        doctest::Approx(0.225));
  CHECK(ExpectedCalibrationError({}, {}) == 0.0);
}

TEST_CASE("tally pools subproblems and counts violations") {
  const auto f = Dec("f", "t0", kMoralFoundation);
  const auto r = Dec("r", "t0", kMoralRole);
  AlignmentSpec align{f, {r}, {{0}, {1}}};
  const auto p = BuildProblem({{f, 2}, {r, 2}},
                              {Table(f, "tf", {0.9, 0.1}),
                               Table(r, "tf", {0.2, 0.8})},
                              {align}, std::map<DecisionId, int>{{f, 0}, {r, 0}});
  LabelTally tally;
  tally.Add(p, p.AssignmentFromLabels(std::vector<int>{0, 1}));
  CHECK(tally.F1(kMoralFoundation, Averaging::kMicro) == 1.0);
  CHECK(tally.F1(kMoralRole, Averaging::kMicro) == 0.0);
  CHECK(tally.F1("", Averaging::kMicro) == doctest::Approx(0.5));
  CHECK(tally.violations.at(kTagAlignment) == 1);
  CHECK(tally.TotalViolations() == 1);

  LabelTally no_gold;
  CHECK(CodeOf([&] {
          no_gold.Add(p.WithGold(std::nullopt), *p.gold());
        }) == ErrorCode::kNoGold);
}

}  // namespace
}  // namespace structprompt
