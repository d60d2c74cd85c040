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

#include "structprompt/core_model.h"

#include <algorithm>
#include <random>

#include "doctest.h"
#include "test_util.h"

namespace structprompt {
namespace {

using testing::CodeOf;
using testing::Dec;
using testing::Table;

int CountTag(const StructuredProblem &p, const std::string &tag) {
  return static_cast<int>(
      std::count_if(p.constraints().begin(), p.constraints().end(),
                    [&](const LinearConstraint &c) { return c.tag == tag; }));
}

int CountKind(const StructuredProblem &p, VarKind kind) {
  return static_cast<int>(
      std::count_if(p.variables().begin(), p.variables().end(),
                    [&](const Variable &v) { return v.key.kind == kind; }));
}

TEST_CASE("one decision, two labels, one strategy") {
  auto p = BuildProblem({{Dec("a"), 2}}, {Table(Dec("a"), "tf", {0.7, 0.3})},
                        {});
  CHECK(CountKind(p, VarKind::kOutcome) == 2);
  CHECK(CountKind(p, VarKind::kDecision) == 2);
  CHECK(CountTag(p, "multiclass") == 1);
  CHECK(CountTag(p, "link_ub") + CountTag(p, "link_lb") == 4);
  CHECK(p.constraints().size() == 5);
}

TEST_CASE("two strategies double the outcome variables") {
  auto p = BuildProblem({{Dec("a"), 2}},
                        {Table(Dec("a"), "tf", {0.7, 0.3}),
                         Table(Dec("a"), "mc", {0.4, 0.6})},
                        {});
  CHECK(CountKind(p, VarKind::kOutcome) == 4);
  CHECK(CountKind(p, VarKind::kDecision) == 2);
  CHECK(p.strategies() == std::vector<std::string>{"mc", "tf"});
}

TEST_CASE("variables follow the canonical (decision, label, strategy) order") {
  auto p = BuildProblem({{Dec("b"), 2}, {Dec("a"), 3}},
                        {Table(Dec("b"), "z", {0.5, 0.5}),
                         Table(Dec("a"), "z", {0.2, 0.3, 0.5}),
                         Table(Dec("b"), "y", {0.1, 0.9}),
                         Table(Dec("a"), "y", {0.6, 0.2, 0.2})},
                        {});
  std::vector<VarKey> keys;
  for (const auto &v : p.variables()) keys.push_back(v.key);
  CHECK(std::is_sorted(keys.begin(), keys.end()));
  CHECK(keys.front() == VarKey::Decision(Dec("a"), 0));
  CHECK(keys[1] == VarKey::Outcome(Dec("a"), 0, "y"));
}

TEST_CASE("build errors") {
  CHECK(CodeOf([] {
          BuildProblem({{Dec("a"), 2}, {Dec("b"), 2}},
                       {Table(Dec("a"), "tf", {0.5, 0.5})}, {});
        }) == ErrorCode::kMissingScore);
  // b is scored by only one of two strategies.
  auto partial = [] {
    return BuildProblem({{Dec("a"), 2}, {Dec("b"), 2}},
                        {Table(Dec("a"), "tf", {0.5, 0.5}),
                         Table(Dec("a"), "mc", {0.5, 0.5}),
                         Table(Dec("b"), "tf", {0.5, 0.5})},
                        {}, std::nullopt,
                        BuildOptions{.allow_partial_coverage = false});
  };
  CHECK(CodeOf(partial) == ErrorCode::kMissingScore);
  auto relaxed = BuildProblem({{Dec("a"), 2}, {Dec("b"), 2}},
                              {Table(Dec("a"), "tf", {0.5, 0.5}),
                               Table(Dec("a"), "mc", {0.5, 0.5}),
                               Table(Dec("b"), "tf", {0.5, 0.5})},
                              {}, std::nullopt,
                              BuildOptions{.allow_partial_coverage = true});
  CHECK(CountKind(relaxed, VarKind::kOutcome) == 6);

  CHECK(CodeOf([] {
          HornSpec h{{{Dec("a"), 0}}, {Dec("missing"), 0}, "horn"};
          BuildProblem({{Dec("a"), 2}}, {Table(Dec("a"), "tf", {0.5, 0.5})},
                       {h});
        }) == ErrorCode::kDanglingReference);
  CHECK(CodeOf([] {
          BuildProblem({{Dec("a"), 2}},
                       {Table(Dec("a"), "tf", {std::nan(""), 0.5})}, {});
        }) == ErrorCode::kInvalidProblem);
}

TEST_CASE("objective value") {
  auto p = BuildProblem({{Dec("a"), 3}},
                        {Table(Dec("a"), "s1", {0.9, 0.1, 0.0}),
                         Table(Dec("a"), "s2", {0.9, 0.2, 0.0})},
                        {});
  Assignment zeros(p.num_variables());
  for (std::size_t i = 0; i < zeros.size(); ++i) zeros.Set(i, false);
  CHECK(ObjectiveValue(p, zeros) == 0.0);

  auto single = BuildProblem({{Dec("a"), 2}},
                             {Table(Dec("a"), "tf", {0.7, 0.3})}, {});
  Assignment a = single.AssignmentFromLabels(std::vector<int>{0});
  CHECK(ObjectiveValue(single, a) == doctest::Approx(0.7));

  // Outcomes with weights 0.9, 0.9 and 0.2 all switched on.
  Assignment three = zeros;
  for (std::size_t i = 0; i < p.num_variables(); ++i) {
    const auto &v = p.variables()[i];
    if (v.key.kind == VarKind::kOutcome &&
        (v.key.label == 0 || (v.key.label == 1 && v.key.strategy == "s2"))) {
      three.Set(i, true);
    }
  }
  CHECK(ObjectiveValue(p, three) == doctest::Approx(2.0));

  CHECK(CodeOf([&] { ObjectiveValue(p, Assignment(p.num_variables())); }) ==
        ErrorCode::kPartialAssignment);
}

TEST_CASE("objective value is additive over disjoint variable sets") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    auto p = testing::RandomProblem(rng);
    std::bernoulli_distribution coin(0.5);
    Assignment full(p.num_variables()), left(p.num_variables()),
        right(p.num_variables());
    for (std::size_t i = 0; i < p.num_variables(); ++i) {
      const bool v = coin(rng);
      const bool side = coin(rng);
      full.Set(i, v);
      left.Set(i, side && v);
      right.Set(i, !side && v);
    }
    CHECK(ObjectiveValue(p, full) ==
          doctest::Approx(ObjectiveValue(p, left) + ObjectiveValue(p, right))
              .epsilon(1e-12));
  }
}

TEST_CASE("count violations") {
  auto p = BuildProblem({{Dec("a"), 2}}, {Table(Dec("a"), "tf", {0.7, 0.3})},
                        {});
  Assignment a = p.AssignmentFromLabels(std::vector<int>{0});
  CHECK(CountViolations(p, a, "C1") == 0);
  CHECK(CountViolations(p, a, "transitivity") == 0);
  CHECK(CountViolations(p, a, "multiclass") == 0);
  CHECK(CodeOf([&] { CountViolations(p, a, "nope"); }) ==
        ErrorCode::kUnknownTag);

  Assignment both = a;
  both.Set(p.decisions()[0].decision_vars[1], true);
  CHECK(CountViolations(p, both, "multiclass") == 1);
  CHECK(CountViolations(p, both, "link_ub") == 1);
  CHECK_FALSE(IsFeasible(p, both));
}

TEST_CASE("build is deterministic") {
  std::mt19937_64 a(99), b(99);
  for (int i = 0; i < 20; ++i) {
    auto pa = testing::RandomProblem(a);
    auto pb = testing::RandomProblem(b);
    CHECK(ProblemToJson(pa) == ProblemToJson(pb));
  }
}

TEST_CASE("problem JSON round trip") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    auto p = testing::RandomProblem(rng);
    std::vector<int> labels(p.decisions().size(), 0);
    p = p.WithGold(p.AssignmentFromLabels(labels));
    json j = ProblemToJson(p);
    CHECK(j["schema"] == 1);
    auto back = ProblemFromJson(j);
    CHECK(ProblemToJson(back) == j);
    CHECK(back.gold() == p.gold());
  }
}

TEST_CASE("gold labels become a total assignment") {
  auto p = BuildProblem({{Dec("a"), 2}, {Dec("b"), 3}},
                        {Table(Dec("a"), "tf", {0.7, 0.3}),
                         Table(Dec("b"), "tf", {0.2, 0.3, 0.5})},
                        {}, std::map<DecisionId, int>{{Dec("a"), 1}, {Dec("b"), 2}});
  REQUIRE(p.gold());
  CHECK(p.gold()->IsTotal());
  CHECK(p.LabelsFromAssignment(*p.gold()) == std::vector<int>{1, 2});
  CHECK(IsFeasible(p, *p.gold()));
  CHECK(CodeOf([] {
          BuildProblem({{Dec("a"), 2}}, {Table(Dec("a"), "tf", {0.7, 0.3})},
                       {}, std::map<DecisionId, int>{});
        }) == ErrorCode::kNoGold);
}

}  // namespace
}  // namespace structprompt
