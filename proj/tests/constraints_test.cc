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

#include "structprompt/constraints.h"

#include "doctest.h"
#include "structprompt/error.h"
#include "test_util.h"

namespace structprompt {
namespace {

using testing::CodeOf;
using testing::Dec;
using testing::Holds;
using testing::HoldsAll;

TEST_CASE("multiclass instantiates sum_k d_jk = 1") {
  LinearConstraint c = CompileMulticlass(Dec("a"), 2);
  CHECK(c.relation == Relation::kEqual);
  CHECK(c.bound == 1);
  CHECK(c.tag == "multiclass");
  REQUIRE(c.terms.size() == 2);
  CHECK(c.terms[0] == Term{VarKey::Decision(Dec("a"), 0), 1});
  CHECK(c.terms[1] == Term{VarKey::Decision(Dec("a"), 1), 1});

  LinearConstraint single = CompileMulticlass(Dec("a"), 1);
  CHECK(single.terms.size() == 1);
  CHECK(Holds(single, {{VarKey::Decision(Dec("a"), 0), 1}}));
  CHECK_FALSE(Holds(single, {{VarKey::Decision(Dec("a"), 0), 0}}));

  CHECK(CompileMulticlass(Dec("f"), 5).terms.size() == 5);
  CHECK(CodeOf([] { CompileMulticlass(Dec("a"), 0); }) ==
        ErrorCode::kZeroLabels);
}

TEST_CASE("decision link counts") {
  const VarKey d = VarKey::Decision(Dec("a"), 0);
  std::vector<VarKey> p = {VarKey::Outcome(Dec("a"), 0, "s1"),
                           VarKey::Outcome(Dec("a"), 0, "s2"),
                           VarKey::Outcome(Dec("a"), 0, "s3")};
  CHECK(CompileDecisionLink(d, std::span(p).first(1)).size() == 2);
  CHECK(CompileDecisionLink(d, std::span(p).first(2)).size() == 3);
  CHECK(CompileDecisionLink(d, p).size() == 4);
  CHECK(CodeOf([&] { CompileDecisionLink(d, {}); }) ==
        ErrorCode::kEmptyOutcomeSet);
}

TEST_CASE("single strategy link collapses to equality") {
  const VarKey d = VarKey::Decision(Dec("a"), 0);
  const VarKey p = VarKey::Outcome(Dec("a"), 0, "s");
  auto cs = CompileDecisionLink(d, std::span(&p, 1));
  for (int dv = 0; dv < 2; ++dv) {
    for (int pv = 0; pv < 2; ++pv) {
      CHECK(HoldsAll(cs, {{d, dv}, {p, pv}}) == (dv == pv));
    }
  }
}

TEST_CASE("two strategy link keeps exactly the OR-consistent points") {
  const VarKey d = VarKey::Decision(Dec("a"), 0);
  std::vector<VarKey> p = {VarKey::Outcome(Dec("a"), 0, "s1"),
                           VarKey::Outcome(Dec("a"), 0, "s2")};
  auto cs = CompileDecisionLink(d, p);
  int feasible = 0;
  for (int bits = 0; bits < 8; ++bits) {
    const int dv = bits & 1, p1 = (bits >> 1) & 1, p2 = (bits >> 2) & 1;
    const bool ok = HoldsAll(cs, {{d, dv}, {p[0], p1}, {p[1], p2}});
    CHECK(ok == (dv == (p1 | p2)));
    feasible += ok;
  }
  CHECK(feasible == 4);
}

TEST_CASE("horn clause instantiation") {
  const VarKey d12 = VarKey::Decision(Dec("12"), 0);
  const VarKey d23 = VarKey::Decision(Dec("23"), 0);
  const VarKey d13 = VarKey::Decision(Dec("13"), 0);
  LinearConstraint c = CompileHorn({{d12, d23}, d13}, kTagTransitivity);
  CHECK(c.bound == 1);
  CHECK(c.tag == "transitivity");
  CHECK(c.terms == std::vector<Term>{{d12, 1}, {d23, 1}, {d13, -1}});

  LinearConstraint implication = CompileHorn({{d12}, d13});
  CHECK(implication.bound == 0);
  CHECK(implication.terms.size() == 2);

  const VarKey d4 = VarKey::Decision(Dec("4"), 0);
  LinearConstraint three = CompileHorn({{d12, d23, d13}, d4});
  CHECK(three.bound == 2);
}

TEST_CASE("horn clause is tight at boolean points") {
  for (int n = 1; n <= 3; ++n) {
    HornClause clause;
    for (int i = 0; i < n; ++i) {
      clause.body.push_back(VarKey::Decision(Dec("b" + std::to_string(i)), 0));
    }
    clause.head = VarKey::Decision(Dec("h"), 0);
    LinearConstraint c = CompileHorn(clause);
    for (int bits = 0; bits < (1 << (n + 1)); ++bits) {
      std::map<VarKey, int> point;
      bool body = true;
      for (int i = 0; i < n; ++i) {
        point[clause.body[i]] = (bits >> i) & 1;
        body = body && point[clause.body[i]];
      }
      point[clause.head] = (bits >> n) & 1;
      const bool violated = body && !point[clause.head];
      CHECK(Holds(c, point) == !violated);
    }
  }
}

TEST_CASE("invalid horn clauses") {
  const VarKey a = VarKey::Decision(Dec("a"), 0);
  CHECK(CodeOf([&] { CompileHorn({{}, a}); }) == ErrorCode::kInvalidClause);
  CHECK(CodeOf([&] { CompileHorn({{a}, a}); }) == ErrorCode::kInvalidClause);
}

TEST_CASE("mutual exclusion counts") {
  std::vector<DecisionId> two = {Dec("e0"), Dec("e1")};
  std::vector<DecisionId> three = {Dec("e0"), Dec("e1"), Dec("e2")};
  std::vector<DecisionId> one = {Dec("e0")};
  CHECK(CompilePairwiseExclusion(two, 16).size() == 16);
  CHECK(CompilePairwiseExclusion(three, 16).size() == 48);
  CHECK(CompilePairwiseExclusion(one, 16).empty());

  LinearConstraint c = CompileMutualExclusion(Dec("e0"), 16, Dec("e1"), 16, 3);
  CHECK(c.tag == "C2");
  CHECK(c.bound == 1);
  CHECK(CodeOf([] {
          CompileMutualExclusion(Dec("e0"), 16, Dec("e1"), 5, 0);
        }) == ErrorCode::kLabelSpaceMismatch);
}

TEST_CASE("alignment ties each role to its foundation") {
  // Two foundations; roles 0,1 belong to foundation 0 and role 2 to 1.
  AlignmentTable table = {{0, 1}, {2}};
  const DecisionId f = Dec("foundation");
  std::vector<DecisionId> roles = {Dec("e0")};
  auto cs = CompileAlignment(f, 2, roles, 3, table);
  REQUIRE(cs.size() == 3);
  for (const auto &c : cs) CHECK(c.tag == "C1");

  auto point = [&](int foundation, int role) {
    std::map<VarKey, int> p;
    for (int k = 0; k < 2; ++k) p[VarKey::Decision(f, k)] = (k == foundation);
    for (int r = 0; r < 3; ++r) p[VarKey::Decision(roles[0], r)] = (r == role);
    return p;
  };
  CHECK(HoldsAll(cs, point(0, 1)));
  CHECK(HoldsAll(cs, point(1, 2)));
  CHECK_FALSE(HoldsAll(cs, point(1, 0)));
  CHECK_FALSE(HoldsAll(cs, point(0, 2)));

  CHECK(CodeOf([&] { CompileAlignment(f, 2, roles, 4, table); }) ==
        ErrorCode::kOrphanRole);
  CHECK(CodeOf([&] { CompileAlignment(f, 3, roles, 3, table); }) ==
        ErrorCode::kLabelSpaceMismatch);
}

TEST_CASE("transitivity emits three rotations per triple") {
  auto pairs_for = [](int mentions) {
    std::vector<PairDecision> pairs;
    for (int a = 0; a < mentions; ++a) {
      for (int b = a + 1; b < mentions; ++b) {
        pairs.push_back({a, b, Dec(std::to_string(a) + "-" + std::to_string(b))});
      }
    }
    return pairs;
  };
  CHECK(CompileTransitivity(pairs_for(3)).size() == 3);
  CHECK(CompileTransitivity(pairs_for(4)).size() == 12);
  CHECK(CompileTransitivity(pairs_for(2)).empty());

  // A triple with a missing pair produces nothing.
  auto partial = pairs_for(3);
  partial.pop_back();
  CHECK(CompileTransitivity(partial).empty());

  std::vector<PairDecision> dup = {{0, 1, Dec("x")}, {1, 0, Dec("y")}};
  CHECK(CodeOf([&] { CompileTransitivity(dup); }) == ErrorCode::kPairIndexError);
}

TEST_CASE("transitivity feasible set is the set of equivalence relations") {
  std::vector<PairDecision> pairs = {
      {0, 1, Dec("01")}, {1, 2, Dec("12")}, {0, 2, Dec("02")}};
  auto cs = CompileTransitivity(pairs);
  int feasible = 0;
  for (int bits = 0; bits < 8; ++bits) {
    std::map<VarKey, int> point;
    for (int i = 0; i < 3; ++i) {
      point[VarKey::Decision(pairs[i].decision, 0)] = (bits >> i) & 1;
    }
    const int on = __builtin_popcount(bits);
    // Exactly two positive edges out of three is the only non-transitive
    // pattern.
    CHECK(HoldsAll(cs, point) == (on != 2));
    feasible += HoldsAll(cs, point);
  }
  CHECK(feasible == 5);
}

TEST_CASE("compilation is pure") {
  std::vector<DecisionId> ds = {Dec("a"), Dec("b"), Dec("c")};
  CHECK(CompilePairwiseExclusion(ds, 4) == CompilePairwiseExclusion(ds, 4));
  std::vector<PairDecision> pairs = {
      {0, 1, Dec("01")}, {1, 2, Dec("12")}, {0, 2, Dec("02")}};
  CHECK(CompileTransitivity(pairs) == CompileTransitivity(pairs));
}

TEST_CASE("constraint specs compile and round-trip through JSON") {
  std::map<DecisionId, int> labels = {
      {Dec("a"), 2}, {Dec("b"), 2}, {Dec("c"), 2}};
  LabelCountLookup lookup = [&](const DecisionId &id) -> std::optional<int> {
    auto it = labels.find(id);
    if (it == labels.end()) return std::nullopt;
    return it->second;
  };
  std::vector<ConstraintSpec> specs = {
      HornSpec{{{Dec("a"), 0}}, {Dec("b"), 1}, "horn"},
      MutexSpec{{Dec("a"), Dec("b"), Dec("c")}, {}, "C2"},
      TransitivitySpec{{{0, 1, Dec("a")}, {1, 2, Dec("b")}, {0, 2, Dec("c")}},
                       0,
                       "transitivity"},
      LinearSpec{{{{Dec("a"), 1}, 2}, {{Dec("c"), 0}, -1}},
                 Relation::kGreaterEqual,
                 0,
                 "linear"},
  };
  for (const ConstraintSpec &spec : specs) {
    json j = spec;
    ConstraintSpec back = j.get<ConstraintSpec>();
    CHECK(back == spec);
    CHECK_FALSE(CompileSpec(spec, lookup).empty());
  }
  CHECK(CompileSpec(specs[1], lookup).size() == 6);

  ConstraintSpec dangling = HornSpec{{{Dec("zz"), 0}}, {Dec("a"), 0}, "horn"};
  CHECK(CodeOf([&] { CompileSpec(dangling, lookup); }) ==
        ErrorCode::kDanglingReference);
  json bad = {{"type", "xor"}};
  CHECK(CodeOf([&] { bad.get<ConstraintSpec>(); }) == ErrorCode::kSchemaError);
}

}  // namespace
}  // namespace structprompt
