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

// Helpers shared by the unit and acceptance tests.

#ifndef STRUCTPROMPT_TESTS_TEST_UTIL_H_
#define STRUCTPROMPT_TESTS_TEST_UTIL_H_

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "structprompt/core_model.h"
#include "structprompt/error.h"

namespace structprompt::testing {

inline DecisionId Dec(const std::string &locus,
                      const std::string &instance = "t0",
                      const std::string &subproblem = "custom") {
  return DecisionId{instance, subproblem, locus};
}

inline ScoreTable Table(const DecisionId &id, const std::string &strategy,
                        std::vector<double> scores) {
  ScoreTable t;
  t.decision = id;
  t.strategy = strategy;
  t.scores = std::move(scores);
  return t;
}

// Direct evaluation of a constraint at a boolean point, independent of the
// indexed rows used by the library.
inline bool Holds(const LinearConstraint &c,
                  const std::map<VarKey, int> &point) {
  std::int64_t lhs = 0;
  for (const Term &t : c.terms) lhs += t.coef * point.at(t.var);
  switch (c.relation) {
    case Relation::kLessEqual: return lhs <= c.bound;
    case Relation::kEqual: return lhs == c.bound;
    case Relation::kGreaterEqual: return lhs >= c.bound;
  }
  return false;
}

inline bool HoldsAll(const std::vector<LinearConstraint> &cs,
                     const std::map<VarKey, int> &point) {
  for (const auto &c : cs) {
    if (!Holds(c, point)) return false;
  }
  return true;
}

template <class F>
ErrorCode CodeOf(F &&f) {
  try {
    f();
  } catch (const Error &e) {
    return e.code();
  }
  throw std::logic_error("expected an Error");
}

// The three-pair coreference instance: pairs (1,2), (2,3), (1,3) with
// coreferent weights 0.9, 0.9, 0.2 and distinct weights 0.1, 0.1, 0.8.
StructuredProblem TransitivityRescueProblem();

struct RandomProblemOptions {
  int max_decisions = 6;
  int max_labels = 4;
  int max_strategies = 2;
  int max_constraints = 6;
  // Weights drawn from a 0.05 grid to produce exact ties.
  bool grid_weights = false;
};

// Random instance with horn, mutex, transitivity and raw linear constraints.
StructuredProblem RandomProblem(std::mt19937_64 &rng,
                                const RandomProblemOptions &options = {});

}  // namespace structprompt::testing

#endif  // STRUCTPROMPT_TESTS_TEST_UTIL_H_
