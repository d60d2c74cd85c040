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

// Exact MAP inference over StructuredProblem.
//
// The solver branches on decisions (one label per decision) rather than on
// raw binary variables, so multiclass constraints hold by construction. Once
// every label is fixed the outcome variables follow from the linking
// constraints: outcomes of unselected labels are 0, and among the outcomes of
// a selected label every positively weighted one is 1 (if none is positive,
// the single best one is). Hard constraints may only mention decision
// variables; they are propagated over label domains with bounds reasoning.
//
// Ties are broken towards the lexicographically smallest label vector in the
// canonical decision order, i.e. lower label indices win for earlier
// decisions.

#ifndef STRUCTPROMPT_ILP_H_
#define STRUCTPROMPT_ILP_H_

#include <chrono>
#include <cstdint>
#include <string>

#include "structprompt/core_model.h"

namespace structprompt {

struct SolveLimits {
  std::int64_t max_nodes = 1'000'000;
  std::chrono::milliseconds time_limit{30'000};
  // Solve connected components of the constraint graph independently.
  bool decompose = true;
};

struct SolveResult {
  Assignment assignment;
  double objective = 0.0;
  std::int64_t nodes_explored = 0;
  bool proven_optimal = false;
  std::chrono::nanoseconds wall_time{0};
};

// Throws kInfeasible when no assignment satisfies the constraints, and
// kBudgetExceeded when the budget ran out before any feasible assignment was
// found. A budget hit after an incumbent exists returns it with
// proven_optimal == false.
SolveResult SolveMap(const StructuredProblem &problem,
                     const SolveLimits &limits = {});

// Enumerates every per-decision label combination. Throws kTooLarge beyond
// 2^24 combinations and kInfeasible when nothing satisfies the constraints.
SolveResult BruteForceMap(const StructuredProblem &problem);

// Independent per-decision argmax of the strategy-summed weights, ignoring
// hard constraints. Ties go to the lowest label.
Assignment LocalArgmax(const StructuredProblem &problem);

// CPLEX LP-format text of the problem, for cross-checking with external
// solvers.
std::string ExportLp(const StructuredProblem &problem);

}  // namespace structprompt

#endif  // STRUCTPROMPT_ILP_H_
