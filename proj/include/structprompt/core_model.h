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

#ifndef STRUCTPROMPT_CORE_MODEL_H_
#define STRUCTPROMPT_CORE_MODEL_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "structprompt/constraints.h"
#include "structprompt/types.h"

namespace structprompt {

struct DecisionSpec {
  DecisionId id;
  int num_labels = 0;
};

// Dense 0/1 values in the canonical variable order of one problem. -1 marks
// an unassigned variable.
class Assignment {
 public:
  Assignment() = default;
  explicit Assignment(std::size_t num_vars) : values_(num_vars, -1) {}
  explicit Assignment(std::vector<std::int8_t> values)
      : values_(std::move(values)) {}

  std::size_t size() const { return values_.size(); }
  std::int8_t operator[](std::size_t i) const { return values_[i]; }
  void Set(std::size_t i, bool value) { values_[i] = value ? 1 : 0; }
  bool IsTotal() const;
  const std::vector<std::int8_t> &values() const { return values_; }

  bool operator==(const Assignment &) const = default;

 private:
  std::vector<std::int8_t> values_;
};

struct Variable {
  VarKey key;
  // Objective weight; zero for decision variables.
  double weight = 0.0;
};

// A constraint row over variable indices, used by evaluators and solvers.
struct IndexedConstraint {
  std::vector<std::pair<int, std::int64_t>> terms;
  Relation relation = Relation::kLessEqual;
  std::int64_t bound = 0;
  int tag = 0;  // index into StructuredProblem::tags()
};

struct DecisionInfo {
  DecisionId id;
  int num_labels = 0;
  // Variable index of d_jk, per label.
  std::vector<int> decision_vars;
  // Variable index of p_jk per [label][strategy]; -1 when the strategy did
  // not score the decision.
  std::vector<std::vector<int>> outcome_vars;
};

struct BuildOptions {
  // When false every decision must be scored by every strategy that appears
  // in the score tables. When true a decision needs at least one.
  bool allow_partial_coverage = false;
};

// An immutable factor-graph instance: decisions, outcomes with weights, and
// compiled linear constraints. Safe to share between threads.
class StructuredProblem {
 public:
  const std::vector<DecisionInfo> &decisions() const { return decisions_; }
  const std::vector<std::string> &strategies() const { return strategies_; }
  const std::vector<Variable> &variables() const { return variables_; }
  const std::vector<LinearConstraint> &constraints() const {
    return constraints_;
  }
  const std::vector<IndexedConstraint> &rows() const { return rows_; }
  const std::vector<std::string> &tags() const { return tags_; }
  // Score tables in (decision, strategy) order.
  const std::vector<ScoreTable> &tables() const { return tables_; }
  const std::optional<Assignment> &gold() const { return gold_; }
  const std::vector<ConstraintSpec> &specs() const { return specs_; }

  std::size_t num_variables() const { return variables_.size(); }
  std::optional<int> VariableIndex(const VarKey &key) const;
  std::optional<int> DecisionIndex(const DecisionId &id) const;
  std::optional<int> StrategyIndex(const std::string &strategy) const;

  // Same structure, new objective weights (one per variable; decision
  // variables must stay 0).
  StructuredProblem WithWeights(std::vector<double> weights) const;
  // Same structure with every weight taken from `tables`, which must cover
  // the same (decision, strategy) pairs.
  StructuredProblem WithTables(std::vector<ScoreTable> tables) const;
  // Drops every constraint that is not multiclass or linking.
  StructuredProblem WithoutHardConstraints() const;
  StructuredProblem WithGold(std::optional<Assignment> gold) const;

  // Assignment that selects `labels[j]` for decision j and activates every
  // outcome of the selected labels.
  Assignment AssignmentFromLabels(std::span<const int> labels) const;
  // The label selected for each decision; -1 when none or several are set.
  std::vector<int> LabelsFromAssignment(const Assignment &a) const;

 private:
  friend StructuredProblem BuildProblem(
      const std::vector<DecisionSpec> &, const std::vector<ScoreTable> &,
      const std::vector<ConstraintSpec> &,
      const std::optional<std::map<DecisionId, int>> &, const BuildOptions &);
  friend StructuredProblem ProblemFromJson(const json &);

  void Index();

  std::vector<DecisionInfo> decisions_;
  std::vector<std::string> strategies_;
  std::vector<Variable> variables_;
  std::vector<LinearConstraint> constraints_;
  std::vector<IndexedConstraint> rows_;
  std::vector<std::string> tags_;
  std::vector<ScoreTable> tables_;
  std::vector<ConstraintSpec> specs_;
  std::optional<Assignment> gold_;
  std::map<VarKey, int> var_index_;
};

// Builds a problem with one outcome variable per (decision, label, strategy)
// and one decision variable per (decision, label), plus the multiclass and
// linking constraints and the compiled hard constraints from `specs`.
// `gold_labels`, when given, must name a label for every decision.
StructuredProblem BuildProblem(
    const std::vector<DecisionSpec> &decisions,
    const std::vector<ScoreTable> &scores,
    const std::vector<ConstraintSpec> &specs,
    const std::optional<std::map<DecisionId, int>> &gold_labels = std::nullopt,
    const BuildOptions &options = {});

// Sum of weight * value over outcome variables.
double ObjectiveValue(const StructuredProblem &problem, const Assignment &a);

bool IsSatisfied(const IndexedConstraint &row, const Assignment &a);

// Violated constraints carrying `tag`. Known tags are the standard family
// tags plus every tag present in the problem; anything else throws
// kUnknownTag.
int CountViolations(const StructuredProblem &problem, const Assignment &a,
                    const std::string &tag);

// Violations per tag for every tag in the problem.
std::map<std::string, int> CountAllViolations(const StructuredProblem &problem,
                                              const Assignment &a);

bool IsFeasible(const StructuredProblem &problem, const Assignment &a);

json ProblemToJson(const StructuredProblem &problem);
StructuredProblem ProblemFromJson(const json &j);

}  // namespace structprompt

#endif  // STRUCTPROMPT_CORE_MODEL_H_
