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

// Compilation of logical constraint families into linear inequalities over
// binary decision and outcome variables.
//
// Families:
//   multiclass    sum_k d_jk = 1
//   link_ub       d_jk - sum_p p_jk <= 0          (decision needs an outcome)
//   link_lb       p_jk - d_jk <= 0, one per p     (any outcome fires decision)
//   horn          sum_i d_i - d_h <= n - 1        (d_1 & ... & d_n => d_h)
//   mutex (C2)    d_ak + d_bk <= 1
//   alignment (C1) d_role=r - d_found=f(r) <= 0
//   transitivity  horn clauses over coreference pair decisions
//
// All functions are pure.

#ifndef STRUCTPROMPT_CONSTRAINTS_H_
#define STRUCTPROMPT_CONSTRAINTS_H_

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "structprompt/types.h"

namespace structprompt {

inline constexpr const char *kTagMulticlass = "multiclass";
inline constexpr const char *kTagLinkUpper = "link_ub";
inline constexpr const char *kTagLinkLower = "link_lb";
inline constexpr const char *kTagAlignment = "C1";
inline constexpr const char *kTagMutex = "C2";
inline constexpr const char *kTagTransitivity = "transitivity";
inline constexpr const char *kTagHorn = "horn";

// d_1 & ... & d_n => d_h over decision variables.
struct HornClause {
  std::vector<VarKey> body;
  VarKey head;
};

// Roles (by label index) owned by each foundation (by label index).
using AlignmentTable = std::vector<std::vector<int>>;

LinearConstraint CompileMulticlass(const DecisionId &decision, int num_labels);

std::vector<LinearConstraint> CompileDecisionLink(
    const VarKey &decision_var, std::span<const VarKey> linked_outcomes);

LinearConstraint CompileHorn(const HornClause &clause,
                             std::string tag = kTagHorn);

LinearConstraint CompileMutualExclusion(const DecisionId &a, int labels_a,
                                        const DecisionId &b, int labels_b,
                                        int label);

// Mutex over every unordered pair of `decisions` and every label in `labels`
// (all labels when empty). All decisions must share `num_labels`.
std::vector<LinearConstraint> CompilePairwiseExclusion(
    std::span<const DecisionId> decisions, int num_labels,
    std::span<const int> labels = {});

// One C1 inequality per (role decision, role label).
std::vector<LinearConstraint> CompileAlignment(
    const DecisionId &foundation, int foundation_labels,
    std::span<const DecisionId> roles, int role_labels,
    const AlignmentTable &table);

// A candidate coreference pair (mention a < mention b) and its decision.
struct PairDecision {
  int a = 0;
  int b = 0;
  DecisionId decision;
  bool operator==(const PairDecision &) const = default;
};

// Transitivity over every mention triple whose three pairs are all present,
// emitted in all three rotations. `positive_label` is the coreferent label.
std::vector<LinearConstraint> CompileTransitivity(
    std::span<const PairDecision> pairs, int positive_label = 0);

// ---------------------------------------------------------------------------
// Declarative constraint specs, as found in problem files and configs.
// JSON: {"type": "horn" | "mutex" | "alignment" | "transitivity" | "linear",
// ...}; see to_json below for the exact fields.

struct DecisionLabel {
  DecisionId decision;
  int label = 0;
  bool operator==(const DecisionLabel &) const = default;
};

struct HornSpec {
  std::vector<DecisionLabel> body;
  DecisionLabel head;
  std::string tag = kTagHorn;
  bool operator==(const HornSpec &) const = default;
};

struct MutexSpec {
  std::vector<DecisionId> decisions;
  std::vector<int> labels;  // empty: every label
  std::string tag = kTagMutex;
  bool operator==(const MutexSpec &) const = default;
};

struct AlignmentSpec {
  DecisionId foundation;
  std::vector<DecisionId> roles;
  AlignmentTable table;
  std::string tag = kTagAlignment;
  bool operator==(const AlignmentSpec &) const = default;
};

struct TransitivitySpec {
  std::vector<PairDecision> pairs;
  int positive_label = 0;
  std::string tag = kTagTransitivity;
  bool operator==(const TransitivitySpec &) const = default;
};

// Raw linear inequality over decision variables.
struct LinearSpec {
  std::vector<std::pair<DecisionLabel, std::int64_t>> terms;
  Relation relation = Relation::kLessEqual;
  std::int64_t bound = 0;
  std::string tag = "linear";
  bool operator==(const LinearSpec &) const = default;
};

using ConstraintSpec =
    std::variant<HornSpec, MutexSpec, AlignmentSpec, TransitivitySpec,
                 LinearSpec>;

// Returns the label count of a decision, or nullopt when it is unknown.
using LabelCountLookup =
    std::function<std::optional<int>(const DecisionId &)>;

// Every decision the spec mentions.
std::vector<DecisionId> ReferencedDecisions(const ConstraintSpec &spec);

// Throws kDanglingReference for unknown decisions and kInvalidProblem for
// out-of-range labels.
std::vector<LinearConstraint> CompileSpec(const ConstraintSpec &spec,
                                          const LabelCountLookup &labels);

void to_json(json &j, const ConstraintSpec &spec);
void from_json(const json &j, ConstraintSpec &spec);

}  // namespace structprompt

#endif  // STRUCTPROMPT_CONSTRAINTS_H_
