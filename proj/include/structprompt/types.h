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

// Value types shared by every layer: decision identities, variable keys,
// linear constraints and score tables.

#ifndef STRUCTPROMPT_TYPES_H_
#define STRUCTPROMPT_TYPES_H_

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace structprompt {

using json = nlohmann::json;

// Well-known subproblem labels. Any other string is accepted as a custom
// subproblem.
inline constexpr const char *kMoralFoundation = "moral_foundation";
inline constexpr const char *kMoralRole = "moral_role";
inline constexpr const char *kCorefPair = "coref_pair";

// Identifies one multi-class decision (index j). Ordered lexicographically on
// (task_instance, subproblem, locus); that order is the canonical decision
// order used for solving and tie-breaking.
struct DecisionId {
  std::string task_instance;
  std::string subproblem;
  std::string locus;

  auto operator<=>(const DecisionId &) const = default;
  bool operator==(const DecisionId &) const = default;

  std::string ToString() const;
};

enum class VarKind : std::uint8_t { kDecision, kOutcome };

// Identity of one binary variable: d_jk when kind == kDecision (strategy is
// empty), p_jk for strategy p when kind == kOutcome. The defaulted ordering
// is (decision, label, strategy), so a decision variable sorts directly
// before the outcomes of the same label.
struct VarKey {
  DecisionId decision;
  int label = 0;
  std::string strategy;
  VarKind kind = VarKind::kDecision;

  static VarKey Decision(DecisionId id, int label) {
    return VarKey{std::move(id), label, std::string(), VarKind::kDecision};
  }
  static VarKey Outcome(DecisionId id, int label, std::string strategy) {
    return VarKey{std::move(id), label, std::move(strategy), VarKind::kOutcome};
  }

  auto operator<=>(const VarKey &) const = default;
  bool operator==(const VarKey &) const = default;

  std::string ToString() const;
};

enum class Relation : std::uint8_t { kLessEqual, kEqual, kGreaterEqual };

std::string_view RelationSymbol(Relation rel);

struct Term {
  VarKey var;
  std::int64_t coef = 0;

  bool operator==(const Term &) const = default;
};

// sum(coef * var) <rel> bound. Every constraint family used here has
// integer coefficients, so evaluation at 0/1 points is exact.
struct LinearConstraint {
  std::vector<Term> terms;
  Relation relation = Relation::kLessEqual;
  std::int64_t bound = 0;
  std::string tag;

  bool operator==(const LinearConstraint &) const = default;

  std::string ToString() const;
};

// Per-label record of how a ScoreTable was produced.
struct ScoreProvenance {
  std::vector<double> unnormalized;
  std::vector<int> sample_counts;
  int failed_parses = 0;
  // Uniform fallback was used because every label scored zero.
  bool degenerate = false;
  std::string note;

  bool operator==(const ScoreProvenance &) const = default;
};

// Confidence values w_jk of one strategy for one decision.
struct ScoreTable {
  DecisionId decision;
  std::string strategy;
  std::vector<double> scores;
  ScoreProvenance raw;

  bool operator==(const ScoreTable &) const = default;
};

void to_json(json &j, const DecisionId &id);
void from_json(const json &j, DecisionId &id);
void to_json(json &j, const VarKey &key);
void from_json(const json &j, VarKey &key);
void to_json(json &j, const LinearConstraint &c);
void from_json(const json &j, LinearConstraint &c);
void to_json(json &j, const ScoreTable &t);
void from_json(const json &j, ScoreTable &t);

// Throws kInvalidProblem when the constraint repeats a variable.
void ValidateConstraint(const LinearConstraint &c);

}  // namespace structprompt

#endif  // STRUCTPROMPT_TYPES_H_
