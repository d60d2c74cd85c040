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
#include <cmath>
#include <set>

#include "structprompt/error.h"

namespace structprompt {

namespace {

constexpr int kSchemaVersion = 1;

const std::vector<std::string> &StandardTags() {
  static const std::vector<std::string> tags = {
      kTagMulticlass, kTagLinkUpper, kTagLinkLower, kTagAlignment,
      kTagMutex,      kTagTransitivity, kTagHorn};
  return tags;
}

bool IsStructuralTag(const std::string &tag) {
  return tag == kTagMulticlass || tag == kTagLinkUpper || tag == kTagLinkLower;
}

}  // namespace

bool Assignment::IsTotal() const {
  return std::none_of(values_.begin(), values_.end(),
                      [](std::int8_t v) { return v < 0; });
}

std::optional<int> StructuredProblem::VariableIndex(const VarKey &key) const {
  auto it = var_index_.find(key);
  if (it == var_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> StructuredProblem::DecisionIndex(const DecisionId &id) const {
  auto it = std::lower_bound(
      decisions_.begin(), decisions_.end(), id,
      [](const DecisionInfo &d, const DecisionId &x) { return d.id < x; });
  if (it == decisions_.end() || it->id != id) return std::nullopt;
  return static_cast<int>(it - decisions_.begin());
}

std::optional<int> StructuredProblem::StrategyIndex(
    const std::string &strategy) const {
  auto it = std::lower_bound(strategies_.begin(), strategies_.end(), strategy);
  if (it == strategies_.end() || *it != strategy) return std::nullopt;
  return static_cast<int>(it - strategies_.begin());
}

void StructuredProblem::Index() {
  var_index_.clear();
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    var_index_.emplace(variables_[i].key, static_cast<int>(i));
  }
  tags_.clear();
  rows_.clear();
  rows_.reserve(constraints_.size());
  for (const LinearConstraint &c : constraints_) {
    IndexedConstraint row;
    row.relation = c.relation;
    row.bound = c.bound;
    auto t = std::find(tags_.begin(), tags_.end(), c.tag);
    if (t == tags_.end()) {
      tags_.push_back(c.tag);
      row.tag = static_cast<int>(tags_.size()) - 1;
    } else {
      row.tag = static_cast<int>(t - tags_.begin());
    }
    for (const Term &term : c.terms) {
      auto it = var_index_.find(term.var);
      if (it == var_index_.end()) {
        throw Error(ErrorCode::kDanglingReference,
                    "constraint references unknown variable " +
                        term.var.ToString());
      }
      row.terms.emplace_back(it->second, term.coef);
    }
    rows_.push_back(std::move(row));
  }
}

StructuredProblem StructuredProblem::WithWeights(
    std::vector<double> weights) const {
  if (weights.size() != variables_.size()) {
    throw Error(ErrorCode::kDimMismatch, "weight vector size mismatch");
  }
  StructuredProblem out = *this;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!std::isfinite(weights[i])) {
      throw Error(ErrorCode::kInvalidProblem, "non-finite weight");
    }
    if (variables_[i].key.kind == VarKind::kDecision && weights[i] != 0.0) {
      throw Error(ErrorCode::kInvalidProblem,
                  "decision variables carry no weight");
    }
    out.variables_[i].weight = weights[i];
  }
  return out;
}

StructuredProblem StructuredProblem::WithTables(
    std::vector<ScoreTable> tables) const {
  std::vector<double> weights(variables_.size(), 0.0);
  std::set<std::pair<int, int>> seen;
  for (const ScoreTable &t : tables) {
    auto d = DecisionIndex(t.decision);
    auto s = StrategyIndex(t.strategy);
    if (!d || !s) {
      throw Error(ErrorCode::kDanglingReference,
                  "table for unknown decision/strategy " +
                      t.decision.ToString() + "@" + t.strategy);
    }
    const DecisionInfo &info = decisions_[*d];
    if (static_cast<int>(t.scores.size()) != info.num_labels) {
      throw Error(ErrorCode::kDimMismatch,
                  "table size mismatch for " + t.decision.ToString());
    }
    for (int k = 0; k < info.num_labels; ++k) {
      int v = info.outcome_vars[k][*s];
      if (v < 0) {
        throw Error(ErrorCode::kDanglingReference,
                    "strategy " + t.strategy + " did not score " +
                        t.decision.ToString());
      }
      weights[v] = t.scores[k];
    }
    seen.emplace(*d, *s);
  }
  if (seen.size() != tables_.size()) {
    throw Error(ErrorCode::kMissingScore, "replacement tables do not cover "
                                          "the original (decision, strategy) "
                                          "pairs");
  }
  StructuredProblem out = WithWeights(std::move(weights));
  std::sort(tables.begin(), tables.end(),
            [](const ScoreTable &a, const ScoreTable &b) {
              return std::tie(a.decision, a.strategy) <
                     std::tie(b.decision, b.strategy);
            });
  out.tables_ = std::move(tables);
  return out;
}

StructuredProblem StructuredProblem::WithoutHardConstraints() const {
  StructuredProblem out = *this;
  out.constraints_.clear();
  for (const LinearConstraint &c : constraints_) {
    if (IsStructuralTag(c.tag)) out.constraints_.push_back(c);
  }
  out.specs_.clear();
  out.Index();
  return out;
}

StructuredProblem StructuredProblem::WithGold(
    std::optional<Assignment> gold) const {
  if (gold && gold->size() != variables_.size()) {
    throw Error(ErrorCode::kDimMismatch, "gold assignment size mismatch");
  }
  StructuredProblem out = *this;
  out.gold_ = std::move(gold);
  return out;
}

Assignment StructuredProblem::AssignmentFromLabels(
    std::span<const int> labels) const {
  if (labels.size() != decisions_.size()) {
    throw Error(ErrorCode::kPartialAssignment,
                "need one label per decision");
  }
  Assignment a(variables_.size());
  for (std::size_t j = 0; j < decisions_.size(); ++j) {
    const DecisionInfo &d = decisions_[j];
    if (labels[j] < 0 || labels[j] >= d.num_labels) {
      throw Error(ErrorCode::kInvalidProblem,
                  "label out of range for " + d.id.ToString());
    }
    for (int k = 0; k < d.num_labels; ++k) {
      const bool on = (k == labels[j]);
      a.Set(d.decision_vars[k], on);
      for (int v : d.outcome_vars[k]) {
        if (v >= 0) a.Set(v, on);
      }
    }
  }
  return a;
}

std::vector<int> StructuredProblem::LabelsFromAssignment(
    const Assignment &a) const {
  std::vector<int> out(decisions_.size(), -1);
  for (std::size_t j = 0; j < decisions_.size(); ++j) {
    const DecisionInfo &d = decisions_[j];
    int found = -1;
    for (int k = 0; k < d.num_labels; ++k) {
      if (a[d.decision_vars[k]] == 1) {
        if (found != -1) {
          found = -1;
          break;
        }
        found = k;
      }
    }
    out[j] = found;
  }
  return out;
}

StructuredProblem BuildProblem(
    const std::vector<DecisionSpec> &decisions,
    const std::vector<ScoreTable> &scores,
    const std::vector<ConstraintSpec> &specs,
    const std::optional<std::map<DecisionId, int>> &gold_labels,
    const BuildOptions &options) {
  StructuredProblem p;

  std::vector<DecisionSpec> sorted = decisions;
  std::sort(sorted.begin(), sorted.end(),
            [](const DecisionSpec &a, const DecisionSpec &b) {
              return a.id < b.id;
            });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i > 0 && sorted[i].id == sorted[i - 1].id) {
      throw Error(ErrorCode::kInvalidProblem,
                  "duplicate decision " + sorted[i].id.ToString());
    }
    if (sorted[i].num_labels < 1) {
      throw Error(ErrorCode::kZeroLabels,
                  "decision " + sorted[i].id.ToString() + " has no labels");
    }
  }

  std::set<std::string> strategy_set;
  for (const ScoreTable &t : scores) {
    if (t.strategy.empty()) {
      throw Error(ErrorCode::kInvalidProblem, "empty strategy id");
    }
    strategy_set.insert(t.strategy);
  }
  p.strategies_.assign(strategy_set.begin(), strategy_set.end());

  p.decisions_.resize(sorted.size());
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    p.decisions_[j].id = sorted[j].id;
    p.decisions_[j].num_labels = sorted[j].num_labels;
  }

  // (decision, strategy) -> table
  std::vector<std::vector<const ScoreTable *>> by_decision(
      sorted.size(), std::vector<const ScoreTable *>(p.strategies_.size()));
  for (const ScoreTable &t : scores) {
    auto d = p.DecisionIndex(t.decision);
    if (!d) {
      throw Error(ErrorCode::kDanglingReference,
                  "score table for unknown decision " + t.decision.ToString());
    }
    int s = *p.StrategyIndex(t.strategy);
    if (by_decision[*d][s] != nullptr) {
      throw Error(ErrorCode::kInvalidProblem,
                  "duplicate score table for " + t.decision.ToString() + "@" +
                      t.strategy);
    }
    if (static_cast<int>(t.scores.size()) != sorted[*d].num_labels) {
      throw Error(ErrorCode::kInvalidProblem,
                  "score table for " + t.decision.ToString() + " has " +
                      std::to_string(t.scores.size()) + " entries, expected " +
                      std::to_string(sorted[*d].num_labels));
    }
    for (double w : t.scores) {
      if (!std::isfinite(w)) {
        throw Error(ErrorCode::kInvalidProblem,
                    "non-finite weight for " + t.decision.ToString());
      }
    }
    by_decision[*d][s] = &t;
  }

  for (std::size_t j = 0; j < sorted.size(); ++j) {
    int covered = 0;
    for (const ScoreTable *t : by_decision[j]) covered += (t != nullptr);
    if (covered == 0 ||
        (!options.allow_partial_coverage &&
         covered != static_cast<int>(p.strategies_.size()))) {
      throw Error(ErrorCode::kMissingScore,
                  "decision " + sorted[j].id.ToString() + " scored by " +
                      std::to_string(covered) + " of " +
                      std::to_string(p.strategies_.size()) + " strategies");
    }
  }

  // Canonical order: (decision, label, strategy); the decision variable
  // precedes the outcomes of its label.
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    DecisionInfo &info = p.decisions_[j];
    info.outcome_vars.assign(info.num_labels,
                             std::vector<int>(p.strategies_.size(), -1));
    for (int k = 0; k < info.num_labels; ++k) {
      info.decision_vars.push_back(static_cast<int>(p.variables_.size()));
      p.variables_.push_back(Variable{VarKey::Decision(info.id, k), 0.0});
      for (std::size_t s = 0; s < p.strategies_.size(); ++s) {
        const ScoreTable *t = by_decision[j][s];
        if (t == nullptr) continue;
        info.outcome_vars[k][s] = static_cast<int>(p.variables_.size());
        p.variables_.push_back(Variable{
            VarKey::Outcome(info.id, k, p.strategies_[s]), t->scores[k]});
      }
    }
    for (const ScoreTable *t : by_decision[j]) {
      if (t != nullptr) p.tables_.push_back(*t);
    }
  }

  for (const DecisionInfo &info : p.decisions_) {
    p.constraints_.push_back(CompileMulticlass(info.id, info.num_labels));
    for (int k = 0; k < info.num_labels; ++k) {
      std::vector<VarKey> outcomes;
      for (int v : info.outcome_vars[k]) {
        if (v >= 0) outcomes.push_back(p.variables_[v].key);
      }
      for (LinearConstraint &c :
           CompileDecisionLink(VarKey::Decision(info.id, k), outcomes)) {
        p.constraints_.push_back(std::move(c));
      }
    }
  }

  LabelCountLookup lookup = [&p](const DecisionId &id) -> std::optional<int> {
    auto d = p.DecisionIndex(id);
    if (!d) return std::nullopt;
    return p.decisions_[*d].num_labels;
  };
  for (const ConstraintSpec &spec : specs) {
    for (LinearConstraint &c : CompileSpec(spec, lookup)) {
      p.constraints_.push_back(std::move(c));
    }
  }
  p.specs_ = specs;
  p.Index();

  if (gold_labels) {
    std::vector<int> labels(p.decisions_.size(), -1);
    for (std::size_t j = 0; j < p.decisions_.size(); ++j) {
      auto it = gold_labels->find(p.decisions_[j].id);
      if (it == gold_labels->end()) {
        throw Error(ErrorCode::kNoGold,
                    "no gold label for " + p.decisions_[j].id.ToString());
      }
      labels[j] = it->second;
    }
    p.gold_ = p.AssignmentFromLabels(labels);
  }
  return p;
}

double ObjectiveValue(const StructuredProblem &problem, const Assignment &a) {
  if (a.size() != problem.num_variables() || !a.IsTotal()) {
    throw Error(ErrorCode::kPartialAssignment,
                "assignment does not cover every variable");
  }
  double total = 0.0;
  const auto &vars = problem.variables();
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (vars[i].key.kind == VarKind::kOutcome && a[i] == 1) {
      total += vars[i].weight;
    }
  }
  return total;
}

bool IsSatisfied(const IndexedConstraint &row, const Assignment &a) {
  std::int64_t lhs = 0;
  for (const auto &[v, coef] : row.terms) lhs += coef * a[v];
  switch (row.relation) {
    case Relation::kLessEqual: return lhs <= row.bound;
    case Relation::kEqual: return lhs == row.bound;
    case Relation::kGreaterEqual: return lhs >= row.bound;
  }
  return false;
}

int CountViolations(const StructuredProblem &problem, const Assignment &a,
                    const std::string &tag) {
  if (a.size() != problem.num_variables() || !a.IsTotal()) {
    throw Error(ErrorCode::kPartialAssignment,
                "assignment does not cover every variable");
  }
  const auto &tags = problem.tags();
  auto it = std::find(tags.begin(), tags.end(), tag);
  if (it == tags.end()) {
    const auto &std_tags = StandardTags();
    if (std::find(std_tags.begin(), std_tags.end(), tag) == std_tags.end()) {
      throw Error(ErrorCode::kUnknownTag, "unknown constraint tag '" + tag + "'");
    }
    return 0;
  }
  const int tag_index = static_cast<int>(it - tags.begin());
  int count = 0;
  for (const IndexedConstraint &row : problem.rows()) {
    if (row.tag == tag_index && !IsSatisfied(row, a)) ++count;
  }
  return count;
}

std::map<std::string, int> CountAllViolations(const StructuredProblem &problem,
                                              const Assignment &a) {
  std::map<std::string, int> out;
  for (const std::string &tag : problem.tags()) {
    out[tag] = CountViolations(problem, a, tag);
  }
  return out;
}

bool IsFeasible(const StructuredProblem &problem, const Assignment &a) {
  if (a.size() != problem.num_variables() || !a.IsTotal()) return false;
  return std::all_of(problem.rows().begin(), problem.rows().end(),
                     [&](const IndexedConstraint &r) { return IsSatisfied(r, a); });
}

// JSON ----------------------------------------------------------------------

json ProblemToJson(const StructuredProblem &problem) {
  json decisions = json::array();
  for (const DecisionInfo &d : problem.decisions()) {
    decisions.push_back(json{{"id", d.id}, {"num_labels", d.num_labels}});
  }
  json outcomes = json::array();
  for (const Variable &v : problem.variables()) {
    if (v.key.kind != VarKind::kOutcome) continue;
    outcomes.push_back(json{{"decision", v.key.decision},
                            {"label", v.key.label},
                            {"strategy", v.key.strategy},
                            {"weight", v.weight}});
  }
  json gold = nullptr;
  if (problem.gold()) {
    gold = json{{"labels", problem.LabelsFromAssignment(*problem.gold())}};
  }
  return json{{"schema", kSchemaVersion},
              {"decisions", std::move(decisions)},
              {"outcomes", std::move(outcomes)},
              {"constraints", problem.constraints()},
              {"specs", problem.specs()},
              {"gold", std::move(gold)}};
}

StructuredProblem ProblemFromJson(const json &j) {
  if (j.value("schema", 0) != kSchemaVersion) {
    throw Error(ErrorCode::kSchemaError, "unsupported problem schema version");
  }
  std::vector<DecisionSpec> decisions;
  for (const json &d : j.at("decisions")) {
    decisions.push_back(
        DecisionSpec{d.at("id").get<DecisionId>(), d.at("num_labels").get<int>()});
  }
  std::map<std::pair<DecisionId, std::string>, ScoreTable> tables;
  std::map<DecisionId, int> label_counts;
  for (const DecisionSpec &d : decisions) label_counts[d.id] = d.num_labels;
  for (const json &o : j.at("outcomes")) {
    DecisionId id = o.at("decision").get<DecisionId>();
    std::string strategy = o.at("strategy").get<std::string>();
    auto lc = label_counts.find(id);
    if (lc == label_counts.end()) {
      throw Error(ErrorCode::kDanglingReference,
                  "outcome for unknown decision " + id.ToString());
    }
    ScoreTable &t = tables[{id, strategy}];
    if (t.scores.empty()) {
      t.decision = id;
      t.strategy = strategy;
      t.scores.assign(lc->second, 0.0);
    }
    int label = o.at("label").get<int>();
    if (label < 0 || label >= lc->second) {
      throw Error(ErrorCode::kSchemaError, "outcome label out of range");
    }
    t.scores[label] = o.at("weight").get<double>();
  }
  std::vector<ScoreTable> score_list;
  for (auto &[key, t] : tables) score_list.push_back(std::move(t));
  std::vector<ConstraintSpec> specs;
  if (j.contains("specs")) j.at("specs").get_to(specs);

  StructuredProblem p =
      BuildProblem(decisions, score_list, {}, std::nullopt,
                   BuildOptions{.allow_partial_coverage = true});
  // Constraints come from the document verbatim.
  p.constraints_ = j.at("constraints").get<std::vector<LinearConstraint>>();
  for (const LinearConstraint &c : p.constraints_) ValidateConstraint(c);
  p.specs_ = std::move(specs);
  p.Index();
  if (j.contains("gold") && !j.at("gold").is_null()) {
    std::vector<int> labels = j.at("gold").at("labels").get<std::vector<int>>();
    p.gold_ = p.AssignmentFromLabels(labels);
  }
  return p;
}

}  // namespace structprompt
