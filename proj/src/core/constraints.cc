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

#include <algorithm>
#include <map>
#include <set>

#include "structprompt/error.h"

namespace structprompt {

LinearConstraint CompileMulticlass(const DecisionId &decision, int num_labels) {
  if (num_labels < 1) {
    throw Error(ErrorCode::kZeroLabels,
                "decision " + decision.ToString() + " has no labels");
  }
  LinearConstraint c;
  c.relation = Relation::kEqual;
  c.bound = 1;
  c.tag = kTagMulticlass;
  for (int k = 0; k < num_labels; ++k) {
    c.terms.push_back(Term{VarKey::Decision(decision, k), 1});
  }
  return c;
}

std::vector<LinearConstraint> CompileDecisionLink(
    const VarKey &decision_var, std::span<const VarKey> linked_outcomes) {
  if (linked_outcomes.empty()) {
    throw Error(ErrorCode::kEmptyOutcomeSet,
                "no outcomes linked to " + decision_var.ToString());
  }
  std::vector<LinearConstraint> out;
  out.reserve(linked_outcomes.size() + 1);

  // d - sum_p p <= 0
  LinearConstraint upper;
  upper.tag = kTagLinkUpper;
  upper.terms.push_back(Term{decision_var, 1});
  for (const VarKey &p : linked_outcomes) upper.terms.push_back(Term{p, -1});
  ValidateConstraint(upper);
  out.push_back(std::move(upper));

  // p - d <= 0 for each strategy
  for (const VarKey &p : linked_outcomes) {
    LinearConstraint lower;
    lower.tag = kTagLinkLower;
    lower.terms = {Term{p, 1}, Term{decision_var, -1}};
    out.push_back(std::move(lower));
  }
  return out;
}

LinearConstraint CompileHorn(const HornClause &clause, std::string tag) {
  if (clause.body.empty()) {
    throw Error(ErrorCode::kInvalidClause, "horn clause with empty body");
  }
  std::set<VarKey> seen;
  for (const VarKey &v : clause.body) {
    if (!seen.insert(v).second) {
      throw Error(ErrorCode::kInvalidClause,
                  "repeated body literal " + v.ToString());
    }
  }
  if (seen.count(clause.head)) {
    throw Error(ErrorCode::kInvalidClause,
                "head " + clause.head.ToString() + " appears in the body");
  }
  LinearConstraint c;
  c.tag = std::move(tag);
  for (const VarKey &v : clause.body) c.terms.push_back(Term{v, 1});
  c.terms.push_back(Term{clause.head, -1});
  c.bound = static_cast<std::int64_t>(clause.body.size()) - 1;
  return c;
}

LinearConstraint CompileMutualExclusion(const DecisionId &a, int labels_a,
                                        const DecisionId &b, int labels_b,
                                        int label) {
  if (labels_a != labels_b) {
    throw Error(ErrorCode::kLabelSpaceMismatch,
                a.ToString() + " and " + b.ToString() +
                    " have different label counts");
  }
  if (label < 0 || label >= labels_a) {
    throw Error(ErrorCode::kLabelSpaceMismatch,
                "label " + std::to_string(label) + " out of range");
  }
  if (a == b) {
    throw Error(ErrorCode::kInvalidClause,
                "mutual exclusion of " + a.ToString() + " with itself");
  }
  LinearConstraint c;
  c.tag = kTagMutex;
  c.bound = 1;
  c.terms = {Term{VarKey::Decision(a, label), 1},
             Term{VarKey::Decision(b, label), 1}};
  return c;
}

std::vector<LinearConstraint> CompilePairwiseExclusion(
    std::span<const DecisionId> decisions, int num_labels,
    std::span<const int> labels) {
  std::vector<int> all;
  if (labels.empty()) {
    for (int k = 0; k < num_labels; ++k) all.push_back(k);
    labels = all;
  }
  std::vector<LinearConstraint> out;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    for (std::size_t j = i + 1; j < decisions.size(); ++j) {
      for (int k : labels) {
        out.push_back(CompileMutualExclusion(decisions[i], num_labels,
                                             decisions[j], num_labels, k));
      }
    }
  }
  return out;
}

std::vector<LinearConstraint> CompileAlignment(
    const DecisionId &foundation, int foundation_labels,
    std::span<const DecisionId> roles, int role_labels,
    const AlignmentTable &table) {
  if (static_cast<int>(table.size()) != foundation_labels) {
    throw Error(ErrorCode::kLabelSpaceMismatch,
                "alignment table covers " + std::to_string(table.size()) +
                    " foundations, decision has " +
                    std::to_string(foundation_labels));
  }
  std::vector<int> owner(role_labels, -1);
  for (int f = 0; f < foundation_labels; ++f) {
    for (int r : table[f]) {
      if (r < 0 || r >= role_labels) {
        throw Error(ErrorCode::kLabelSpaceMismatch,
                    "role " + std::to_string(r) + " out of range");
      }
      if (owner[r] != -1) {
        throw Error(ErrorCode::kInvalidProblem,
                    "role " + std::to_string(r) +
                        " belongs to more than one foundation");
      }
      owner[r] = f;
    }
  }
  for (int r = 0; r < role_labels; ++r) {
    if (owner[r] == -1) {
      throw Error(ErrorCode::kOrphanRole,
                  "role " + std::to_string(r) + " has no foundation");
    }
  }
  std::vector<LinearConstraint> out;
  out.reserve(roles.size() * role_labels);
  for (const DecisionId &role : roles) {
    for (int r = 0; r < role_labels; ++r) {
      LinearConstraint c;
      c.tag = kTagAlignment;
      c.terms = {Term{VarKey::Decision(role, r), 1},
                 Term{VarKey::Decision(foundation, owner[r]), -1}};
      out.push_back(std::move(c));
    }
  }
  return out;
}

std::vector<LinearConstraint> CompileTransitivity(
    std::span<const PairDecision> pairs, int positive_label) {
  std::map<std::pair<int, int>, const DecisionId *> by_pair;
  std::set<int> mentions;
  for (const PairDecision &p : pairs) {
    if (p.a == p.b) {
      throw Error(ErrorCode::kPairIndexError,
                  "pair links mention " + std::to_string(p.a) + " to itself");
    }
    auto key = std::minmax(p.a, p.b);
    if (!by_pair.emplace(key, &p.decision).second) {
      throw Error(ErrorCode::kPairIndexError,
                  "duplicate pair (" + std::to_string(key.first) + ", " +
                      std::to_string(key.second) + ")");
    }
    mentions.insert(p.a);
    mentions.insert(p.b);
  }
  auto var = [&](int x, int y) {
    return VarKey::Decision(*by_pair.at(std::minmax(x, y)), positive_label);
  };
  std::vector<int> ms(mentions.begin(), mentions.end());
  std::vector<LinearConstraint> out;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    for (std::size_t j = i + 1; j < ms.size(); ++j) {
      if (!by_pair.count({ms[i], ms[j]})) continue;
      for (std::size_t k = j + 1; k < ms.size(); ++k) {
        if (!by_pair.count({ms[j], ms[k]}) || !by_pair.count({ms[i], ms[k]})) {
          continue;
        }
        const VarKey ij = var(ms[i], ms[j]);
        const VarKey jk = var(ms[j], ms[k]);
        const VarKey ik = var(ms[i], ms[k]);
        out.push_back(CompileHorn({{ij, jk}, ik}, kTagTransitivity));
        out.push_back(CompileHorn({{ij, ik}, jk}, kTagTransitivity));
        out.push_back(CompileHorn({{ik, jk}, ij}, kTagTransitivity));
      }
    }
  }
  return out;
}

// Specs ---------------------------------------------------------------------

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

int RequireLabels(const LabelCountLookup &labels, const DecisionId &id) {
  std::optional<int> k = labels(id);
  if (!k) {
    throw Error(ErrorCode::kDanglingReference,
                "constraint references unknown decision " + id.ToString());
  }
  return *k;
}

VarKey CheckedVar(const LabelCountLookup &labels, const DecisionLabel &dl) {
  int k = RequireLabels(labels, dl.decision);
  if (dl.label < 0 || dl.label >= k) {
    throw Error(ErrorCode::kInvalidProblem,
                "label " + std::to_string(dl.label) + " out of range for " +
                    dl.decision.ToString());
  }
  return VarKey::Decision(dl.decision, dl.label);
}

void Retag(std::vector<LinearConstraint> &cs, const std::string &tag) {
  for (LinearConstraint &c : cs) c.tag = tag;
}

}  // namespace

std::vector<DecisionId> ReferencedDecisions(const ConstraintSpec &spec) {
  return std::visit(
      Overloaded{
          [](const HornSpec &s) {
            std::vector<DecisionId> out;
            for (const auto &b : s.body) out.push_back(b.decision);
            out.push_back(s.head.decision);
            return out;
          },
          [](const MutexSpec &s) { return s.decisions; },
          [](const AlignmentSpec &s) {
            std::vector<DecisionId> out{s.foundation};
            out.insert(out.end(), s.roles.begin(), s.roles.end());
            return out;
          },
          [](const TransitivitySpec &s) {
            std::vector<DecisionId> out;
            for (const auto &p : s.pairs) out.push_back(p.decision);
            return out;
          },
          [](const LinearSpec &s) {
            std::vector<DecisionId> out;
            for (const auto &t : s.terms) out.push_back(t.first.decision);
            return out;
          },
      },
      spec);
}

std::vector<LinearConstraint> CompileSpec(const ConstraintSpec &spec,
                                          const LabelCountLookup &labels) {
  for (const DecisionId &id : ReferencedDecisions(spec)) {
    RequireLabels(labels, id);
  }
  return std::visit(
      Overloaded{
          [&](const HornSpec &s) {
            HornClause clause;
            for (const auto &b : s.body) {
              clause.body.push_back(CheckedVar(labels, b));
            }
            clause.head = CheckedVar(labels, s.head);
            return std::vector<LinearConstraint>{CompileHorn(clause, s.tag)};
          },
          [&](const MutexSpec &s) {
            if (s.decisions.empty()) return std::vector<LinearConstraint>{};
            int k = RequireLabels(labels, s.decisions.front());
            for (const DecisionId &d : s.decisions) {
              if (RequireLabels(labels, d) != k) {
                throw Error(ErrorCode::kLabelSpaceMismatch,
                            d.ToString() + " does not share the label space");
              }
            }
            auto out = CompilePairwiseExclusion(s.decisions, k, s.labels);
            Retag(out, s.tag);
            return out;
          },
          [&](const AlignmentSpec &s) {
            int role_labels = 0;
            for (const DecisionId &r : s.roles) {
              int k = RequireLabels(labels, r);
              if (role_labels != 0 && k != role_labels) {
                throw Error(ErrorCode::kLabelSpaceMismatch,
                            r.ToString() + " does not share the role labels");
              }
              role_labels = k;
            }
            if (s.roles.empty()) return std::vector<LinearConstraint>{};
            auto out = CompileAlignment(s.foundation,
                                        RequireLabels(labels, s.foundation),
                                        s.roles, role_labels, s.table);
            Retag(out, s.tag);
            return out;
          },
          [&](const TransitivitySpec &s) {
            for (const auto &p : s.pairs) {
              int k = RequireLabels(labels, p.decision);
              if (s.positive_label < 0 || s.positive_label >= k) {
                throw Error(ErrorCode::kInvalidProblem,
                            "positive label out of range for " +
                                p.decision.ToString());
              }
            }
            auto out = CompileTransitivity(s.pairs, s.positive_label);
            Retag(out, s.tag);
            return out;
          },
          [&](const LinearSpec &s) {
            LinearConstraint c;
            c.relation = s.relation;
            c.bound = s.bound;
            c.tag = s.tag;
            for (const auto &[dl, coef] : s.terms) {
              c.terms.push_back(Term{CheckedVar(labels, dl), coef});
            }
            ValidateConstraint(c);
            return std::vector<LinearConstraint>{std::move(c)};
          },
      },
      spec);
}

// JSON ----------------------------------------------------------------------

namespace {

json DecisionLabelJson(const DecisionLabel &dl) {
  return json{{"decision", dl.decision}, {"label", dl.label}};
}

DecisionLabel DecisionLabelFrom(const json &j) {
  return DecisionLabel{j.at("decision").get<DecisionId>(),
                       j.at("label").get<int>()};
}

}  // namespace

void to_json(json &j, const ConstraintSpec &spec) {
  std::visit(
      Overloaded{
          [&](const HornSpec &s) {
            json body = json::array();
            for (const auto &b : s.body) body.push_back(DecisionLabelJson(b));
            j = json{{"type", "horn"},
                     {"body", std::move(body)},
                     {"head", DecisionLabelJson(s.head)},
                     {"tag", s.tag}};
          },
          [&](const MutexSpec &s) {
            j = json{{"type", "mutex"},
                     {"decisions", s.decisions},
                     {"labels", s.labels},
                     {"tag", s.tag}};
          },
          [&](const AlignmentSpec &s) {
            j = json{{"type", "alignment"},
                     {"foundation", s.foundation},
                     {"roles", s.roles},
                     {"table", s.table},
                     {"tag", s.tag}};
          },
          [&](const TransitivitySpec &s) {
            json pairs = json::array();
            for (const auto &p : s.pairs) {
              pairs.push_back(
                  json{{"a", p.a}, {"b", p.b}, {"decision", p.decision}});
            }
            j = json{{"type", "transitivity"},
                     {"pairs", std::move(pairs)},
                     {"positive_label", s.positive_label},
                     {"tag", s.tag}};
          },
          [&](const LinearSpec &s) {
            json terms = json::array();
            for (const auto &[dl, coef] : s.terms) {
              json t = DecisionLabelJson(dl);
              t["coef"] = coef;
              terms.push_back(std::move(t));
            }
            j = json{{"type", "linear"},
                     {"terms", std::move(terms)},
                     {"relation", std::string(RelationSymbol(s.relation))},
                     {"bound", s.bound},
                     {"tag", s.tag}};
          },
      },
      spec);
}

void from_json(const json &j, ConstraintSpec &spec) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "horn") {
    HornSpec s;
    for (const json &b : j.at("body")) s.body.push_back(DecisionLabelFrom(b));
    s.head = DecisionLabelFrom(j.at("head"));
    s.tag = j.value("tag", std::string(kTagHorn));
    spec = std::move(s);
  } else if (type == "mutex") {
    MutexSpec s;
    j.at("decisions").get_to(s.decisions);
    s.labels = j.value("labels", std::vector<int>());
    s.tag = j.value("tag", std::string(kTagMutex));
    spec = std::move(s);
  } else if (type == "alignment") {
    AlignmentSpec s;
    j.at("foundation").get_to(s.foundation);
    j.at("roles").get_to(s.roles);
    j.at("table").get_to(s.table);
    s.tag = j.value("tag", std::string(kTagAlignment));
    spec = std::move(s);
  } else if (type == "transitivity") {
    TransitivitySpec s;
    for (const json &p : j.at("pairs")) {
      s.pairs.push_back(PairDecision{p.at("a").get<int>(), p.at("b").get<int>(),
                                     p.at("decision").get<DecisionId>()});
    }
    s.positive_label = j.value("positive_label", 0);
    s.tag = j.value("tag", std::string(kTagTransitivity));
    spec = std::move(s);
  } else if (type == "linear") {
    LinearSpec s;
    for (const json &t : j.at("terms")) {
      s.terms.emplace_back(DecisionLabelFrom(t), t.at("coef").get<std::int64_t>());
    }
    LinearConstraint probe;
    json rel = json{{"terms", json::array()},
                    {"relation", j.at("relation")},
                    {"bound", 0}};
    from_json(rel, probe);
    s.relation = probe.relation;
    j.at("bound").get_to(s.bound);
    s.tag = j.value("tag", std::string("linear"));
    spec = std::move(s);
  } else {
    throw Error(ErrorCode::kSchemaError, "unknown constraint type '" + type + "'");
  }
}

}  // namespace structprompt
