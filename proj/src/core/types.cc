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

#include "structprompt/types.h"

#include <set>
#include <sstream>

#include "structprompt/error.h"

namespace structprompt {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingScore: return "MissingScore";
    case ErrorCode::kDanglingReference: return "DanglingReference";
    case ErrorCode::kPartialAssignment: return "PartialAssignment";
    case ErrorCode::kUnknownTag: return "UnknownTag";
    case ErrorCode::kInvalidProblem: return "InvalidProblem";
    case ErrorCode::kZeroLabels: return "ZeroLabels";
    case ErrorCode::kEmptyOutcomeSet: return "EmptyOutcomeSet";
    case ErrorCode::kLabelSpaceMismatch: return "LabelSpaceMismatch";
    case ErrorCode::kOrphanRole: return "OrphanRole";
    case ErrorCode::kInvalidClause: return "InvalidClause";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kBudgetExceeded: return "BudgetExceeded";
    case ErrorCode::kTooLarge: return "TooLarge";
    case ErrorCode::kTransport: return "Transport";
    case ErrorCode::kCapabilityMissing: return "CapabilityMissing";
    case ErrorCode::kMalformedResponse: return "MalformedResponse";
    case ErrorCode::kNoLogprobs: return "NoLogprobs";
    case ErrorCode::kCacheCorrupt: return "CacheCorrupt";
    case ErrorCode::kAllZero: return "AllZero";
    case ErrorCode::kOptionCollision: return "OptionCollision";
    case ErrorCode::kEmptyText: return "EmptyText";
    case ErrorCode::kAllUnparseable: return "AllUnparseable";
    case ErrorCode::kParseFailure: return "ParseFailure";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kNoGold: return "NoGold";
    case ErrorCode::kDiverged: return "Diverged";
    case ErrorCode::kSolverBudget: return "SolverBudget";
    case ErrorCode::kSchemaError: return "SchemaError";
    case ErrorCode::kRoleOutOfVocabulary: return "RoleOutOfVocabulary";
    case ErrorCode::kMissingField: return "MissingField";
    case ErrorCode::kPairIndexError: return "PairIndexError";
    case ErrorCode::kInfeasibleAssignment: return "InfeasibleAssignment";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfigError:
      return 2;
    case ErrorCode::kSchemaError:
    case ErrorCode::kRoleOutOfVocabulary:
    case ErrorCode::kMissingField:
    case ErrorCode::kPairIndexError:
    case ErrorCode::kMissingScore:
    case ErrorCode::kDanglingReference:
    case ErrorCode::kInvalidProblem:
    case ErrorCode::kLengthMismatch:
    case ErrorCode::kIoError:
      return 3;
    case ErrorCode::kTransport:
    case ErrorCode::kCapabilityMissing:
    case ErrorCode::kMalformedResponse:
    case ErrorCode::kNoLogprobs:
      return 4;
    default:
      return 1;
  }
}

std::string DecisionId::ToString() const {
  return task_instance + "/" + subproblem + "/" + locus;
}

std::string VarKey::ToString() const {
  std::ostringstream out;
  if (kind == VarKind::kDecision) {
    out << "d[" << decision.ToString() << "#" << label << "]";
  } else {
    out << "p[" << decision.ToString() << "#" << label << "@" << strategy
        << "]";
  }
  return out.str();
}

std::string_view RelationSymbol(Relation rel) {
  switch (rel) {
    case Relation::kLessEqual: return "<=";
    case Relation::kEqual: return "=";
    case Relation::kGreaterEqual: return ">=";
  }
  return "?";
}

std::string LinearConstraint::ToString() const {
  std::ostringstream out;
  bool first = true;
  for (const Term &t : terms) {
    if (!first) out << (t.coef < 0 ? " - " : " + ");
    else if (t.coef < 0) out << "-";
    first = false;
    std::int64_t mag = t.coef < 0 ? -t.coef : t.coef;
    if (mag != 1) out << mag << " ";
    out << t.var.ToString();
  }
  if (terms.empty()) out << "0";
  out << " " << RelationSymbol(relation) << " " << bound;
  if (!tag.empty()) out << "  [" << tag << "]";
  return out.str();
}

void ValidateConstraint(const LinearConstraint &c) {
  std::set<VarKey> seen;
  for (const Term &t : c.terms) {
    if (!seen.insert(t.var).second) {
      throw Error(ErrorCode::kInvalidProblem,
                  "duplicate variable " + t.var.ToString() + " in " +
                      c.ToString());
    }
  }
}

// JSON ----------------------------------------------------------------------

void to_json(json &j, const DecisionId &id) {
  j = json{{"instance", id.task_instance},
           {"subproblem", id.subproblem},
           {"locus", id.locus}};
}

void from_json(const json &j, DecisionId &id) {
  j.at("instance").get_to(id.task_instance);
  j.at("subproblem").get_to(id.subproblem);
  id.locus = j.value("locus", std::string());
}

void to_json(json &j, const VarKey &key) {
  j = json{{"decision", key.decision}, {"label", key.label}};
  if (key.kind == VarKind::kOutcome) j["strategy"] = key.strategy;
}

void from_json(const json &j, VarKey &key) {
  j.at("decision").get_to(key.decision);
  j.at("label").get_to(key.label);
  if (j.contains("strategy")) {
    j.at("strategy").get_to(key.strategy);
    key.kind = VarKind::kOutcome;
  } else {
    key.strategy.clear();
    key.kind = VarKind::kDecision;
  }
}

namespace {

Relation RelationFromString(const std::string &s) {
  if (s == "<=") return Relation::kLessEqual;
  if (s == "=") return Relation::kEqual;
  if (s == ">=") return Relation::kGreaterEqual;
  throw Error(ErrorCode::kSchemaError, "unknown relation '" + s + "'");
}

}  // namespace

void to_json(json &j, const LinearConstraint &c) {
  json terms = json::array();
  for (const Term &t : c.terms) {
    terms.push_back(json{{"var", t.var}, {"coef", t.coef}});
  }
  j = json{{"terms", std::move(terms)},
           {"relation", std::string(RelationSymbol(c.relation))},
           {"bound", c.bound},
           {"tag", c.tag}};
}

void from_json(const json &j, LinearConstraint &c) {
  c.terms.clear();
  for (const json &t : j.at("terms")) {
    c.terms.push_back(
        Term{t.at("var").get<VarKey>(), t.at("coef").get<std::int64_t>()});
  }
  c.relation = RelationFromString(j.at("relation").get<std::string>());
  j.at("bound").get_to(c.bound);
  c.tag = j.value("tag", std::string());
}

void to_json(json &j, const ScoreTable &t) {
  j = json{{"decision", t.decision},
           {"strategy", t.strategy},
           {"scores", t.scores},
           {"raw",
            {{"unnormalized", t.raw.unnormalized},
             {"sample_counts", t.raw.sample_counts},
             {"failed_parses", t.raw.failed_parses},
             {"degenerate", t.raw.degenerate},
             {"note", t.raw.note}}}};
}

void from_json(const json &j, ScoreTable &t) {
  j.at("decision").get_to(t.decision);
  j.at("strategy").get_to(t.strategy);
  j.at("scores").get_to(t.scores);
  t.raw = ScoreProvenance{};
  if (j.contains("raw")) {
    const json &raw = j.at("raw");
    t.raw.unnormalized = raw.value("unnormalized", std::vector<double>());
    t.raw.sample_counts = raw.value("sample_counts", std::vector<int>());
    t.raw.failed_parses = raw.value("failed_parses", 0);
    t.raw.degenerate = raw.value("degenerate", false);
    t.raw.note = raw.value("note", std::string());
  }
}

}  // namespace structprompt
