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

#include <set>

#include "structprompt/error.h"
#include "structprompt/morality.h"

namespace structprompt {

namespace {

std::string EntityLocus(int entity) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "entity-%03d", entity);
  return buf;
}

const std::string &Need(const json &j, const char *key) {
  if (!j.contains(key) || !j[key].is_string()) {
    throw Error(ErrorCode::kSchemaError,
                std::string("missing string field '") + key + "'");
  }
  return j[key].get_ref<const std::string &>();
}

std::string FoundationDefinitions() {
  std::string out;
  for (int f = 0; f < kNumFoundations; ++f) {
    if (f > 0) out += '\n';
    out += std::string(kFoundations[f]) + ": " +
           std::string(FoundationDefinition(f));
  }
  return out;
}

std::string RoleDefinitions() {
  std::string out;
  for (int f = 0; f < kNumFoundations; ++f) {
    if (f > 0) out += '\n';
    out += std::string(kFoundations[f]) + ": " +
           std::string(FoundationDefinition(f));
    for (int r : MoralityAlignment()[f]) {
      out += "\n- " + std::string(kRoles[r]) + ": " +
             std::string(RoleDefinition(r));
    }
  }
  return out;
}

std::string RoleChoices() {
  std::string out;
  for (int r = 0; r < kNumRoles; ++r) {
    if (r > 0) out += '\n';
    out += "(" + OptionLetter(r) + ") " + std::string(kRoles[r]);
  }
  return out;
}

std::vector<std::string> FoundationSynonyms(int f) {
  const std::string name(kFoundations[f]);
  const auto slash = name.find('/');
  return {name, name.substr(0, slash), name.substr(slash + 1)};
}

const TemplateSet &Templates(const MoralityPromptRequest &r) {
  return r.templates != nullptr ? *r.templates : TemplateSet::Builtin();
}

// Exemplar indices into the request pool, never the tweet itself.
std::vector<std::size_t> Exemplars(const TweetInstance &t,
                                   const MoralityPromptRequest &r,
                                   const std::string &task) {
  CheckShots(r.method, r.shots);
  if (r.shots == 0) return {};
  if (r.pool == nullptr) {
    throw Error(ErrorCode::kConfigError, "few-shot prompts need a pool");
  }
  std::vector<std::size_t> exclude;
  for (std::size_t i = 0; i < r.pool->size(); ++i) {
    if ((*r.pool)[i].id == t.id) exclude.push_back(i);
  }
  return SelectShots(r.pool->size(), r.shots,
                     DeriveSeed(r.seed, "shots/" + task + "/" + t.id),
                     exclude);
}

// A label other than `gold`, chosen by hash.
int OtherLabel(int gold, int num_labels, std::uint64_t h) {
  return (gold + 1 + static_cast<int>(h % (num_labels - 1))) % num_labels;
}

}  // namespace

void to_json(json &j, const TweetInstance &t) {
  json entities = json::array();
  for (const auto &e : t.entities) {
    entities.push_back({{"text", e.text},
                        {"begin", e.begin},
                        {"end", e.end},
                        {"role", std::string(kRoles[e.role])}});
  }
  j = json{{"id", t.id},
           {"text", t.text},
           {"entities", entities},
           {"foundation", std::string(kFoundations[t.foundation])}};
  if (t.ideology) j["ideology"] = *t.ideology;
  if (t.topic) j["topic"] = *t.topic;
}

void from_json(const json &j, TweetInstance &t) {
  if (!j.is_object()) throw Error(ErrorCode::kSchemaError, "not an object");
  t = TweetInstance{};
  t.id = Need(j, "id");
  t.text = Need(j, "text");
  const auto &fname = Need(j, "foundation");
  const auto f = FoundationIndex(fname);
  if (!f) {
    throw Error(ErrorCode::kSchemaError, "unknown foundation '" + fname + "'");
  }
  t.foundation = *f;
  if (j.contains("ideology") && !j["ideology"].is_null()) {
    t.ideology = Need(j, "ideology");
  }
  if (j.contains("topic") && !j["topic"].is_null()) t.topic = Need(j, "topic");
  if (!j.contains("entities") || !j["entities"].is_array() ||
      j["entities"].empty()) {
    throw Error(ErrorCode::kSchemaError, "tweet " + t.id + " has no entities");
  }
  std::set<int> seen;
  for (const auto &e : j["entities"]) {
    TweetEntity ent;
    ent.text = Need(e, "text");
    ent.begin = e.value("begin", 0);
    ent.end = e.value("end", 0);
    const auto &rname = Need(e, "role");
    const auto r = RoleIndex(rname);
    if (!r) {
      throw Error(ErrorCode::kRoleOutOfVocabulary,
                  "unknown moral role '" + rname + "'");
    }
    ent.role = *r;
    if (kRoleFoundation[ent.role] != t.foundation) {
      throw Error(ErrorCode::kSchemaError,
                  "role '" + rname + "' does not belong to foundation '" +
                      fname + "'");
    }
    if (!seen.insert(ent.role).second) {
      throw Error(ErrorCode::kSchemaError,
                  "role '" + rname + "' used twice in tweet " + t.id);
    }
    if (ent.begin < 0 || ent.end < ent.begin ||
        ent.end > static_cast<int>(t.text.size())) {
      throw Error(ErrorCode::kSchemaError,
                  "entity offsets out of range in tweet " + t.id);
    }
    t.entities.push_back(std::move(ent));
  }
}

std::vector<TweetInstance> LoadTweets(const std::filesystem::path &path) {
  std::vector<TweetInstance> out;
  std::set<std::string> ids;
  ForEachJsonLine(path, [&](const json &j, int line) {
    try {
      auto t = j.get<TweetInstance>();
      if (!ids.insert(t.id).second) {
        throw Error(ErrorCode::kSchemaError, "duplicate tweet id " + t.id);
      }
      out.push_back(std::move(t));
    } catch (const Error &e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(line) +
                                ": " + e.what());
    } catch (const json::exception &e) {
      throw Error(ErrorCode::kSchemaError, path.string() + ":" +
                                               std::to_string(line) + ": " +
                                               e.what());
    }
  });
  return out;
}

void SaveTweets(const std::filesystem::path &path,
                const std::vector<TweetInstance> &tweets) {
  std::vector<json> lines(tweets.begin(), tweets.end());
  WriteJsonLines(path, lines);
}

DecisionId FoundationDecision(const TweetInstance &t) {
  return DecisionId{t.id, kMoralFoundation, "tweet"};
}

DecisionId RoleDecision(const TweetInstance &t, int entity) {
  return DecisionId{t.id, kMoralRole, EntityLocus(entity)};
}

std::vector<DecisionSpec> MoralityDecisions(const TweetInstance &t) {
  std::vector<DecisionSpec> out{{FoundationDecision(t), kNumFoundations}};
  for (std::size_t e = 0; e < t.entities.size(); ++e) {
    out.push_back({RoleDecision(t, static_cast<int>(e)), kNumRoles});
  }
  return out;
}

std::map<DecisionId, int> MoralityGold(const TweetInstance &t) {
  std::map<DecisionId, int> gold{{FoundationDecision(t), t.foundation}};
  for (std::size_t e = 0; e < t.entities.size(); ++e) {
    gold[RoleDecision(t, static_cast<int>(e))] = t.entities[e].role;
  }
  return gold;
}

std::vector<ConstraintSpec> MoralitySpecs(const TweetInstance &t,
                                          const MoralityConstraints &c) {
  std::vector<DecisionId> roles;
  for (std::size_t e = 0; e < t.entities.size(); ++e) {
    roles.push_back(RoleDecision(t, static_cast<int>(e)));
  }
  std::vector<ConstraintSpec> specs;
  if (c.alignment) {
    specs.push_back(AlignmentSpec{FoundationDecision(t), roles,
                                  MoralityAlignment()});
  }
  if (c.role_uniqueness && roles.size() > 1) {
    specs.push_back(MutexSpec{roles, {}});
  }
  return specs;
}

StructuredProblem BuildMoralityProblem(const TweetInstance &t,
                                       const std::vector<ScoreTable> &tables,
                                       const MoralityConstraints &c,
                                       bool with_gold) {
  std::optional<std::map<DecisionId, int>> gold;
  if (with_gold) gold = MoralityGold(t);
  return BuildProblem(MoralityDecisions(t), tables, MoralitySpecs(t, c), gold);
}

std::string TweetContext(const TweetInstance &t, ContextVariant variant) {
  std::string out = "Tweet: " + t.text;
  if (variant == ContextVariant::kPlain) return out;
  if (!t.ideology || !t.topic) {
    throw Error(ErrorCode::kMissingField,
                "tweet " + t.id +
                    " lacks the ideology/topic needed by the context variant");
  }
  out += "\nPolitical ideology of the author: " + *t.ideology;
  out += "\nTopic: " + *t.topic;
  return out;
}

PromptBundle FoundationPrompts(const TweetInstance &t,
                               const MoralityPromptRequest &r) {
  const TemplateSet &tpl = Templates(r);
  const std::string &m = r.method;
  PromptBundle b;
  b.template_id = std::string(kTaskFoundation) + "." + m;
  b.method = m;
  b.strategy = StrategyId(m, r.variant);
  b.shots = r.shots;
  b.variant = r.variant;

  std::map<std::string, std::string> fields{
      {"definitions", FoundationDefinitions()},
      {"tweet", t.text},
      {"examples", ""}};
  if (m != kGenerativeClassification) {
    fields["context"] = TweetContext(t, r.variant);
  }

  const auto shots = Exemplars(t, r, kTaskFoundation);
  if (!shots.empty()) {
    const std::string &shot_tpl = tpl.Section(kTaskFoundation, m + ".shot");
    std::string examples;
    for (std::size_t i = 0; i < shots.size(); ++i) {
      const TweetInstance &ex = (*r.pool)[shots[i]];
      const auto h = DeriveSeed(r.seed, "answer/" + t.id + "/" + ex.id);
      std::map<std::string, std::string> f{
          {"context", TweetContext(ex, r.variant)}};
      if (m == kTrueFalse) {
        const bool positive = i % 2 == 0;
        const int label =
            positive ? ex.foundation
                     : OtherLabel(ex.foundation, kNumFoundations, h);
        f["label"] = std::string(kFoundations[label]);
        f["answer"] = positive ? "true" : "false";
      } else if (m == kMultipleChoice) {
        f["answer"] = OptionLetter(kFoundationChoicePosition[ex.foundation]);
      } else {
        f["answer"] = std::string(kFoundations[ex.foundation]);
      }
      examples += RenderTemplate(shot_tpl, f) + "\n\n";
    }
    fields["examples"] = examples;
  }

  const std::string &main = tpl.Section(kTaskFoundation, m);
  if (m == kTrueFalse || m == kVerbalizedConfidence) {
    for (int k = 0; k < kNumFoundations; ++k) {
      fields["label"] = std::string(kFoundations[k]);
      b.per_label.push_back(RenderTemplate(main, fields));
    }
  } else if (m == kMultipleChoice) {
    b.prompt = RenderTemplate(main, fields);
    for (int k = 0; k < kNumFoundations; ++k) {
      b.option_tokens.push_back(OptionLetter(kFoundationChoicePosition[k]));
    }
  } else if (m == kGenerationSampling) {
    b.prompt = RenderTemplate(main, fields);
    for (int k = 0; k < kNumFoundations; ++k) {
      b.synonyms.push_back(FoundationSynonyms(k));
    }
  } else {
    const auto descriptions = tpl.Descriptions(kTaskFoundation);
    for (int k = 0; k < kNumFoundations; ++k) {
      std::vector<GenerativePrompt> per;
      for (const auto &d : descriptions) {
        fields["generation_description"] = RenderTemplate(
            d, {{"moral_foundation", std::string(kFoundations[k])},
                {"moral_foundation_definition",
                 std::string(FoundationDefinition(k))}});
        per.push_back(RenderGenerative(main, fields));
      }
      b.generative.push_back(std::move(per));
    }
  }
  return b;
}

PromptBundle RolePrompts(const TweetInstance &t, int entity,
                         const MoralityPromptRequest &r) {
  if (entity < 0 || entity >= static_cast<int>(t.entities.size())) {
    throw Error(ErrorCode::kConfigError, "entity index out of range");
  }
  const TemplateSet &tpl = Templates(r);
  const std::string &m = r.method;
  PromptBundle b;
  b.template_id = std::string(kTaskRole) + "." + m;
  b.method = m;
  b.strategy = StrategyId(m, r.variant);
  b.shots = r.shots;
  b.variant = r.variant;

  std::map<std::string, std::string> fields{
      {"definitions", RoleDefinitions()},
      {"tweet", t.text},
      {"entity", t.entities[entity].text},
      {"choices", RoleChoices()},
      {"examples", ""}};
  if (m != kGenerativeClassification) {
    fields["context"] = TweetContext(t, r.variant);
  }

  const auto shots = Exemplars(t, r, kTaskRole);
  if (!shots.empty()) {
    const std::string &shot_tpl = tpl.Section(kTaskRole, m + ".shot");
    std::string examples;
    for (std::size_t i = 0; i < shots.size(); ++i) {
      const TweetInstance &ex = (*r.pool)[shots[i]];
      const auto h = DeriveSeed(r.seed, "answer/" + t.id + "/" + ex.id);
      const TweetEntity &ent = ex.entities[h % ex.entities.size()];
      std::map<std::string, std::string> f{
          {"context", TweetContext(ex, r.variant)},
          {"entity", ent.text},
          {"choices", RoleChoices()}};
      if (m == kTrueFalse) {
        const bool positive = i % 2 == 0;
        const int label =
            positive ? ent.role : OtherLabel(ent.role, kNumRoles, h >> 8);
        f["label"] = std::string(kRoles[label]);
        f["answer"] = positive ? "true" : "false";
      } else if (m == kMultipleChoice) {
        f["answer"] = OptionLetter(ent.role);
      } else {
        f["answer"] = std::string(kRoles[ent.role]);
      }
      examples += RenderTemplate(shot_tpl, f) + "\n\n";
    }
    fields["examples"] = examples;
  }

  const std::string &main = tpl.Section(kTaskRole, m);
  if (m == kTrueFalse || m == kVerbalizedConfidence) {
    for (int k = 0; k < kNumRoles; ++k) {
      fields["label"] = std::string(kRoles[k]);
      b.per_label.push_back(RenderTemplate(main, fields));
    }
  } else if (m == kMultipleChoice) {
    b.prompt = RenderTemplate(main, fields);
    for (int k = 0; k < kNumRoles; ++k) b.option_tokens.push_back(OptionLetter(k));
  } else if (m == kGenerationSampling) {
    b.prompt = RenderTemplate(main, fields);
    for (int k = 0; k < kNumRoles; ++k) {
      b.synonyms.push_back({std::string(kRoles[k])});
    }
  } else {
    const auto descriptions = tpl.Descriptions(kTaskRole);
    for (int k = 0; k < kNumRoles; ++k) {
      std::vector<GenerativePrompt> per;
      for (const auto &d : descriptions) {
        fields["generation_description"] = RenderTemplate(
            d, {{"entity", t.entities[entity].text},
                {"moral_role", std::string(kRoles[k])},
                {"moral_role_definition", std::string(RoleDefinition(k))}});
        per.push_back(RenderGenerative(main, fields));
      }
      b.generative.push_back(std::move(per));
    }
  }
  return b;
}

}  // namespace structprompt
