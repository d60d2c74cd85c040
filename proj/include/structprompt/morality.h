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

// Morality frames: one moral foundation per tweet and one moral role per
// mentioned entity. Roles belong to exactly one foundation.

#ifndef STRUCTPROMPT_MORALITY_H_
#define STRUCTPROMPT_MORALITY_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "structprompt/constraints.h"
#include "structprompt/core_model.h"
#include "structprompt/dataset.h"
#include "structprompt/prompts.h"
#include "structprompt/types.h"

namespace structprompt {

inline constexpr int kNumFoundations = 5;
inline constexpr int kNumRoles = 16;

// Label order of the foundation decision.
inline constexpr std::array<std::string_view, kNumFoundations> kFoundations = {
    "Care/Harm", "Fairness/Cheating", "Loyalty/Betrayal",
    "Authority/Subversion", "Purity/Degradation"};

// Label order of a role decision, grouped by foundation.
inline constexpr std::array<std::string_view, kNumRoles> kRoles = {
    "Target of care/harm",
    "Entity causing harm",
    "Entity providing care",
    "Target of fairness/cheating",
    "Entity ensuring fairness",
    "Entity doing cheating",
    "Target of loyalty/betrayal",
    "Entity being loyal",
    "Entity doing betrayal",
    "Justified authority",
    "Justified authority over",
    "Failing authority",
    "Failing authority over",
    "Target of purity/degradation",
    "Entity preserving purity",
    "Entity causing degradation"};

// Foundation index of each role.
inline constexpr std::array<int, kNumRoles> kRoleFoundation = {
    0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3, 3, 4, 4, 4};

const AlignmentTable &MoralityAlignment();

// Case- and spacing-insensitive lookups; nullopt when unknown.
std::optional<int> FoundationIndex(std::string_view name);
std::optional<int> RoleIndex(std::string_view name);

// Definitions shown to the model.
std::string_view FoundationDefinition(int foundation);
std::string_view RoleDefinition(int role);

// ---------------------------------------------------------------------------
// Dataset. One JSON object per line:
//
//   {"id": "t1", "text": "...",
//    "entities": [{"text": "...", "begin": 0, "end": 4, "role": "..."}],
//    "foundation": "Care/Harm", "ideology": "...", "topic": "..."}
//
// ideology and topic are optional; begin/end are byte offsets into text.

struct TweetEntity {
  std::string text;
  int begin = 0;
  int end = 0;
  int role = 0;
  bool operator==(const TweetEntity &) const = default;
};

struct TweetInstance {
  std::string id;
  std::string text;
  std::vector<TweetEntity> entities;
  std::optional<std::string> ideology;
  std::optional<std::string> topic;
  int foundation = 0;
  bool operator==(const TweetInstance &) const = default;
};

void to_json(json &j, const TweetInstance &t);
// Throws kSchemaError (missing fields, no entities, duplicate ids are
// checked by the loader, roles inconsistent with the foundation or repeated
// within a tweet) and kRoleOutOfVocabulary.
void from_json(const json &j, TweetInstance &t);

// Errors cite the line number.
std::vector<TweetInstance> LoadTweets(const std::filesystem::path &path);
void SaveTweets(const std::filesystem::path &path,
                const std::vector<TweetInstance> &tweets);

// ---------------------------------------------------------------------------
// Decisions and constraints.

DecisionId FoundationDecision(const TweetInstance &t);
DecisionId RoleDecision(const TweetInstance &t, int entity);
std::vector<DecisionSpec> MoralityDecisions(const TweetInstance &t);
std::map<DecisionId, int> MoralityGold(const TweetInstance &t);

struct MoralityConstraints {
  bool alignment = true;        // C1
  bool role_uniqueness = true;  // C2
};

std::vector<ConstraintSpec> MoralitySpecs(const TweetInstance &t,
                                          const MoralityConstraints &c = {});

StructuredProblem BuildMoralityProblem(const TweetInstance &t,
                                       const std::vector<ScoreTable> &tables,
                                       const MoralityConstraints &c = {},
                                       bool with_gold = true);

// ---------------------------------------------------------------------------
// Prompts.

// Display position of each foundation in the multiple-choice template,
// whose options are not in label order.
inline constexpr std::array<int, kNumFoundations> kFoundationChoicePosition = {
    0, 1, 4, 2, 3};

struct MoralityPromptRequest {
  std::string method;
  int shots = 0;
  ContextVariant variant = ContextVariant::kPlain;
  // Exemplar pool (usually the fold's training tweets) and the seed that
  // picks exemplars from it.
  const std::vector<TweetInstance> *pool = nullptr;
  std::uint64_t seed = 0;
  const TemplateSet *templates = nullptr;  // Builtin() when null
};

// "Tweet: ..." plus ideology and topic for the context variant. Throws
// kMissingField when the variant needs a value the tweet lacks.
std::string TweetContext(const TweetInstance &t, ContextVariant variant);

PromptBundle FoundationPrompts(const TweetInstance &t,
                               const MoralityPromptRequest &request);
PromptBundle RolePrompts(const TweetInstance &t, int entity,
                         const MoralityPromptRequest &request);

}  // namespace structprompt

#endif  // STRUCTPROMPT_MORALITY_H_
