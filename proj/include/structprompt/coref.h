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

// Pairwise coreference: one binary decision (coreferent / distinct) per
// candidate mention pair, tied together by transitivity.

#ifndef STRUCTPROMPT_COREF_H_
#define STRUCTPROMPT_COREF_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "structprompt/constraints.h"
#include "structprompt/core_model.h"
#include "structprompt/prompts.h"
#include "structprompt/types.h"

namespace structprompt {

inline constexpr int kCoreferent = 0;
inline constexpr int kDistinct = 1;
inline constexpr std::array<std::string_view, 2> kCorefLabels = {"coreferent",
                                                                 "distinct"};

struct Mention {
  std::string text;
  int sentence = 0;
  // Byte offsets into the sentence text.
  int begin = 0;
  int end = 0;
  bool operator==(const Mention &) const = default;
};

// JSONL schema, one document per line:
//
//   {"id": "d1", "sentences": ["...", ...],
//    "mentions": [{"text": "...", "sentence": 0, "begin": 0, "end": 3}],
//    "clusters": [[0, 2], [1]],
//    "pairs": [[0, 1], [0, 2], [1, 2]]}
//
// "pairs" is optional and defaults to every mention pair.
struct CorefDocument {
  std::string id;
  std::vector<std::string> sentences;
  std::vector<Mention> mentions;
  std::vector<std::vector<int>> clusters;
  std::vector<std::pair<int, int>> pairs;
  bool operator==(const CorefDocument &) const = default;
};

void to_json(json &j, const CorefDocument &d);
void from_json(const json &j, CorefDocument &d);

// Throws kSchemaError when clusters do not partition the mentions or a
// mention is out of range, and kPairIndexError for a bad candidate pair.
void ValidateCorefDocument(const CorefDocument &d);

// Every pair (i, j), i < j, with j - i <= window; window 0 means no limit.
std::vector<std::pair<int, int>> CandidatePairs(int num_mentions,
                                                int window = 0);

std::vector<CorefDocument> LoadCorefDocuments(
    const std::filesystem::path &path);
void SaveCorefDocuments(const std::filesystem::path &path,
                        const std::vector<CorefDocument> &docs);

// Reads the CoNLL-2012 column format (word in column 4, coreference chains
// in the last column). Each "#begin document" part becomes one document
// with exhaustive candidate pairs, thinned by `window` when positive.
std::vector<CorefDocument> ReadConll2012(const std::filesystem::path &path,
                                         int window = 0);

DecisionId PairDecisionId(const CorefDocument &d, int a, int b);
// Cluster index of every mention.
std::vector<int> ClusterOf(const CorefDocument &d);
std::map<DecisionId, int> CorefGold(const CorefDocument &d);

struct CorefConstraints {
  bool transitivity = true;
};

// One decision per candidate pair plus transitivity over every triple whose
// three pairs are candidates. Throws kPairIndexError.
StructuredProblem BuildCorefProblem(const CorefDocument &d,
                                    const std::vector<ScoreTable> &tables,
                                    const CorefConstraints &c = {},
                                    bool with_gold = true);

struct Clustering {
  std::vector<std::vector<int>> clusters;
  // Transitivity violations of the assignment; clusters are still the
  // connected components of the coreferent pairs.
  int violations = 0;
  bool infeasible() const { return violations > 0; }
};

Clustering ClusterFromAssignment(const CorefDocument &d,
                                 const StructuredProblem &problem,
                                 const Assignment &a);

// ---------------------------------------------------------------------------
// Prompts.

// The sentence of each mention of a pair and the mentions themselves; the
// unit shown to the model and used for exemplars.
struct CorefPairView {
  std::string entity1, sent1, entity2, sent2;
  int gold = kDistinct;
};

CorefPairView ViewPair(const CorefDocument &d, int a, int b);

struct CorefPromptRequest {
  std::string method;
  int shots = 0;
  // Exemplar pool, usually every candidate pair of the training documents.
  const std::vector<CorefPairView> *pool = nullptr;
  std::uint64_t seed = 0;
  const TemplateSet *templates = nullptr;
};

std::vector<CorefPairView> CorefShotPool(const std::vector<CorefDocument> &docs);

PromptBundle CorefPrompts(const CorefDocument &d, int a, int b,
                          const CorefPromptRequest &request);

}  // namespace structprompt

#endif  // STRUCTPROMPT_COREF_H_
