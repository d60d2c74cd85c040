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

// Confidence elicitation. Each Score* function sends the prompts of one
// decision to a backend and turns the replies into a ScoreTable over the
// decision's labels. Prompts are rendered by the task adapters.

#ifndef STRUCTPROMPT_SCORING_H_
#define STRUCTPROMPT_SCORING_H_

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "structprompt/llm_backend.h"
#include "structprompt/types.h"

namespace structprompt {

inline constexpr const char *kTrueFalse = "true_false";
inline constexpr const char *kMultipleChoice = "multiple_choice";
inline constexpr const char *kGenerativeClassification =
    "generative_classification";
inline constexpr const char *kGenerationSampling = "generation_sampling";
inline constexpr const char *kVerbalizedConfidence = "verbalized_confidence";

bool IsWhiteBoxStrategy(std::string_view method);

struct ScoringOptions {
  double temperature = 0.5;
  int top_k = 5;
  // Samples per prompt for the sampling strategies.
  int n_samples = 10;
  // Generation length for the sampling strategies.
  int max_tokens = 32;
  // Multiple-choice tables are renormalized over the options when set;
  // the raw option probabilities are kept in the provenance either way.
  bool normalize_multiple_choice = true;
  std::string true_token = "true";
};

// One prompt per label; w_c is p(true | x_c) renormalized over labels.
ScoreTable ScoreTrueFalse(const DecisionId &decision, std::string strategy,
                          const std::vector<std::string> &prompts,
                          Backend &backend, const ScoringOptions &options);

// A single prompt listing the options; `option_tokens[k]` is the answer
// token of label k (usually a letter). Throws kOptionCollision when two
// labels normalize to the same token.
ScoreTable ScoreMultipleChoice(const DecisionId &decision,
                               std::string strategy, const std::string &prompt,
                               const std::vector<std::string> &option_tokens,
                               Backend &backend, const ScoringOptions &options);

// The backend is asked for the log-probabilities of `prefix + text`; only
// the tokens overlapping `text` are summed.
struct GenerativePrompt {
  std::string prefix;
  std::string text;
};

// `prompts[k]` holds one GenerativePrompt per label description of label k.
// The raw score of a label is the mean over descriptions of the sequence
// log-likelihood of the text; the table is the softmax of the raw scores.
ScoreTable ScoreGenerativeClassification(
    const DecisionId &decision, std::string strategy,
    const std::vector<std::vector<GenerativePrompt>> &prompts,
    Backend &backend, const ScoringOptions &options);

// Maps one generated reply to a label, or nullopt when unparseable.
using LabelParser = std::function<std::optional<int>(std::string_view)>;

// Matches label surface forms (case-insensitive, punctuation-insensitive);
// when several match, the one starting earliest wins, then the longest.
LabelParser KeywordParser(std::vector<std::vector<std::string>> synonyms);

// Samples n replies to one prompt; w_k is the share of parseable replies
// mapped to label k. Unparseable replies are counted in the provenance.
ScoreTable ScoreGenerationSampling(const DecisionId &decision,
                                   std::string strategy,
                                   const std::string &prompt, int num_labels,
                                   const LabelParser &parser, Backend &backend,
                                   const ScoringOptions &options);

// Extracts the 0-100 value of a "Confidence: N" reply. Tolerates case,
// markdown emphasis, quotes, "%" and "/100" suffixes, decimals and bare
// numbers; rejects values outside [0, 100].
std::optional<double> ParseConfidence(std::string_view reply);

// One prompt per label, n samples each; the raw label value is the mean
// parsed confidence / 100 and the table normalizes the raw values.
ScoreTable ScoreVerbalizedConfidence(const DecisionId &decision,
                                     std::string strategy,
                                     const std::vector<std::string> &prompts,
                                     Backend &backend,
                                     const ScoringOptions &options);

// Normalizes non-negative values in place; an all-zero vector becomes
// uniform and the return value is false.
bool NormalizeOrUniform(std::vector<double> &values);

// ---------------------------------------------------------------------------

// ScoreTables persisted one per line, keyed by (dataset, fold, decision,
// strategy).
struct ScoreRecord {
  std::string dataset;
  int fold = 0;
  ScoreTable table;

  bool operator==(const ScoreRecord &) const = default;
};

void to_json(json &j, const ScoreRecord &r);
void from_json(const json &j, ScoreRecord &r);

void AppendScoreRecords(const std::filesystem::path &path,
                        const std::vector<ScoreRecord> &records);
// Later lines win on duplicate keys. A truncated final line (from an
// interrupted run) is ignored; any other malformed line raises kSchemaError.
std::vector<ScoreRecord> ReadScoreRecords(const std::filesystem::path &path);

}  // namespace structprompt

#endif  // STRUCTPROMPT_SCORING_H_
