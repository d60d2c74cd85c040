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

// Prompt templates and rendered prompt bundles.
//
// Templates live in text assets (templates/<task>.txt) made of sections:
//
//   ### true_false
//   ... text with {field} placeholders ...
//   ### true_false.shot
//   ...
//   ### descriptions
//   one generation description per line
//
// The built-in set is compiled into the library; a directory with the same
// file names overrides it.

#ifndef STRUCTPROMPT_PROMPTS_H_
#define STRUCTPROMPT_PROMPTS_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "structprompt/llm_backend.h"
#include "structprompt/scoring.h"
#include "structprompt/types.h"

namespace structprompt {

inline constexpr const char *kTaskCoref = "coref";
inline constexpr const char *kTaskFoundation = "foundation";
inline constexpr const char *kTaskRole = "role";

enum class ContextVariant : std::uint8_t { kPlain, kIdeologyTopic };

// Strategy id stored in score tables: the method name, with "+context"
// appended for the ideology/topic variant.
std::string StrategyId(std::string_view method, ContextVariant variant);
// Inverse of StrategyId. Throws kConfigError for unknown methods.
std::pair<std::string, ContextVariant> ParseStrategyId(std::string_view id);

// Replaces every {name} with fields.at(name); "{{" and "}}" are literal
// braces. Throws kMissingField for a placeholder without a value.
std::string RenderTemplate(std::string_view text,
                           const std::map<std::string, std::string> &fields);

class TemplateSet {
 public:
  static const TemplateSet &Builtin();
  // Reads <dir>/{coref,foundation,role}.txt; missing files fall back to the
  // built-in text.
  static TemplateSet FromDirectory(const std::filesystem::path &dir);
  // Adds or replaces the sections of one task file.
  void Parse(const std::string &task, std::string_view text);

  // Throws kConfigError when the section does not exist.
  const std::string &Section(const std::string &task,
                             const std::string &section) const;
  bool Has(const std::string &task, const std::string &section) const;
  std::vector<std::string> Descriptions(const std::string &task) const;
  // Version declared in the file header ("version: N"), 0 when absent.
  int Version(const std::string &task) const;

 private:
  std::map<std::pair<std::string, std::string>, std::string> sections_;
  std::map<std::string, int> versions_;
};

// Everything needed to score one decision with one strategy. Which members
// are used depends on the method.
struct PromptBundle {
  std::string template_id;  // "<task>.<method>"
  std::string method;
  std::string strategy;  // StrategyId(method, variant)
  int shots = 0;
  ContextVariant variant = ContextVariant::kPlain;
  // true/false and verbalized confidence: one prompt per label.
  std::vector<std::string> per_label;
  // multiple choice and generation sampling.
  std::string prompt;
  // multiple choice: answer token of each label.
  std::vector<std::string> option_tokens;
  // generation sampling: surface forms of each label.
  std::vector<std::vector<std::string>> synonyms;
  // generative classification: one prompt per (label, description).
  std::vector<std::vector<GenerativePrompt>> generative;
};

// Dispatches to the scoring function of the bundle's method.
ScoreTable ScoreBundle(const DecisionId &decision, const PromptBundle &bundle,
                       int num_labels, Backend &backend,
                       const ScoringOptions &options);

// Every prompt text the bundle would send, in send order (generative
// prompts as prefix + text). Used to script mock backends.
std::vector<std::string> BundlePrompts(const PromptBundle &bundle);

// Shots allowed by a method: {0, 2, 5}, or {0} for the zero-shot methods.
// Throws kConfigError otherwise.
void CheckShots(std::string_view method, int shots);

// `count` distinct items from `pool` (size n) excluding `exclude`, drawn
// with StableShuffle under `seed`. Throws kConfigError when the pool is too
// small.
std::vector<std::size_t> SelectShots(std::size_t pool_size, int count,
                                     std::uint64_t seed,
                                     const std::vector<std::size_t> &exclude);

// Renders a generative template as {prefix, scored text}, split where the
// {generated} marker sits. Throws kConfigError when the marker is absent.
GenerativePrompt RenderGenerative(std::string_view text,
                                  std::map<std::string, std::string> fields);

// Option letter for display position i ("A", "B", ...).
std::string OptionLetter(int position);

}  // namespace structprompt

#endif  // STRUCTPROMPT_PROMPTS_H_
