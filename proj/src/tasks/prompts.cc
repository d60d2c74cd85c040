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

#include "structprompt/prompts.h"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <regex>
#include <sstream>

#include "structprompt/dataset.h"
#include "structprompt/error.h"

namespace structprompt {

namespace internal {
const std::vector<std::pair<std::string_view, std::string_view>> &
EmbeddedTemplateFiles();
}  // namespace internal

namespace {

constexpr std::string_view kContextSuffix = "+context";

constexpr std::array<const char *, 5> kMethods = {
    kTrueFalse, kMultipleChoice, kGenerativeClassification,
    kGenerationSampling, kVerbalizedConfidence};

bool KnownMethod(std::string_view m) {
  return std::find(kMethods.begin(), kMethods.end(), m) != kMethods.end();
}

}  // namespace

std::string StrategyId(std::string_view method, ContextVariant variant) {
  std::string id(method);
  if (variant == ContextVariant::kIdeologyTopic) id += kContextSuffix;
  return id;
}

std::pair<std::string, ContextVariant> ParseStrategyId(std::string_view id) {
  ContextVariant variant = ContextVariant::kPlain;
  if (id.size() > kContextSuffix.size() &&
      id.substr(id.size() - kContextSuffix.size()) == kContextSuffix) {
    variant = ContextVariant::kIdeologyTopic;
    id.remove_suffix(kContextSuffix.size());
  }
  if (!KnownMethod(id)) {
    throw Error(ErrorCode::kConfigError,
                "unknown prompting method '" + std::string(id) + "'");
  }
  return {std::string(id), variant};
}

std::string RenderTemplate(std::string_view text,
                           const std::map<std::string, std::string> &fields) {
  std::string out;
  out.reserve(text.size() + 256);
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if ((c == '{' || c == '}') && i + 1 < text.size() && text[i + 1] == c) {
      out.push_back(c);
      ++i;
      continue;
    }
    if (c != '{') {
      out.push_back(c);
      continue;
    }
    const auto close = text.find('}', i);
    if (close == std::string_view::npos) {
      throw Error(ErrorCode::kConfigError, "unterminated placeholder");
    }
    const std::string name(text.substr(i + 1, close - i - 1));
    auto it = fields.find(name);
    if (it == fields.end()) {
      throw Error(ErrorCode::kMissingField,
                  "no value for template field {" + name + "}");
    }
    out += it->second;
    i = close;
  }
  return out;
}

const TemplateSet &TemplateSet::Builtin() {
  static const TemplateSet set = [] {
    TemplateSet s;
    for (const auto &[task, text] : internal::EmbeddedTemplateFiles()) {
      s.Parse(std::string(task), text);
    }
    return s;
  }();
  return set;
}

TemplateSet TemplateSet::FromDirectory(const std::filesystem::path &dir) {
  TemplateSet set = Builtin();
  for (const char *task : {kTaskCoref, kTaskFoundation, kTaskRole}) {
    const auto path = dir / (std::string(task) + ".txt");
    if (!std::filesystem::exists(path)) continue;
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    set.Parse(task, ss.str());
  }
  return set;
}

void TemplateSet::Parse(const std::string &task, std::string_view text) {
  static const std::regex version_re(R"(version:\s*(\d+))");
  std::string section;
  std::vector<std::string> lines;
  auto flush = [&] {
    if (section.empty()) return;
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    std::string body;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (i > 0) body += '\n';
      body += lines[i];
    }
    sections_[{task, section}] = std::move(body);
    lines.clear();
  };
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(pos, end - pos));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = end + 1;
    if (line.rfind("### ", 0) == 0) {
      flush();
      section = line.substr(4);
      continue;
    }
    if (section.empty()) {
      std::smatch m;
      if (std::regex_search(line, m, version_re)) {
        versions_[task] = std::stoi(m[1]);
      }
      continue;
    }
    lines.push_back(std::move(line));
  }
  flush();
}

bool TemplateSet::Has(const std::string &task,
                      const std::string &section) const {
  return sections_.count({task, section}) > 0;
}

const std::string &TemplateSet::Section(const std::string &task,
                                        const std::string &section) const {
  auto it = sections_.find({task, section});
  if (it == sections_.end()) {
    throw Error(ErrorCode::kConfigError,
                "no template " + task + "." + section);
  }
  return it->second;
}

std::vector<std::string> TemplateSet::Descriptions(
    const std::string &task) const {
  std::vector<std::string> out;
  std::istringstream in(Section(task, "descriptions"));
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

int TemplateSet::Version(const std::string &task) const {
  auto it = versions_.find(task);
  return it == versions_.end() ? 0 : it->second;
}

ScoreTable ScoreBundle(const DecisionId &decision, const PromptBundle &bundle,
                       int num_labels, Backend &backend,
                       const ScoringOptions &options) {
  const std::string &m = bundle.method;
  if (m == kTrueFalse) {
    return ScoreTrueFalse(decision, bundle.strategy, bundle.per_label, backend,
                          options);
  }
  if (m == kMultipleChoice) {
    return ScoreMultipleChoice(decision, bundle.strategy, bundle.prompt,
                               bundle.option_tokens, backend, options);
  }
  if (m == kGenerativeClassification) {
    return ScoreGenerativeClassification(decision, bundle.strategy,
                                         bundle.generative, backend, options);
  }
  if (m == kGenerationSampling) {
    return ScoreGenerationSampling(decision, bundle.strategy, bundle.prompt,
                                   num_labels, KeywordParser(bundle.synonyms),
                                   backend, options);
  }
  if (m == kVerbalizedConfidence) {
    return ScoreVerbalizedConfidence(decision, bundle.strategy,
                                     bundle.per_label, backend, options);
  }
  throw Error(ErrorCode::kConfigError, "unknown prompting method " + m);
}

std::vector<std::string> BundlePrompts(const PromptBundle &bundle) {
  if (bundle.method == kTrueFalse || bundle.method == kVerbalizedConfidence) {
    return bundle.per_label;
  }
  if (bundle.method == kGenerativeClassification) {
    std::vector<std::string> out;
    for (const auto &label : bundle.generative) {
      for (const auto &p : label) out.push_back(p.prefix + p.text);
    }
    return out;
  }
  return {bundle.prompt};
}

void CheckShots(std::string_view method, int shots) {
  const bool zero_shot_only = method == kGenerativeClassification ||
                              method == kVerbalizedConfidence;
  if (shots == 0 || (!zero_shot_only && (shots == 2 || shots == 5))) return;
  throw Error(ErrorCode::kConfigError,
              std::string(method) + " does not support " +
                  std::to_string(shots) + " shots");
}

std::vector<std::size_t> SelectShots(std::size_t pool_size, int count,
                                     std::uint64_t seed,
                                     const std::vector<std::size_t> &exclude) {
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < pool_size; ++i) {
    if (std::find(exclude.begin(), exclude.end(), i) == exclude.end()) {
      candidates.push_back(i);
    }
  }
  if (static_cast<int>(candidates.size()) < count) {
    throw Error(ErrorCode::kConfigError,
                "shot pool has " + std::to_string(candidates.size()) +
                    " items, need " + std::to_string(count));
  }
  StableShuffle(candidates, seed);
  candidates.resize(count);
  return candidates;
}

GenerativePrompt RenderGenerative(std::string_view text,
                                  std::map<std::string, std::string> fields) {
  constexpr std::string_view kMarker = "{generated}";
  const auto at = text.find(kMarker);
  if (at == std::string_view::npos) {
    throw Error(ErrorCode::kConfigError,
                "generative template without a {generated} marker");
  }
  fields.erase("generated");
  return GenerativePrompt{RenderTemplate(text.substr(0, at), fields),
                          RenderTemplate(text.substr(at + kMarker.size()),
                                         fields)};
}

std::string OptionLetter(int position) {
  return std::string(1, static_cast<char>('A' + position));
}

}  // namespace structprompt
