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

#include "structprompt/scoring.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <regex>
#include <set>

namespace structprompt {

namespace {

ScoreTable NewTable(const DecisionId &decision, std::string strategy,
                    std::size_t num_labels) {
  if (num_labels == 0) {
    throw Error(ErrorCode::kZeroLabels,
                "decision " + decision.ToString() + " has no labels");
  }
  ScoreTable t;
  t.decision = decision;
  t.strategy = std::move(strategy);
  t.scores.assign(num_labels, 0.0);
  t.raw.unnormalized.assign(num_labels, 0.0);
  return t;
}

void AppendNote(ScoreTable &t, const std::string &note) {
  if (!t.raw.note.empty()) t.raw.note += "; ";
  t.raw.note += note;
}

// Finalizes t.scores from t.raw.unnormalized.
void NormalizeInto(ScoreTable &t) {
  t.scores = t.raw.unnormalized;
  if (!NormalizeOrUniform(t.scores)) {
    t.raw.degenerate = true;
    AppendNote(t, std::string(ErrorCodeName(ErrorCode::kAllZero)) +
                      ": uniform fallback");
  }
}

CompletionRequest FirstTokenRequest(const std::string &prompt,
                                    const ScoringOptions &options) {
  return CompletionRequest{.prompt = prompt,
                           .max_tokens = 1,
                           .temperature = options.temperature,
                           .top_k = options.top_k,
                           .n_samples = 1,
                           .want_logprobs = true};
}

CompletionRequest SamplingRequest(const std::string &prompt,
                                  const ScoringOptions &options) {
  if (options.n_samples < 1) {
    throw Error(ErrorCode::kConfigError, "n_samples must be at least 1");
  }
  return CompletionRequest{.prompt = prompt,
                           .max_tokens = options.max_tokens,
                           .temperature = options.temperature,
                           .top_k = options.top_k,
                           .n_samples = options.n_samples};
}

// Lower-case, every non-alphanumeric run collapsed to one space.
std::string Canonical(std::string_view s) {
  std::string out;
  bool space = true;
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      out.push_back(static_cast<char>(std::tolower(u)));
      space = false;
    } else if (!space) {
      out.push_back(' ');
      space = true;
    }
  }
  if (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

}  // namespace

bool IsWhiteBoxStrategy(std::string_view method) {
  return method == kTrueFalse || method == kMultipleChoice ||
         method == kGenerativeClassification;
}

bool NormalizeOrUniform(std::vector<double> &values) {
  double sum = 0;
  for (double v : values) {
    if (!(v >= 0) || !std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidProblem, "score must be finite and >= 0");
    }
    sum += v;
  }
  if (sum <= 0) {
    std::fill(values.begin(), values.end(),
              1.0 / static_cast<double>(values.size()));
    return false;
  }
  for (double &v : values) v /= sum;
  return true;
}

ScoreTable ScoreTrueFalse(const DecisionId &decision, std::string strategy,
                          const std::vector<std::string> &prompts,
                          Backend &backend, const ScoringOptions &options) {
  ScoreTable t = NewTable(decision, std::move(strategy), prompts.size());
  for (std::size_t k = 0; k < prompts.size(); ++k) {
    auto r = Complete(backend, FirstTokenRequest(prompts[k], options));
    t.raw.unnormalized[k] = TokenProb(r, options.true_token);
  }
  NormalizeInto(t);
  return t;
}

ScoreTable ScoreMultipleChoice(const DecisionId &decision,
                               std::string strategy, const std::string &prompt,
                               const std::vector<std::string> &option_tokens,
                               Backend &backend, const ScoringOptions &options) {
  ScoreTable t = NewTable(decision, std::move(strategy), option_tokens.size());
  std::set<std::string> seen;
  for (const auto &tok : option_tokens) {
    if (!seen.insert(NormalizeToken(tok)).second) {
      throw Error(ErrorCode::kOptionCollision,
                  "two labels share answer token '" + tok + "'");
    }
  }
  auto r = Complete(backend, FirstTokenRequest(prompt, options));
  for (std::size_t k = 0; k < option_tokens.size(); ++k) {
    t.raw.unnormalized[k] = TokenProb(r, option_tokens[k]);
  }
  if (options.normalize_multiple_choice) {
    NormalizeInto(t);
  } else {
    t.scores = t.raw.unnormalized;
    AppendNote(t, "unnormalized");
  }
  return t;
}

ScoreTable ScoreGenerativeClassification(
    const DecisionId &decision, std::string strategy,
    const std::vector<std::vector<GenerativePrompt>> &prompts,
    Backend &backend, const ScoringOptions &options) {
  ScoreTable t = NewTable(decision, std::move(strategy), prompts.size());
  t.raw.sample_counts.assign(prompts.size(), 0);
  for (std::size_t k = 0; k < prompts.size(); ++k) {
    if (prompts[k].empty()) {
      throw Error(ErrorCode::kConfigError,
                  "label " + std::to_string(k) + " has no descriptions");
    }
    double total = 0;
    for (const auto &gp : prompts[k]) {
      if (gp.text.empty()) {
        throw Error(ErrorCode::kEmptyText, "text to score is empty");
      }
      CompletionRequest req{.prompt = gp.prefix + gp.text,
                            .max_tokens = 1,
                            .temperature = options.temperature,
                            .top_k = options.top_k,
                            .n_samples = 1,
                            .echo_prompt_logprobs = true};
      auto r = Complete(backend, req);
      // Locate the text by character offsets of the echoed tokens.
      std::size_t offset = 0;
      double loglik = 0;
      for (const auto &tok : *r.prompt_logprobs) {
        offset += tok.token.size();
        if (offset > gp.prefix.size() && tok.logprob) loglik += *tok.logprob;
      }
      if (offset != req.prompt.size()) {
        throw Error(ErrorCode::kMalformedResponse,
                    "echoed tokens do not reproduce the prompt");
      }
      total += loglik;
      ++t.raw.sample_counts[k];
    }
    t.raw.unnormalized[k] = total / static_cast<double>(prompts[k].size());
  }
  const double top =
      *std::max_element(t.raw.unnormalized.begin(), t.raw.unnormalized.end());
  if (!std::isfinite(top)) {
    t.scores.assign(prompts.size(), 1.0 / static_cast<double>(prompts.size()));
    t.raw.degenerate = true;
    AppendNote(t, "no finite log-likelihood: uniform fallback");
    return t;
  }
  double z = 0;
  for (std::size_t k = 0; k < prompts.size(); ++k) {
    t.scores[k] = std::exp(t.raw.unnormalized[k] - top);
    z += t.scores[k];
  }
  for (double &s : t.scores) s /= z;
  return t;
}

LabelParser KeywordParser(std::vector<std::vector<std::string>> synonyms) {
  std::vector<std::vector<std::string>> forms;
  for (const auto &label : synonyms) {
    std::vector<std::string> f;
    for (const auto &s : label) {
      std::string c = Canonical(s);
      if (!c.empty()) f.push_back(" " + c + " ");
    }
    forms.push_back(std::move(f));
  }
  return [forms = std::move(forms)](std::string_view reply) -> std::optional<int> {
    const std::string text = " " + Canonical(reply) + " ";
    std::optional<int> best;
    std::size_t best_pos = std::string::npos, best_len = 0;
    for (std::size_t k = 0; k < forms.size(); ++k) {
      for (const auto &f : forms[k]) {
        const std::size_t pos = text.find(f);
        if (pos == std::string::npos) continue;
        if (pos < best_pos || (pos == best_pos && f.size() > best_len)) {
          best = static_cast<int>(k);
          best_pos = pos;
          best_len = f.size();
        }
      }
    }
    return best;
  };
}

ScoreTable ScoreGenerationSampling(const DecisionId &decision,
                                   std::string strategy,
                                   const std::string &prompt, int num_labels,
                                   const LabelParser &parser, Backend &backend,
                                   const ScoringOptions &options) {
  ScoreTable t = NewTable(decision, std::move(strategy),
                          static_cast<std::size_t>(std::max(num_labels, 0)));
  t.raw.sample_counts.assign(t.scores.size(), 0);
  auto r = Complete(backend, SamplingRequest(prompt, options));
  for (const auto &s : r.samples) {
    auto label = parser(s.text);
    if (!label || *label < 0 || *label >= num_labels) {
      ++t.raw.failed_parses;
      continue;
    }
    ++t.raw.sample_counts[*label];
  }
  const double n = static_cast<double>(r.samples.size());
  for (int k = 0; k < num_labels; ++k) {
    t.raw.unnormalized[k] = t.raw.sample_counts[k] / n;
  }
  t.scores = t.raw.unnormalized;
  if (!NormalizeOrUniform(t.scores)) {
    t.raw.degenerate = true;
    AppendNote(t, std::string(ErrorCodeName(ErrorCode::kAllUnparseable)) +
                      ": uniform fallback");
  }
  return t;
}

std::optional<double> ParseConfidence(std::string_view reply) {
  static const std::regex kLabeled(
      R"(confidence[^0-9a-z\[]{0,6}(?:(?:is|of|level|score|value)\s*[:=]?\s*)?[*"'“(]*\s*([0-9]{1,3}(?:\.[0-9]+)?)\s*(%|/\s*100)?)",
      std::regex::icase);
  static const std::regex kBare(
      R"(^\s*[*"'“]*\s*([0-9]{1,3}(?:\.[0-9]+)?)\s*(%|/\s*100)?\s*[*"'”]*\s*\.?\s*$)");
  const std::string text(reply);
  std::smatch m;
  if (!std::regex_search(text, m, kLabeled) && !std::regex_match(text, m, kBare)) {
    return std::nullopt;
  }
  const double v = std::stod(m[1].str());
  if (v < 0 || v > 100) return std::nullopt;
  return v;
}

ScoreTable ScoreVerbalizedConfidence(const DecisionId &decision,
                                     std::string strategy,
                                     const std::vector<std::string> &prompts,
                                     Backend &backend,
                                     const ScoringOptions &options) {
  ScoreTable t = NewTable(decision, std::move(strategy), prompts.size());
  t.raw.sample_counts.assign(prompts.size(), 0);
  std::vector<std::size_t> empty_labels;
  for (std::size_t k = 0; k < prompts.size(); ++k) {
    auto r = Complete(backend, SamplingRequest(prompts[k], options));
    double sum = 0;
    for (const auto &s : r.samples) {
      auto v = ParseConfidence(s.text);
      if (!v) {
        ++t.raw.failed_parses;
        continue;
      }
      sum += *v;
      ++t.raw.sample_counts[k];
    }
    if (t.raw.sample_counts[k] == 0) {
      empty_labels.push_back(k);
      continue;
    }
    t.raw.unnormalized[k] = sum / t.raw.sample_counts[k] / 100.0;
  }
  if (!empty_labels.empty()) {
    std::string list;
    for (auto k : empty_labels) {
      list += (list.empty() ? "" : ",") + std::to_string(k);
    }
    AppendNote(t, std::string(ErrorCodeName(ErrorCode::kParseFailure)) +
                      ": no parseable reply for labels " + list);
  }
  NormalizeInto(t);
  return t;
}

// ---------------------------------------------------------------------------

void to_json(json &j, const ScoreRecord &r) {
  j = json{{"dataset", r.dataset}, {"fold", r.fold}, {"table", r.table}};
}

void from_json(const json &j, ScoreRecord &r) {
  r.dataset = j.at("dataset").get<std::string>();
  r.fold = j.at("fold").get<int>();
  r.table = j.at("table").get<ScoreTable>();
}

void AppendScoreRecords(const std::filesystem::path &path,
                        const std::vector<ScoreRecord> &records) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  for (const auto &r : records) out << json(r).dump() << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

std::vector<ScoreRecord> ReadScoreRecords(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  // An interrupted writer leaves a final line without its newline.
  in.clear();
  in.seekg(0, std::ios::end);
  const bool complete_last = [&] {
    if (in.tellg() <= 0) return true;
    in.seekg(-1, std::ios::end);
    return in.get() == '\n';
  }();

  using Key = std::tuple<std::string, int, DecisionId, std::string>;
  std::map<Key, std::size_t> index;
  std::vector<ScoreRecord> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    ScoreRecord r;
    try {
      r = json::parse(lines[i]).get<ScoreRecord>();
    } catch (const json::exception &e) {
      if (i + 1 == lines.size() && !complete_last) break;
      throw Error(ErrorCode::kSchemaError,
                  path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    }
    Key key{r.dataset, r.fold, r.table.decision, r.table.strategy};
    auto [it, fresh] = index.emplace(key, out.size());
    if (fresh) {
      out.push_back(std::move(r));
    } else {
      out[it->second] = std::move(r);
    }
  }
  return out;
}

}  // namespace structprompt
