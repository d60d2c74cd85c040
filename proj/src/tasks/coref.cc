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

#include "structprompt/coref.h"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "structprompt/dataset.h"
#include "structprompt/error.h"

namespace structprompt {

namespace {

int Find(std::vector<int> &parent, int x) {
  while (parent[x] != x) x = parent[x] = parent[parent[x]];
  return x;
}

}  // namespace

void to_json(json &j, const CorefDocument &d) {
  json mentions = json::array();
  for (const auto &m : d.mentions) {
    mentions.push_back({{"text", m.text},
                        {"sentence", m.sentence},
                        {"begin", m.begin},
                        {"end", m.end}});
  }
  json pairs = json::array();
  for (const auto &[a, b] : d.pairs) pairs.push_back({a, b});
  j = json{{"id", d.id},
           {"sentences", d.sentences},
           {"mentions", mentions},
           {"clusters", d.clusters},
           {"pairs", pairs}};
}

void from_json(const json &j, CorefDocument &d) {
  d = CorefDocument{};
  try {
    d.id = j.at("id").get<std::string>();
    d.sentences = j.at("sentences").get<std::vector<std::string>>();
    for (const auto &m : j.at("mentions")) {
      d.mentions.push_back(Mention{m.at("text").get<std::string>(),
                                   m.at("sentence").get<int>(),
                                   m.value("begin", 0), m.value("end", 0)});
    }
    d.clusters = j.at("clusters").get<std::vector<std::vector<int>>>();
    if (j.contains("pairs")) {
      for (const auto &p : j["pairs"]) {
        if (!p.is_array() || p.size() != 2) {
          throw Error(ErrorCode::kPairIndexError, "pair is not [a, b]");
        }
        d.pairs.emplace_back(p[0].get<int>(), p[1].get<int>());
      }
    } else {
      d.pairs = CandidatePairs(static_cast<int>(d.mentions.size()));
    }
  } catch (const json::exception &e) {
    throw Error(ErrorCode::kSchemaError, e.what());
  }
  ValidateCorefDocument(d);
}

void ValidateCorefDocument(const CorefDocument &d) {
  const int n = static_cast<int>(d.mentions.size());
  for (const auto &m : d.mentions) {
    if (m.sentence < 0 || m.sentence >= static_cast<int>(d.sentences.size())) {
      throw Error(ErrorCode::kSchemaError,
                  "document " + d.id + ": mention sentence out of range");
    }
  }
  std::vector<int> count(n, 0);
  for (const auto &c : d.clusters) {
    if (c.empty()) {
      throw Error(ErrorCode::kSchemaError,
                  "document " + d.id + ": empty cluster");
    }
    for (int m : c) {
      if (m < 0 || m >= n) {
        throw Error(ErrorCode::kSchemaError,
                    "document " + d.id + ": cluster mentions out of range");
      }
      ++count[m];
    }
  }
  for (int m = 0; m < n; ++m) {
    if (count[m] != 1) {
      throw Error(ErrorCode::kSchemaError,
                  "document " + d.id + ": clusters do not partition mention " +
                      std::to_string(m));
    }
  }
  std::set<std::pair<int, int>> seen;
  for (const auto &[a, b] : d.pairs) {
    if (a < 0 || b < 0 || a >= n || b >= n || a >= b) {
      throw Error(ErrorCode::kPairIndexError,
                  "document " + d.id + ": bad pair (" + std::to_string(a) +
                      ", " + std::to_string(b) + ")");
    }
    if (!seen.insert({a, b}).second) {
      throw Error(ErrorCode::kPairIndexError,
                  "document " + d.id + ": repeated pair");
    }
  }
}

std::vector<std::pair<int, int>> CandidatePairs(int num_mentions, int window) {
  std::vector<std::pair<int, int>> out;
  for (int a = 0; a < num_mentions; ++a) {
    for (int b = a + 1; b < num_mentions; ++b) {
      if (window > 0 && b - a > window) break;
      out.emplace_back(a, b);
    }
  }
  return out;
}

std::vector<CorefDocument> LoadCorefDocuments(
    const std::filesystem::path &path) {
  std::vector<CorefDocument> out;
  std::set<std::string> ids;
  ForEachJsonLine(path, [&](const json &j, int line) {
    try {
      auto d = j.get<CorefDocument>();
      if (!ids.insert(d.id).second) {
        throw Error(ErrorCode::kSchemaError, "duplicate document id " + d.id);
      }
      out.push_back(std::move(d));
    } catch (const Error &e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(line) +
                                ": " + e.what());
    }
  });
  return out;
}

void SaveCorefDocuments(const std::filesystem::path &path,
                        const std::vector<CorefDocument> &docs) {
  std::vector<json> lines(docs.begin(), docs.end());
  WriteJsonLines(path, lines);
}

std::vector<CorefDocument> ReadConll2012(const std::filesystem::path &path,
                                         int window) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());

  struct Span {
    int sentence, first, last, chain;
  };
  std::vector<CorefDocument> docs;
  CorefDocument doc;
  std::vector<std::vector<std::string>> sentences;
  std::vector<std::string> tokens;
  std::vector<Span> spans;
  std::map<int, std::vector<std::pair<int, int>>> open;  // chain -> starts
  bool in_doc = false;
  int line_no = 0;

  auto bad = [&](const std::string &what) {
    return Error(ErrorCode::kSchemaError, path.string() + ":" +
                                              std::to_string(line_no) + ": " +
                                              what);
  };
  auto end_sentence = [&] {
    if (tokens.empty()) return;
    sentences.push_back(std::move(tokens));
    tokens.clear();
  };
  auto finish = [&] {
    end_sentence();
    if (!open.empty()) {
      for (const auto &[chain, starts] : open) {
        if (!starts.empty()) throw bad("unclosed mention in chain " +
                                       std::to_string(chain));
      }
    }
    // Sentence text and token byte offsets.
    std::vector<std::vector<int>> starts(sentences.size());
    for (std::size_t s = 0; s < sentences.size(); ++s) {
      std::string text;
      for (const auto &t : sentences[s]) {
        if (!text.empty()) text += ' ';
        starts[s].push_back(static_cast<int>(text.size()));
        text += t;
      }
      doc.sentences.push_back(std::move(text));
    }
    std::sort(spans.begin(), spans.end(), [](const Span &x, const Span &y) {
      return std::tie(x.sentence, x.first, x.last, x.chain) <
             std::tie(y.sentence, y.first, y.last, y.chain);
    });
    std::map<int, std::size_t> cluster_of_chain;
    for (const auto &sp : spans) {
      const int begin = starts[sp.sentence][sp.first];
      const int end = starts[sp.sentence][sp.last] +
                      static_cast<int>(sentences[sp.sentence][sp.last].size());
      const int index = static_cast<int>(doc.mentions.size());
      doc.mentions.push_back(Mention{
          doc.sentences[sp.sentence].substr(begin, end - begin), sp.sentence,
          begin, end});
      auto [it, fresh] =
          cluster_of_chain.try_emplace(sp.chain, doc.clusters.size());
      if (fresh) doc.clusters.emplace_back();
      doc.clusters[it->second].push_back(index);
    }
    doc.pairs = CandidatePairs(static_cast<int>(doc.mentions.size()), window);
    ValidateCorefDocument(doc);
    docs.push_back(std::move(doc));
    doc = CorefDocument{};
    sentences.clear();
    spans.clear();
    open.clear();
  };

  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("#begin document", 0) == 0) {
      if (in_doc) throw bad("nested #begin document");
      in_doc = true;
      std::string name = line.substr(15);
      name.erase(0, name.find_first_not_of(" ("));
      const auto close = name.find(')');
      std::string part;
      const auto p = line.find("part ");
      if (p != std::string::npos) part = line.substr(p + 5);
      doc.id = name.substr(0, close) + (part.empty() ? "" : "/" + part);
      continue;
    }
    if (line.rfind("#end document", 0) == 0) {
      if (!in_doc) throw bad("#end document without #begin");
      finish();
      in_doc = false;
      continue;
    }
    if (line.empty() || line.find_first_not_of(" \t") == std::string::npos) {
      end_sentence();
      continue;
    }
    if (!in_doc || line[0] == '#') continue;
    std::istringstream cols(line);
    std::vector<std::string> c;
    for (std::string x; cols >> x;) c.push_back(x);
    if (c.size() < 5) throw bad("expected at least 5 columns");
    const int sentence = static_cast<int>(sentences.size());
    const int token = static_cast<int>(tokens.size());
    tokens.push_back(c[3]);
    const std::string &chains = c.back();
    if (chains == "-") continue;
    std::size_t i = 0;
    while (i < chains.size()) {
      if (chains[i] == '|') {
        ++i;
        continue;
      }
      const bool opens = chains[i] == '(';
      if (opens) ++i;
      std::size_t j = i;
      while (j < chains.size() && std::isdigit(static_cast<unsigned char>(chains[j]))) ++j;
      if (j == i) throw bad("bad coreference column '" + chains + "'");
      const int chain = std::stoi(chains.substr(i, j - i));
      const bool closes = j < chains.size() && chains[j] == ')';
      if (closes) ++j;
      if (opens && closes) {
        spans.push_back({sentence, token, token, chain});
      } else if (opens) {
        open[chain].push_back({sentence, token});
      } else if (closes) {
        auto &stack = open[chain];
        if (stack.empty()) throw bad("mention closes unopened chain");
        const auto [s, first] = stack.back();
        stack.pop_back();
        if (s != sentence) throw bad("mention crosses a sentence boundary");
        spans.push_back({sentence, first, token, chain});
        if (stack.empty()) open.erase(chain);
      } else {
        throw bad("bad coreference column '" + chains + "'");
      }
      i = j;
    }
  }
  if (in_doc) throw bad("missing #end document");
  return docs;
}

DecisionId PairDecisionId(const CorefDocument &d, int a, int b) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "m%04d-m%04d", a, b);
  return DecisionId{d.id, kCorefPair, buf};
}

std::vector<int> ClusterOf(const CorefDocument &d) {
  std::vector<int> out(d.mentions.size(), -1);
  for (std::size_t c = 0; c < d.clusters.size(); ++c) {
    for (int m : d.clusters[c]) out[m] = static_cast<int>(c);
  }
  return out;
}

std::map<DecisionId, int> CorefGold(const CorefDocument &d) {
  const auto cluster = ClusterOf(d);
  std::map<DecisionId, int> gold;
  for (const auto &[a, b] : d.pairs) {
    gold[PairDecisionId(d, a, b)] =
        cluster[a] == cluster[b] ? kCoreferent : kDistinct;
  }
  return gold;
}

StructuredProblem BuildCorefProblem(const CorefDocument &d,
                                    const std::vector<ScoreTable> &tables,
                                    const CorefConstraints &c,
                                    bool with_gold) {
  ValidateCorefDocument(d);
  std::vector<DecisionSpec> decisions;
  TransitivitySpec trans;
  trans.positive_label = kCoreferent;
  for (const auto &[a, b] : d.pairs) {
    const auto id = PairDecisionId(d, a, b);
    decisions.push_back({id, 2});
    trans.pairs.push_back(PairDecision{a, b, id});
  }
  std::set<DecisionId> known;
  for (const auto &dec : decisions) known.insert(dec.id);
  for (const auto &t : tables) {
    if (!known.count(t.decision)) {
      throw Error(ErrorCode::kPairIndexError,
                  "score table for unknown pair " + t.decision.ToString());
    }
  }
  std::vector<ConstraintSpec> specs;
  if (c.transitivity) specs.push_back(std::move(trans));
  std::optional<std::map<DecisionId, int>> gold;
  if (with_gold) gold = CorefGold(d);
  return BuildProblem(decisions, tables, specs, gold);
}

Clustering ClusterFromAssignment(const CorefDocument &d,
                                 const StructuredProblem &problem,
                                 const Assignment &a) {
  const int n = static_cast<int>(d.mentions.size());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::set<std::pair<int, int>> positive;
  const auto labels = problem.LabelsFromAssignment(a);
  for (const auto &[x, y] : d.pairs) {
    const auto j = problem.DecisionIndex(PairDecisionId(d, x, y));
    if (!j) {
      throw Error(ErrorCode::kPairIndexError,
                  "problem lacks the decision for a candidate pair");
    }
    if (labels[*j] == kCoreferent) {
      positive.insert({x, y});
      parent[Find(parent, x)] = Find(parent, y);
    }
  }
  Clustering out;
  std::set<std::pair<int, int>> candidates(d.pairs.begin(), d.pairs.end());
  auto pos = [&](int x, int y) {
    return positive.count({std::min(x, y), std::max(x, y)}) > 0;
  };
  auto cand = [&](int x, int y) {
    return candidates.count({std::min(x, y), std::max(x, y)}) > 0;
  };
  // Each triple fully covered by candidates, all three rotations.
  for (int x = 0; x < n; ++x) {
    for (int y = x + 1; y < n; ++y) {
      if (!cand(x, y)) continue;
      for (int z = y + 1; z < n; ++z) {
        if (!cand(x, z) || !cand(y, z)) continue;
        const int on = pos(x, y) + pos(x, z) + pos(y, z);
        out.violations += on == 2;
      }
    }
  }
  std::map<int, std::vector<int>> groups;
  for (int m = 0; m < n; ++m) groups[Find(parent, m)].push_back(m);
  for (auto &[root, members] : groups) out.clusters.push_back(members);
  std::sort(out.clusters.begin(), out.clusters.end());
  return out;
}

CorefPairView ViewPair(const CorefDocument &d, int a, int b) {
  const auto cluster = ClusterOf(d);
  const Mention &x = d.mentions.at(a);
  const Mention &y = d.mentions.at(b);
  return CorefPairView{x.text, d.sentences.at(x.sentence), y.text,
                       d.sentences.at(y.sentence),
                       cluster[a] == cluster[b] ? kCoreferent : kDistinct};
}

std::vector<CorefPairView> CorefShotPool(
    const std::vector<CorefDocument> &docs) {
  std::vector<CorefPairView> pool;
  for (const auto &d : docs) {
    for (const auto &[a, b] : d.pairs) pool.push_back(ViewPair(d, a, b));
  }
  return pool;
}

PromptBundle CorefPrompts(const CorefDocument &d, int a, int b,
                          const CorefPromptRequest &r) {
  const TemplateSet &tpl =
      r.templates != nullptr ? *r.templates : TemplateSet::Builtin();
  const std::string &m = r.method;
  CheckShots(m, r.shots);
  const CorefPairView v = ViewPair(d, a, b);
  PromptBundle bundle;
  bundle.template_id = std::string(kTaskCoref) + "." + m;
  bundle.method = m;
  bundle.strategy = StrategyId(m, ContextVariant::kPlain);
  bundle.shots = r.shots;

  std::map<std::string, std::string> fields{{"entity1", v.entity1},
                                            {"sent1", v.sent1},
                                            {"entity2", v.entity2},
                                            {"sent2", v.sent2},
                                            {"examples", ""}};
  if (r.shots > 0) {
    if (r.pool == nullptr) {
      throw Error(ErrorCode::kConfigError, "few-shot prompts need a pool");
    }
    const std::string key = "shots/coref/" + d.id + "/" +
                            PairDecisionId(d, a, b).locus;
    const auto picks =
        SelectShots(r.pool->size(), r.shots, DeriveSeed(r.seed, key), {});
    const std::string &shot_tpl = tpl.Section(kTaskCoref, m + ".shot");
    std::string examples;
    for (std::size_t i = 0; i < picks.size(); ++i) {
      const CorefPairView &ex = (*r.pool)[picks[i]];
      std::map<std::string, std::string> f{{"entity1", ex.entity1},
                                           {"sent1", ex.sent1},
                                           {"entity2", ex.entity2},
                                           {"sent2", ex.sent2}};
      if (m == kTrueFalse) {
        const bool positive = i % 2 == 0;
        const int label = positive ? ex.gold : 1 - ex.gold;
        f["label"] = std::string(kCorefLabels[label]);
        f["answer"] = positive ? "true" : "false";
      } else if (m == kMultipleChoice) {
        f["answer"] = OptionLetter(ex.gold);
      } else {
        f["answer"] = std::string(kCorefLabels[ex.gold]);
      }
      examples += RenderTemplate(shot_tpl, f) + "\n\n";
    }
    fields["examples"] = examples;
  }

  const std::string &main = tpl.Section(kTaskCoref, m);
  if (m == kTrueFalse || m == kVerbalizedConfidence) {
    for (const auto label : kCorefLabels) {
      fields["label"] = std::string(label);
      bundle.per_label.push_back(RenderTemplate(main, fields));
    }
  } else if (m == kMultipleChoice) {
    bundle.prompt = RenderTemplate(main, fields);
    bundle.option_tokens = {OptionLetter(0), OptionLetter(1)};
  } else if (m == kGenerationSampling) {
    bundle.prompt = RenderTemplate(main, fields);
    bundle.synonyms = {{"coreferent", "coreference", "same entity"},
                       {"distinct", "different entities", "not coreferent"}};
  } else {
    const auto descriptions = tpl.Descriptions(kTaskCoref);
    for (const auto label : kCorefLabels) {
      std::vector<GenerativePrompt> per;
      for (const auto &desc : descriptions) {
        fields["generation_description"] = RenderTemplate(
            desc, {{"entity1", v.entity1},
                   {"entity2", v.entity2},
                   {"label", std::string(label)}});
        per.push_back(RenderGenerative(main, fields));
      }
      bundle.generative.push_back(std::move(per));
    }
  }
  return bundle;
}

}  // namespace structprompt
