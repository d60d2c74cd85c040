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

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "structprompt/dataset.h"
#include "structprompt/error.h"
#include "structprompt/experiment.h"

namespace structprompt {

namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kFixtureSeed = 2026;
// Stand-in probability for labels with no scripted mass, so that every
// logprob stays finite.
constexpr double kFloor = 1e-3;

const std::vector<std::string> kEntityNames = {
    "the senator",     "working families", "the president",  "our veterans",
    "the governor",    "big pharma",       "local police",   "the court",
    "the congregation", "our children",    "the union",      "foreign donors",
    "the committee",   "small businesses", "the agency",     "the protesters"};

const std::vector<std::string> kTopics = {"healthcare", "immigration", "guns",
                                          "taxes", "climate"};

std::vector<StrategyConfig> AllMethods(bool two_variants) {
  std::vector<StrategyConfig> out;
  for (const char *m : {kTrueFalse, kMultipleChoice, kGenerativeClassification,
                        kGenerationSampling, kVerbalizedConfidence}) {
    StrategyConfig s;
    s.method = m;
    if (two_variants) {
      s.variants = {ContextVariant::kPlain, ContextVariant::kIdeologyTopic};
    }
    out.push_back(s);
  }
  return out;
}

double Prob(int tenths) {
  return std::clamp(tenths / 10.0, kFloor, 1.0 - kFloor);
}

Sample TokenSample(const std::string &text, std::vector<TopLogprob> top) {
  Sample s;
  s.text = text;
  s.token_logprobs = std::vector<TokenLogprob>{
      {text, top.empty() ? 0.0 : top.front().logprob, std::move(top)}};
  return s;
}

void Put(std::map<std::string, CompletionResponse> &script,
         const std::string &prompt, CompletionResponse response) {
  auto [it, inserted] = script.emplace(prompt, response);
  if (!inserted && !(it->second == response)) {
    throw Error(ErrorCode::kConfigError,
                "fixture prompt scripted twice with different replies: " +
                    prompt.substr(0, 80));
  }
}

void ScriptJob(const ScoringJob &job, const std::vector<int> &target,
               std::map<std::string, CompletionResponse> &script) {
  const PromptBundle &b = job.bundle;
  const int n = job.num_labels;
  if (static_cast<int>(target.size()) != n) {
    throw Error(ErrorCode::kConfigError,
                "fixture target size mismatch for " + job.decision.ToString());
  }
  if (b.method == kTrueFalse) {
    for (int k = 0; k < n; ++k) {
      const double p = Prob(target[k]);
      CompletionResponse r;
      r.samples.push_back(TokenSample(
          p >= 0.5 ? "true" : "false",
          p >= 0.5 ? std::vector<TopLogprob>{{"true", std::log(p)},
                                             {"false", std::log(1 - p)}}
                   : std::vector<TopLogprob>{{"false", std::log(1 - p)},
                                             {"true", std::log(p)}}));
      Put(script, b.per_label[k], r);
    }
  } else if (b.method == kMultipleChoice) {
    std::vector<int> order(n);
    for (int k = 0; k < n; ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int c) { return target[a] > target[c]; });
    std::vector<TopLogprob> top;
    for (int k : order) {
      if (target[k] > 0) {
        top.push_back({b.option_tokens[k], std::log(target[k] / 10.0)});
      }
    }
    CompletionResponse r;
    r.samples.push_back(TokenSample(top.front().token, top));
    Put(script, b.prompt, r);
  } else if (b.method == kGenerativeClassification) {
    for (int k = 0; k < n; ++k) {
      for (const auto &gp : b.generative[k]) {
        CompletionResponse r;
        r.samples.push_back(Sample{"", std::nullopt});
        r.prompt_logprobs = std::vector<TokenLogprob>{
            {gp.prefix, std::nullopt, {}},
            {gp.text, std::log(Prob(target[k])), {}}};
        Put(script, gp.prefix + gp.text, r);
      }
    }
  } else if (b.method == kGenerationSampling) {
    CompletionResponse r;
    for (int k = 0; k < n; ++k) {
      for (int c = 0; c < target[k]; ++c) {
        r.samples.push_back({"Answer: " + b.synonyms[k].front(), std::nullopt});
      }
    }
    Put(script, b.prompt, r);
  } else if (b.method == kVerbalizedConfidence) {
    for (int k = 0; k < n; ++k) {
      CompletionResponse r;
      r.samples.push_back(
          {"Confidence: " + std::to_string(10 * target[k]), std::nullopt});
      Put(script, b.per_label[k], r);
    }
  }
}

// Tenths summing to 10, with `top` on the first label, `second` on the
// second and the remainder on `rest`.
std::vector<int> Spread(int n, int top_label, int top, int second_label,
                        int second, int rest_label) {
  std::vector<int> t(n, 0);
  t[top_label] += top;
  t[second_label] += second;
  t[rest_label] += 10 - top - second;
  return t;
}

Fixture Finish(const fs::path &dir, json config, const TaskData &data,
               const FixtureTargets &targets) {
  std::ofstream(dir / "config.json") << config.dump(2) << '\n';
  ExperimentConfig resolved = LoadConfig(dir / "config.json");
  json entries = BuildFixtureScript(resolved, data, targets);
  std::ofstream(dir / "script.json") << entries.dump() << '\n';
  if (!fs::exists(dir / "script.json")) {
    throw Error(ErrorCode::kIoError, "cannot write fixture script");
  }
  return {resolved, std::move(entries)};
}

json BaseConfig(const std::string &task,
                const std::vector<StrategyConfig> &strategies, int items) {
  ExperimentConfig c;
  c.task = task;
  c.dataset = "data.jsonl";
  c.backend.name = "fixture";
  c.backend.endpoint = "mock";
  c.backend.model_id = "script.json";
  c.strategies = strategies;
  c.seed = 7;
  c.folds = std::min(5, items);
  c.output_dir = "out";
  c.cache_dir = "cache";
  return c;
}

}  // namespace

json BuildFixtureScript(const ExperimentConfig &config, const TaskData &data,
                        const FixtureTargets &targets) {
  const TemplateSet templates = config.templates_dir.empty()
                                    ? TemplateSet::Builtin()
                                    : TemplateSet::FromDirectory(
                                          config.templates_dir);
  std::map<std::string, CompletionResponse> script;
  for (const auto &split :
       MakeFolds(data.size(), config.folds, config.seed, config.dev_fraction)) {
    // Every item, so that calibrating runs find their training prompts.
    std::vector<std::size_t> items = split.train;
    items.insert(items.end(), split.dev.begin(), split.dev.end());
    items.insert(items.end(), split.test.begin(), split.test.end());
    std::sort(items.begin(), items.end());
    for (const auto &strategy : config.strategies) {
      for (const auto &job : PlanJobs(config, data, strategy, items,
                                      split.train, templates)) {
        ScriptJob(job, targets.at(job.decision), script);
      }
    }
  }
  json entries = json::array();
  for (const auto &[prompt, response] : script) {
    entries.push_back({{"prompt", prompt}, {"response", response}});
  }
  return json{{"descriptor", config.backend}, {"entries", entries}};
}

// Even tweets pull every entity toward a role of one wrong foundation
// (alignment conflicts); tweets with i % 4 == 1 pull the second entity onto
// the first entity's role (uniqueness conflicts). The rest score cleanly.
Fixture MakeMoralityFixture(const fs::path &dir,
                            std::vector<StrategyConfig> strategies,
                            int num_tweets) {
  fs::create_directories(dir);
  std::mt19937_64 rng(kFixtureSeed);
  TaskData data;
  data.task = kTaskMorality;
  FixtureTargets targets;
  for (int i = 0; i < num_tweets; ++i) {
    TweetInstance t;
    char id[32];
    std::snprintf(id, sizeof(id), "fx-%03d", i);
    t.id = id;
    t.foundation = i % kNumFoundations;
    const auto &group = MoralityAlignment()[t.foundation];
    const int entities = 1 + static_cast<int>(rng() % 3);
    std::vector<int> roles(group.begin(), group.end());
    std::shuffle(roles.begin(), roles.end(), rng);
    t.text = "Today ";
    for (int e = 0; e < entities; ++e) {
      const std::string &name =
          kEntityNames[(static_cast<std::size_t>(i) * 3 + e * 5) %
                       kEntityNames.size()];
      if (e > 0) t.text += e + 1 == entities ? " and " : ", ";
      TweetEntity ent;
      ent.text = name;
      ent.begin = static_cast<int>(t.text.size());
      t.text += name;
      ent.end = static_cast<int>(t.text.size());
      ent.role = roles[e];
      t.entities.push_back(ent);
    }
    t.text += " were in the news on " + kTopics[i % kTopics.size()] + ".";
    t.ideology = i % 2 == 0 ? "liberal" : "conservative";
    t.topic = kTopics[i % kTopics.size()];

    const int wrong = (t.foundation + 1 + i % 3) % kNumFoundations;
    const int other = (wrong + 1) % kNumFoundations == t.foundation
                          ? (wrong + 2) % kNumFoundations
                          : (wrong + 1) % kNumFoundations;
    targets[FoundationDecision(t)] =
        Spread(kNumFoundations, t.foundation, 7, wrong, 2, other);
    const auto &wrong_group = MoralityAlignment()[wrong];
    for (int e = 0; e < entities; ++e) {
      const int gold = t.entities[e].role;
      const int decoy = wrong_group[e % wrong_group.size()];
      std::vector<int> w;
      if (i % 2 == 0) {
        w = Spread(kNumRoles, decoy, 5, gold, 4, (gold + 1) % kNumRoles == decoy
                                                     ? (gold + 2) % kNumRoles
                                                     : (gold + 1) % kNumRoles);
      } else if (i % 4 == 1 && e == 1) {
        const int first = t.entities[0].role;
        w = Spread(kNumRoles, first, 5, gold, 4, decoy);
      } else {
        w = Spread(kNumRoles, gold, 7, decoy, 2,
                   (decoy + 1) % kNumRoles == gold ? (decoy + 2) % kNumRoles
                                                   : (decoy + 1) % kNumRoles);
      }
      targets[RoleDecision(t, e)] = w;
    }
    data.tweets.push_back(std::move(t));
  }
  SaveTweets(dir / "data.jsonl", data.tweets);
  if (strategies.empty()) strategies = AllMethods(true);
  return Finish(dir, BaseConfig(kTaskMorality, strategies, num_tweets), data, targets);
}

// Documents hold 3 to 5 mentions in two or three clusters. In every other
// document one cross-cluster pair is pushed to "coreferent" while its
// neighbours stay confident, so the pairwise argmax is intransitive.
Fixture MakeCorefFixture(const fs::path &dir,
                         std::vector<StrategyConfig> strategies,
                         int num_docs) {
  fs::create_directories(dir);
  static const std::vector<std::vector<std::string>> kClusterNames = {
      {"Maria Lopez", "Lopez", "she", "the mayor", "Ms. Lopez"},
      {"the city council", "the council", "it", "the board", "its members"},
      {"John Park", "Park", "he", "the treasurer", "Mr. Park"}};
  static const std::vector<std::string> kPredicates = {
      "met reporters on Monday",      "signed the budget late at night",
      "was criticised by residents",  "answered questions about housing",
      "travelled to the capital",     "refused to comment"};
  std::mt19937_64 rng(kFixtureSeed + 1);
  TaskData data;
  data.task = kTaskCoref;
  FixtureTargets targets;
  for (int i = 0; i < num_docs; ++i) {
    CorefDocument d;
    char id[32];
    std::snprintf(id, sizeof(id), "doc-%02d", i);
    d.id = id;
    const int m = 3 + static_cast<int>(rng() % 3);
    const int num_clusters = m >= 5 ? 3 : 2;
    // The first two mentions share a cluster; the last one starts another.
    std::vector<int> cluster(m);
    cluster[0] = cluster[1] = 0;
    for (int k = 2; k < m; ++k) {
      cluster[k] = k == m - 1 ? 1 : static_cast<int>(rng() % num_clusters);
    }
    std::vector<int> used(3, 0);
    d.clusters.assign(num_clusters, {});
    for (int k = 0; k < m; ++k) {
      const int c = cluster[k];
      const std::string &text = kClusterNames[c][used[c]++];
      std::string sentence = text + " " + kPredicates[(k + i) % kPredicates.size()] + ".";
      sentence[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(sentence[0])));
      d.sentences.push_back(sentence);
      d.mentions.push_back({sentence.substr(0, text.size()), k, 0,
                            static_cast<int>(text.size())});
      d.clusters[c].push_back(k);
    }
    std::erase_if(d.clusters, [](const auto &c) { return c.empty(); });
    d.pairs = CandidatePairs(m);
    for (const auto &[a, b] : d.pairs) {
      const bool same = cluster[a] == cluster[b];
      targets[PairDecisionId(d, a, b)] =
          same ? std::vector<int>{8, 2} : std::vector<int>{2, 8};
    }
    if (i % 2 == 0) {
      // Mentions 0 and 1 corefer, m-1 does not: make (0, m-1) look
      // coreferent and (1, m-1) clearly distinct.
      targets[PairDecisionId(d, 0, 1)] = {9, 1};
      targets[PairDecisionId(d, 0, m - 1)] = {6, 4};
      targets[PairDecisionId(d, 1, m - 1)] = {1, 9};
    }
    data.docs.push_back(std::move(d));
  }
  SaveCorefDocuments(dir / "data.jsonl", data.docs);
  if (strategies.empty()) strategies = AllMethods(false);
  return Finish(dir, BaseConfig(kTaskCoref, strategies, num_docs), data, targets);
}

}  // namespace structprompt
