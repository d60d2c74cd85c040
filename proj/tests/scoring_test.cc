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

#include <cmath>
#include <fstream>
#include <numeric>

#include "doctest.h"
#include "test_util.h"

namespace structprompt {
namespace {

using testing::CodeOf;
using testing::Dec;

CompletionResponse FirstToken(std::vector<TopLogprob> top) {
  TokenLogprob t{top[0].token, top[0].logprob, top};
  return CompletionResponse{{Sample{t.token, std::vector<TokenLogprob>{t}}},
                            std::nullopt};
}

CompletionResponse Replies(const std::vector<std::string> &texts) {
  CompletionResponse r;
  for (const auto &t : texts) r.samples.push_back(Sample{t, std::nullopt});
  return r;
}

// Echo reply: prefix as one context token, then the text tokens.
CompletionResponse Echo(const std::string &prefix,
                        const std::vector<std::pair<std::string, double>> &x) {
  std::vector<TokenLogprob> tokens{{prefix, std::nullopt, {}}};
  for (const auto &[tok, lp] : x) tokens.push_back({tok, lp, {}});
  return CompletionResponse{{Sample{"", std::nullopt}}, tokens};
}

double Sum(const std::vector<double> &v) {
  return std::accumulate(v.begin(), v.end(), 0.0);
}

const ScoringOptions kOptions;

TEST_CASE("true/false normalizes p(true) over labels") {
  MockBackend mock;
  mock.Script("A", FirstToken({{" true", std::log(0.8)}, {" false", -2}}));
  mock.Script("B", FirstToken({{" false", -0.3}, {" True", std::log(0.2)}}));
  auto t = ScoreTrueFalse(Dec("x"), kTrueFalse, {"A", "B"}, mock, kOptions);
  CHECK(t.scores[0] == doctest::Approx(0.8));
  CHECK(t.scores[1] == doctest::Approx(0.2));
  CHECK(t.raw.unnormalized[0] == doctest::Approx(0.8));
  CHECK_FALSE(t.raw.degenerate);

  mock.Script("C", FirstToken({{"true", -1.0}}));
  auto u = ScoreTrueFalse(Dec("x"), kTrueFalse, {"C", "C", "C", "C", "C"},
                          mock, kOptions);
  for (double s : u.scores) CHECK(s == doctest::Approx(0.2));
}

TEST_CASE("true/false on a scripted five-foundation fixture") {
  // Hand evaluation: exp of each true logprob, divided by their sum.
  const double lp[5] = {-0.1, -1.2, -2.0, -0.7, -3.5};
  const double expected[5] = {0.4843495498663197, 0.16122595955267888,
                              0.07244349339461026, 0.26581666890354017,
                              0.016164328282851106};
  MockBackend mock;
  std::vector<std::string> prompts;
  for (int k = 0; k < 5; ++k) {
    prompts.push_back("tweet 7, foundation " + std::to_string(k));
    if (k == 4) {
      mock.Script(prompts.back(), FirstToken({{" false", -0.05}, {" true", lp[k]}}));
    } else {
      mock.Script(prompts.back(), FirstToken({{" true", lp[k]}, {" false", -3}}));
    }
  }
  auto t = ScoreTrueFalse(Dec("x"), kTrueFalse, prompts, mock, kOptions);
  for (int k = 0; k < 5; ++k) {
    CHECK(t.scores[k] == doctest::Approx(expected[k]).epsilon(1e-12));
  }
  CHECK(Sum(t.scores) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("true/false all-zero falls back to uniform") {
  MockBackend mock;
  mock.Script("A", FirstToken({{" false", -0.1}}));
  auto t = ScoreTrueFalse(Dec("x"), kTrueFalse, {"A", "A"}, mock, kOptions);
  CHECK(t.raw.degenerate);
  CHECK(t.scores == std::vector<double>{0.5, 0.5});
  CHECK(t.raw.note.find("AllZero") != std::string::npos);

  MockBackend bb({.mode = BackendMode::kBlackBox});
  CHECK(CodeOf([&] {
          ScoreTrueFalse(Dec("x"), kTrueFalse, {"A"}, bb, kOptions);
        }) == ErrorCode::kCapabilityMissing);
}

TEST_CASE("multiple choice") {
  MockBackend mock;
  mock.Script("Q", FirstToken({{"A", std::log(0.6)}, {"B", std::log(0.3)},
                               {"C", std::log(0.05)}}));
  auto t = ScoreMultipleChoice(Dec("x"), kMultipleChoice, "Q", {"A", "B"},
                               mock, kOptions);
  CHECK(t.scores[0] == doctest::Approx(2.0 / 3));
  CHECK(t.scores[1] == doctest::Approx(1.0 / 3));
  CHECK(std::round(t.scores[0] * 1000) / 1000 == 0.667);
  CHECK(t.raw.unnormalized[0] == doctest::Approx(0.6));

  auto missing = ScoreMultipleChoice(Dec("x"), kMultipleChoice, "Q",
                                     {"A", "B", "C", "D", "E"}, mock, kOptions);
  CHECK(missing.raw.unnormalized[3] == 0.0);
  CHECK(missing.scores[4] == 0.0);

  ScoringOptions raw = kOptions;
  raw.normalize_multiple_choice = false;
  auto unnorm = ScoreMultipleChoice(Dec("x"), kMultipleChoice, "Q", {"A", "B"},
                                    mock, raw);
  CHECK(unnorm.scores[0] == doctest::Approx(0.6));

  CHECK(CodeOf([&] {
          ScoreMultipleChoice(Dec("x"), kMultipleChoice, "Q", {"A", " a"}, mock,
                              kOptions);
        }) == ErrorCode::kOptionCollision);

  std::vector<std::string> letters;
  std::vector<TopLogprob> top;
  for (int k = 0; k < 16; ++k) {
    letters.push_back(std::string(1, static_cast<char>('A' + k)));
  }
  mock.Script("roles", FirstToken({{"C", -0.2}, {"A", -2.0}}));
  auto roles = ScoreMultipleChoice(Dec("x"), kMultipleChoice, "roles", letters,
                                   mock, kOptions);
  CHECK(roles.scores.size() == 16);
  CHECK(Sum(roles.scores) == doctest::Approx(1.0));
}

TEST_CASE("generative classification") {
  MockBackend mock;
  // One description, one text token of logprob -0.5.
  mock.Script("D: x", Echo("D: ", {{"x", -0.5}}));
  mock.Script("E: x", Echo("E: ", {{"x", -0.5}}));
  auto one = ScoreGenerativeClassification(
      Dec("x"), kGenerativeClassification, {{{"D: ", "x"}}, {{"E: ", "x"}}},
      mock, kOptions);
  CHECK(one.raw.unnormalized[0] == doctest::Approx(-0.5));
  CHECK(one.scores == std::vector<double>{0.5, 0.5});

  // Hand evaluation: label 0 descriptions give -0.5 and -0.7, mean -0.6;
  // label 1 gives -1.4 and -1.2, mean -1.3; softmax of (-0.6, -1.3).
  mock.Script("a|the text", Echo("a|", {{"the", -0.2}, {" text", -0.3}}));
  mock.Script("b|the text", Echo("b|", {{"the text", -0.7}}));
  mock.Script("c|the text", Echo("c|", {{"the", -1.0}, {" text", -0.4}}));
  mock.Script("d|the text", Echo("d|", {{"the", -0.6}, {" text", -0.6}}));
  auto t = ScoreGenerativeClassification(
      Dec("x"), kGenerativeClassification,
      {{{"a|", "the text"}, {"b|", "the text"}},
       {{"c|", "the text"}, {"d|", "the text"}}},
      mock, kOptions);
  CHECK(t.raw.unnormalized[0] == doctest::Approx(-0.6).epsilon(1e-12));
  CHECK(t.raw.unnormalized[1] == doctest::Approx(-1.3).epsilon(1e-12));
  CHECK(t.scores[0] == doctest::Approx(0.6681877721681662).epsilon(1e-12));
  CHECK(Sum(t.scores) == doctest::Approx(1.0));

  // A token straddling the boundary counts toward the text.
  mock.Script("p: q", Echo("p:", {{" q", -0.25}}));
  auto straddle = ScoreGenerativeClassification(
      Dec("x"), kGenerativeClassification, {{{"p: ", "q"}}}, mock, kOptions);
  CHECK(straddle.raw.unnormalized[0] == doctest::Approx(-0.25));

  CHECK(CodeOf([&] {
          ScoreGenerativeClassification(Dec("x"), kGenerativeClassification,
                                        {{{"D: ", ""}}}, mock, kOptions);
        }) == ErrorCode::kEmptyText);
  mock.Script("bad", Echo("b", {{"x", -1}}));
  CHECK(CodeOf([&] {
          ScoreGenerativeClassification(Dec("x"), kGenerativeClassification,
                                        {{{"ba", "d"}}}, mock, kOptions);
        }) == ErrorCode::kMalformedResponse);
  MockBackend no_echo({.supports_echo = false});
  CHECK(CodeOf([&] {
          ScoreGenerativeClassification(Dec("x"), kGenerativeClassification,
                                        {{{"D: ", "x"}}}, no_echo, kOptions);
        }) == ErrorCode::kCapabilityMissing);
}

LabelParser CorefParser() {
  return KeywordParser({{"coreferent"}, {"distinct"}});
}

TEST_CASE("generation sampling") {
  MockBackend mock({.mode = BackendMode::kBlackBox});
  std::vector<std::string> seven_three(7, "coreferent");
  seven_three.insert(seven_three.end(), 3, "Distinct.");
  mock.Script("Q", Replies(seven_three));
  auto t = ScoreGenerationSampling(Dec("x"), kGenerationSampling, "Q", 2,
                                   CorefParser(), mock, kOptions);
  CHECK(t.scores[0] == doctest::Approx(0.7));
  CHECK(t.scores[1] == doctest::Approx(0.3));
  CHECK(t.raw.sample_counts == std::vector<int>{7, 3});

  mock.Script("same", Replies({"distinct"}));
  auto same = ScoreGenerationSampling(Dec("x"), kGenerationSampling, "same", 2,
                                      CorefParser(), mock, kOptions);
  CHECK(same.scores == std::vector<double>{0.0, 1.0});

  // 2 unparseable, 5 coreferent, 3 distinct: renormalized over parsed mass.
  std::vector<std::string> mixed = {"I cannot tell", "coreferent", "distinct",
                                    "coreferent",    "???",        "coreferent",
                                    "distinct",      "coreferent", "distinct",
                                    "Coreferent!"};
  mock.Script("mixed", Replies(mixed));
  auto m = ScoreGenerationSampling(Dec("x"), kGenerationSampling, "mixed", 2,
                                   CorefParser(), mock, kOptions);
  CHECK(m.scores[0] == doctest::Approx(0.625).epsilon(1e-12));
  CHECK(m.scores[1] == doctest::Approx(0.375).epsilon(1e-12));
  CHECK(m.raw.failed_parses == 2);
  CHECK(m.raw.unnormalized[0] == doctest::Approx(0.5));

  mock.Script("junk", Replies({"no idea", "pass"}));
  auto junk = ScoreGenerationSampling(Dec("x"), kGenerationSampling, "junk", 2,
                                      CorefParser(), mock, kOptions);
  CHECK(junk.raw.degenerate);
  CHECK(junk.scores == std::vector<double>{0.5, 0.5});
  CHECK(junk.raw.failed_parses == 10);
}

TEST_CASE("temperature 0 sampling is one-hot") {
  MockBackend mock({.mode = BackendMode::kBlackBox});
  mock.Script("Q", Replies({"distinct", "coreferent", "coreferent"}));
  ScoringOptions greedy = kOptions;
  greedy.temperature = 0.0;
  auto t = ScoreGenerationSampling(Dec("x"), kGenerationSampling, "Q", 2,
                                   CorefParser(), mock, greedy);
  CHECK(t.scores == std::vector<double>{0.0, 1.0});
}

TEST_CASE("keyword parser prefers the earliest, then the longest match") {
  auto p = KeywordParser({{"Care/Harm", "care"},
                          {"Fairness/Cheating"},
                          {"Entity causing harm"},
                          {"harm"}});
  CHECK(p("CARE/HARM") == 0);
  CHECK(p("The answer is fairness / cheating.") == 1);
  CHECK(p("Entity causing harm") == 2);
  CHECK(p("harm, not care") == 3);
  CHECK(p("none of these") == std::nullopt);
  CHECK(p("careful") == std::nullopt);
}

TEST_CASE("confidence parser fixture corpus") {
  const std::vector<std::pair<std::string, std::optional<double>>> corpus = {
      {"Confidence: 85", 85},
      {"Confidence: 85%", 85},
      {"confidence:85", 85},
      {"CONFIDENCE: 70", 70},
      {"Confidence - 60", 60},
      {"**Confidence:** 90", 90},
      {"\"Confidence: 75\"", 75},
      {"“Confidence: 40”", 40},
      {"Confidence: 85/100", 85},
      {"Confidence: 72.5", 72.5},
      {"Confidence level: 55", 55},
      {"My confidence is 30%.", 30},
      {"Confidence = 100", 100},
      {"Confidence: 0", 0},
      {"85", 85},
      {"  42% ", 42},
      {"Confidence: [the probability of answer X to be correct (0-100)]",
       std::nullopt},
      {"Confidence: 150", std::nullopt},
      {"I am not sure.", std::nullopt},
      {"", std::nullopt},
  };
  REQUIRE(corpus.size() == 20);
  for (const auto &[reply, want] : corpus) {
    INFO(reply);
    CHECK(ParseConfidence(reply) == want);
  }
}

TEST_CASE("verbalized confidence") {
  MockBackend mock({.mode = BackendMode::kBlackBox});
  mock.Script("A", Replies({"Confidence: 80", "Confidence: 90", "Confidence: 70"}));
  mock.Script("B", Replies({"Confidence: 20"}));
  auto t = ScoreVerbalizedConfidence(Dec("x"), kVerbalizedConfidence,
                                     {"A", "B"}, mock, kOptions);
  CHECK(t.raw.unnormalized[0] == doctest::Approx(0.80));
  CHECK(t.raw.unnormalized[1] == doctest::Approx(0.20));
  CHECK(t.scores[0] == doctest::Approx(0.8));
  CHECK(t.scores[1] == doctest::Approx(0.2));
  CHECK(t.raw.sample_counts == std::vector<int>{10, 10});

  mock.Script("C", Replies({"no", "Confidence: 50"}));
  mock.Script("D", Replies({"no"}));
  auto u = ScoreVerbalizedConfidence(Dec("x"), kVerbalizedConfidence,
                                     {"C", "D"}, mock, kOptions);
  CHECK(u.raw.failed_parses == 15);
  CHECK(u.raw.unnormalized[1] == 0.0);
  CHECK(u.scores == std::vector<double>{1.0, 0.0});
  CHECK(u.raw.note.find("ParseFailure") != std::string::npos);
}

TEST_CASE("label permutation permutes the table") {
  MockBackend mock;
  const std::vector<double> lp = {-0.3, -1.1, -2.2};
  std::vector<std::string> prompts;
  for (int k = 0; k < 3; ++k) {
    prompts.push_back("p" + std::to_string(k));
    mock.Script(prompts.back(), FirstToken({{"true", lp[k]}}));
  }
  auto t = ScoreTrueFalse(Dec("x"), kTrueFalse, prompts, mock, kOptions);
  auto r = ScoreTrueFalse(Dec("x"), kTrueFalse, {prompts[2], prompts[0], prompts[1]},
                          mock, kOptions);
  CHECK(r.scores[0] == t.scores[2]);
  CHECK(r.scores[1] == t.scores[0]);
  CHECK(r.scores[2] == t.scores[1]);
}

TEST_CASE("score records persist as JSONL") {
  const auto path = std::filesystem::temp_directory_path() /
                    "structprompt_scores_test.jsonl";
  std::filesystem::remove(path);
  ScoreTable t{Dec("a"), kTrueFalse, {0.25, 0.75}, {{0.1, 0.3}, {}, 0, false, ""}};
  ScoreTable u = t;
  u.strategy = kMultipleChoice;
  AppendScoreRecords(path, {{"mf", 0, t}, {"mf", 0, u}});
  ScoreTable t2 = t;
  t2.scores = {0.5, 0.5};
  AppendScoreRecords(path, {{"mf", 0, t2}});
  auto back = ReadScoreRecords(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].table == t2);
  CHECK(back[1].table == u);

  // A torn final line is ignored.
  {
    std::ofstream out(path, std::ios::app);
    out << R"({"dataset":"mf","fold":1,"tab)";
  }
  CHECK(ReadScoreRecords(path).size() == 2);
  {
    std::ofstream out(path, std::ios::app);
    out << "\n";
  }
  CHECK(CodeOf([&] { ReadScoreRecords(path); }) == ErrorCode::kSchemaError);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace structprompt
