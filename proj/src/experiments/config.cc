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

#include <fstream>
#include <set>

#include "structprompt/error.h"
#include "structprompt/experiment.h"

namespace structprompt {

namespace {

const std::set<std::string> kConfigKeys = {
    "task",       "dataset",       "dataset_format", "backend",
    "max_in_flight", "strategies", "constrained",    "constraints",
    "coref_window", "calibration", "train",          "seed",
    "folds",      "dev_fraction",  "scoring",        "solve",
    "templates_dir", "output_dir", "cache_dir",      "workers"};

std::string VariantName(ContextVariant v) {
  return v == ContextVariant::kPlain ? "plain" : "ideology_topic";
}

ContextVariant ParseVariant(const std::string &name) {
  if (name == "plain") return ContextVariant::kPlain;
  if (name == "ideology_topic") return ContextVariant::kIdeologyTopic;
  throw Error(ErrorCode::kConfigError, "unknown context variant '" + name + "'");
}

json ScoringToJson(const ScoringOptions &o) {
  return json{{"temperature", o.temperature},
              {"top_k", o.top_k},
              {"n_samples", o.n_samples},
              {"max_tokens", o.max_tokens},
              {"normalize_multiple_choice", o.normalize_multiple_choice},
              {"true_token", o.true_token}};
}

ScoringOptions ScoringFromJson(const json &j) {
  ScoringOptions o;
  o.temperature = j.value("temperature", o.temperature);
  o.top_k = j.value("top_k", o.top_k);
  o.n_samples = j.value("n_samples", o.n_samples);
  o.max_tokens = j.value("max_tokens", o.max_tokens);
  o.normalize_multiple_choice =
      j.value("normalize_multiple_choice", o.normalize_multiple_choice);
  o.true_token = j.value("true_token", o.true_token);
  return o;
}

std::filesystem::path Resolve(const std::filesystem::path &base,
                              const std::filesystem::path &p) {
  if (p.empty() || p.is_absolute()) return p;
  return (base / p).lexically_normal();
}

}  // namespace

void to_json(json &j, const StrategyConfig &s) {
  json variants = json::array();
  for (auto v : s.variants) variants.push_back(VariantName(v));
  j = json{{"method", s.method}, {"shots", s.shots}, {"variants", variants}};
}

void from_json(const json &j, StrategyConfig &s) {
  s = StrategyConfig{};
  if (j.is_string()) {
    s.method = j.get<std::string>();
    return;
  }
  s.method = j.at("method").get<std::string>();
  s.shots = j.value("shots", 0);
  if (j.contains("variants")) {
    s.variants.clear();
    for (const auto &v : j["variants"]) {
      s.variants.push_back(ParseVariant(v.get<std::string>()));
    }
  }
}

std::string_view CalibrationModeName(CalibrationMode mode) {
  switch (mode) {
    case CalibrationMode::kNone:
      return "none";
    case CalibrationMode::kLocal:
      return "local";
    case CalibrationMode::kGlobal:
      return "global";
  }
  return "none";
}

CalibrationMode ParseCalibrationMode(std::string_view name) {
  if (name == "none") return CalibrationMode::kNone;
  if (name == "local") return CalibrationMode::kLocal;
  if (name == "global") return CalibrationMode::kGlobal;
  throw Error(ErrorCode::kConfigError,
              "unknown calibration mode '" + std::string(name) + "'");
}

std::string StrategyConfig::Label() const {
  return method + " (" + std::to_string(shots) + "-shot)";
}

void to_json(json &j, const ExperimentConfig &c) {
  json strategies = json::array();
  for (const auto &s : c.strategies) strategies.push_back(s);
  j = json{{"task", c.task},
           {"dataset", c.dataset.generic_string()},
           {"dataset_format", c.dataset_format},
           {"backend", c.backend},
           {"max_in_flight", c.max_in_flight},
           {"strategies", strategies},
           {"constrained", c.constrained},
           {"constraints",
            {{"C1", c.morality_constraints.alignment},
             {"C2", c.morality_constraints.role_uniqueness},
             {"transitivity", c.coref_constraints.transitivity}}},
           {"coref_window", c.coref_window},
           {"calibration", CalibrationModeName(c.calibration)},
           {"train", c.train},
           {"seed", c.seed},
           {"folds", c.folds},
           {"dev_fraction", c.dev_fraction},
           {"scoring", ScoringToJson(c.scoring)},
           {"solve",
            {{"max_nodes", c.solve.max_nodes},
             {"time_limit_ms", c.solve.time_limit.count()},
             {"decompose", c.solve.decompose}}},
           {"templates_dir", c.templates_dir.generic_string()},
           {"output_dir", c.output_dir.generic_string()},
           {"cache_dir", c.cache_dir.generic_string()},
           {"workers", c.workers}};
}

void from_json(const json &j, ExperimentConfig &c) {
  if (!j.is_object()) {
    throw Error(ErrorCode::kConfigError, "config must be a JSON object");
  }
  for (const auto &[key, _] : j.items()) {
    if (!kConfigKeys.contains(key)) {
      throw Error(ErrorCode::kConfigError, "unknown config key '" + key + "'");
    }
  }
  try {
    c = ExperimentConfig{};
    c.task = j.value("task", c.task);
    c.dataset = j.value("dataset", std::string());
    c.dataset_format = j.value("dataset_format", c.dataset_format);
    if (j.contains("backend")) c.backend = j["backend"].get<BackendDescriptor>();
    c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
    if (j.contains("strategies")) {
      for (const auto &s : j["strategies"]) {
        c.strategies.push_back(s.get<StrategyConfig>());
      }
    }
    c.constrained = j.value("constrained", c.constrained);
    if (j.contains("constraints")) {
      const auto &k = j["constraints"];
      c.morality_constraints.alignment = k.value("C1", true);
      c.morality_constraints.role_uniqueness = k.value("C2", true);
      c.coref_constraints.transitivity = k.value("transitivity", true);
    }
    c.coref_window = j.value("coref_window", c.coref_window);
    c.calibration =
        ParseCalibrationMode(j.value("calibration", std::string("none")));
    if (j.contains("train")) c.train = j["train"].get<TrainConfig>();
    c.seed = j.value("seed", c.seed);
    c.folds = j.value("folds", c.folds);
    c.dev_fraction = j.value("dev_fraction", c.dev_fraction);
    if (j.contains("scoring")) c.scoring = ScoringFromJson(j["scoring"]);
    if (j.contains("solve")) {
      const auto &s = j["solve"];
      c.solve.max_nodes = s.value("max_nodes", c.solve.max_nodes);
      c.solve.time_limit = std::chrono::milliseconds(
          s.value("time_limit_ms", c.solve.time_limit.count()));
      c.solve.decompose = s.value("decompose", c.solve.decompose);
    }
    c.templates_dir = j.value("templates_dir", std::string());
    c.output_dir = j.value("output_dir", c.output_dir.string());
    c.cache_dir = j.value("cache_dir", std::string());
    c.workers = j.value("workers", c.workers);
  } catch (const json::exception &e) {
    throw Error(ErrorCode::kConfigError, std::string("bad config: ") + e.what());
  }
}

void ValidateConfig(const ExperimentConfig &c) {
  auto fail = [](const std::string &m) {
    throw Error(ErrorCode::kConfigError, m);
  };
  if (c.task != kTaskMorality && c.task != kTaskCoref) {
    fail("unknown task '" + c.task + "'");
  }
  if (c.dataset.empty()) fail("no dataset given");
  if (c.dataset_format != "jsonl" &&
      !(c.task == kTaskCoref && c.dataset_format == "conll")) {
    fail("unsupported dataset format '" + c.dataset_format + "' for " +
         c.task);
  }
  if (c.strategies.empty()) fail("no strategies configured");
  std::set<std::pair<std::string, int>> seen;
  for (const auto &s : c.strategies) {
    ParseStrategyId(s.method);
    CheckShots(s.method, s.shots);
    if (!seen.insert({s.method, s.shots}).second) {
      fail("strategy " + s.Label() + " listed twice");
    }
    if (s.variants.empty()) fail(s.Label() + " has no context variants");
    if (std::set<ContextVariant>(s.variants.begin(), s.variants.end())
            .size() != s.variants.size()) {
      fail(s.Label() + " repeats a context variant");
    }
    if (c.task == kTaskCoref &&
        (s.variants.size() != 1 || s.variants[0] != ContextVariant::kPlain)) {
      fail("coreference prompts have only the plain context variant");
    }
    if (c.backend.mode == BackendMode::kBlackBox &&
        IsWhiteBoxStrategy(s.method)) {
      fail(s.method + " needs a white-box backend");
    }
  }
  if (c.folds < 1) fail("folds must be at least 1");
  if (!(c.dev_fraction >= 0.0 && c.dev_fraction < 1.0)) {
    fail("dev_fraction must be in [0, 1)");
  }
  if (c.calibration != CalibrationMode::kNone && c.folds < 2) {
    fail("calibration needs at least 2 folds");
  }
  if (c.workers < 1) fail("workers must be at least 1");
  if (c.max_in_flight < 1) fail("max_in_flight must be at least 1");
  if (c.coref_window < 0) fail("coref_window must be non-negative");
  if (c.scoring.n_samples < 1) fail("n_samples must be at least 1");
  if (c.output_dir.empty()) fail("no output directory given");
}

ExperimentConfig LoadConfig(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIoError, "cannot read config " + path.string());
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception &e) {
    throw Error(ErrorCode::kConfigError,
                path.string() + ": " + std::string(e.what()));
  }
  ExperimentConfig c = j.get<ExperimentConfig>();
  // Paths in a config file are relative to the file.
  const auto base = path.parent_path();
  c.dataset = Resolve(base, c.dataset);
  c.templates_dir = Resolve(base, c.templates_dir);
  c.output_dir = Resolve(base, c.output_dir);
  c.cache_dir = Resolve(base, c.cache_dir);
  if (c.backend.endpoint == "mock" && c.backend.model_id != "mock") {
    c.backend.model_id = Resolve(base, c.backend.model_id).generic_string();
  }
  return c;
}

std::filesystem::path CacheDir(const ExperimentConfig &c) {
  return c.cache_dir.empty() ? c.output_dir / "cache" : c.cache_dir;
}

}  // namespace structprompt
