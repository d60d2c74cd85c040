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

#include <cctype>
#include <cmath>
#include <fstream>

#include "structprompt/llm_backend.h"

namespace structprompt {

namespace {

std::string ModeName(BackendMode mode) {
  return mode == BackendMode::kWhiteBox ? "white_box" : "black_box";
}

BackendMode ModeFromName(const std::string &name) {
  if (name == "white_box") return BackendMode::kWhiteBox;
  if (name == "black_box") return BackendMode::kBlackBox;
  throw Error(ErrorCode::kConfigError, "unknown backend mode '" + name + "'");
}

void CheckLogprobs(const std::vector<TokenLogprob> &tokens, bool prompt) {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto &t = tokens[i];
    if (!t.logprob) {
      // Only the first prompt token may lack a log-probability.
      if (prompt && i == 0) continue;
      throw Error(ErrorCode::kMalformedResponse,
                  "missing logprob for token '" + t.token + "'");
    }
    if (!std::isfinite(*t.logprob) && *t.logprob != -INFINITY) {
      throw Error(ErrorCode::kMalformedResponse, "non-finite logprob");
    }
    if (*t.logprob > 1e-9) {
      throw Error(ErrorCode::kMalformedResponse, "positive logprob");
    }
    for (const auto &alt : t.top) {
      if (alt.logprob > 1e-9 || std::isnan(alt.logprob)) {
        throw Error(ErrorCode::kMalformedResponse, "invalid top logprob");
      }
    }
  }
}

}  // namespace

void to_json(json &j, const BackendDescriptor &d) {
  j = json{{"name", d.name},
           {"mode", ModeName(d.mode)},
           {"endpoint", d.endpoint},
           {"model_id", d.model_id},
           {"supports_echo", d.supports_echo}};
}

void from_json(const json &j, BackendDescriptor &d) {
  d = BackendDescriptor{};
  d.name = j.value("name", d.name);
  d.mode = ModeFromName(j.value("mode", std::string("white_box")));
  d.endpoint = j.value("endpoint", d.endpoint);
  d.model_id = j.value("model_id", d.model_id);
  d.supports_echo = j.value("supports_echo", d.mode == BackendMode::kWhiteBox);
}

void to_json(json &j, const CompletionRequest &r) {
  j = json{{"prompt", r.prompt},
           {"max_tokens", r.max_tokens},
           {"temperature", r.temperature},
           {"top_k", r.top_k},
           {"n", r.n_samples},
           {"logprobs", r.want_logprobs},
           {"echo", r.echo_prompt_logprobs}};
}

void from_json(const json &j, CompletionRequest &r) {
  r = CompletionRequest{};
  r.prompt = j.at("prompt").get<std::string>();
  r.max_tokens = j.value("max_tokens", r.max_tokens);
  r.temperature = j.value("temperature", r.temperature);
  r.top_k = j.value("top_k", r.top_k);
  r.n_samples = j.value("n", r.n_samples);
  r.want_logprobs = j.value("logprobs", r.want_logprobs);
  r.echo_prompt_logprobs = j.value("echo", r.echo_prompt_logprobs);
}

void to_json(json &j, const TokenLogprob &t) {
  j = json{{"token", t.token}};
  j["logprob"] = t.logprob ? json(*t.logprob) : json(nullptr);
  if (!t.top.empty()) {
    json top = json::array();
    for (const auto &alt : t.top) {
      top.push_back({{"token", alt.token}, {"logprob", alt.logprob}});
    }
    j["top"] = std::move(top);
  }
}

void from_json(const json &j, TokenLogprob &t) {
  t = TokenLogprob{};
  t.token = j.at("token").get<std::string>();
  if (j.contains("logprob") && !j["logprob"].is_null()) {
    t.logprob = j["logprob"].get<double>();
  }
  if (j.contains("top")) {
    for (const auto &alt : j["top"]) {
      t.top.push_back({alt.at("token").get<std::string>(),
                       alt.at("logprob").get<double>()});
    }
  }
}

void to_json(json &j, const CompletionResponse &r) {
  json samples = json::array();
  for (const auto &s : r.samples) {
    json js{{"text", s.text}};
    if (s.token_logprobs) js["token_logprobs"] = *s.token_logprobs;
    samples.push_back(std::move(js));
  }
  j = json{{"samples", std::move(samples)}};
  if (r.prompt_logprobs) j["prompt_logprobs"] = *r.prompt_logprobs;
}

void from_json(const json &j, CompletionResponse &r) {
  r = CompletionResponse{};
  for (const auto &js : j.at("samples")) {
    Sample s;
    s.text = js.at("text").get<std::string>();
    if (js.contains("token_logprobs") && !js["token_logprobs"].is_null()) {
      s.token_logprobs = js["token_logprobs"].get<std::vector<TokenLogprob>>();
    }
    r.samples.push_back(std::move(s));
  }
  if (j.contains("prompt_logprobs") && !j["prompt_logprobs"].is_null()) {
    r.prompt_logprobs = j["prompt_logprobs"].get<std::vector<TokenLogprob>>();
  }
}

CompletionResponse Complete(Backend &backend,
                            const CompletionRequest &request) {
  const BackendDescriptor &d = backend.descriptor();
  if (request.n_samples < 1) {
    throw Error(ErrorCode::kConfigError, "n_samples must be at least 1");
  }
  if (!(request.temperature >= 0.0)) {
    throw Error(ErrorCode::kConfigError, "temperature must be non-negative");
  }
  if (d.mode == BackendMode::kBlackBox &&
      (request.want_logprobs || request.echo_prompt_logprobs)) {
    throw Error(ErrorCode::kCapabilityMissing,
                "backend '" + d.name + "' is black-box; logprobs unavailable");
  }
  if (request.echo_prompt_logprobs && !d.supports_echo) {
    throw Error(ErrorCode::kCapabilityMissing,
                "backend '" + d.name + "' cannot echo prompt logprobs");
  }

  CompletionResponse response = backend.Generate(request);

  if (static_cast<int>(response.samples.size()) != request.n_samples) {
    throw Error(ErrorCode::kMalformedResponse,
                "expected " + std::to_string(request.n_samples) +
                    " samples, got " +
                    std::to_string(response.samples.size()));
  }
  if (request.want_logprobs) {
    for (const auto &s : response.samples) {
      if (!s.token_logprobs || s.token_logprobs->empty()) {
        throw Error(ErrorCode::kMalformedResponse,
                    "sample without token logprobs");
      }
      CheckLogprobs(*s.token_logprobs, false);
    }
  }
  if (request.echo_prompt_logprobs) {
    if (!response.prompt_logprobs) {
      throw Error(ErrorCode::kMalformedResponse, "missing prompt logprobs");
    }
    CheckLogprobs(*response.prompt_logprobs, true);
  }
  return response;
}

std::string NormalizeToken(std::string_view token) {
  std::size_t start = 0;
  while (start < token.size() &&
         std::isspace(static_cast<unsigned char>(token[start]))) {
    ++start;
  }
  std::string out(token.substr(start));
  for (char &c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

double TokenProb(const CompletionResponse &response, std::string_view target) {
  if (response.samples.empty() || !response.samples[0].token_logprobs ||
      response.samples[0].token_logprobs->empty()) {
    throw Error(ErrorCode::kNoLogprobs, "response carries no token logprobs");
  }
  const TokenLogprob &first = response.samples[0].token_logprobs->front();
  const std::string want = NormalizeToken(target);
  for (const auto &alt : first.top) {
    if (NormalizeToken(alt.token) == want) return std::exp(alt.logprob);
  }
  // Backends that return no top list still report the sampled token.
  if (first.top.empty() && first.logprob &&
      NormalizeToken(first.token) == want) {
    return std::exp(*first.logprob);
  }
  return 0.0;
}

std::unique_ptr<Backend> MakeBackend(const BackendDescriptor &descriptor,
                                     const HttpOptions &options) {
  if (descriptor.endpoint != "mock") {
    return std::make_unique<HttpBackend>(descriptor, options);
  }
  if (descriptor.model_id.empty() || descriptor.model_id == "mock") {
    return std::make_unique<MockBackend>(descriptor);
  }
  std::ifstream in(descriptor.model_id);
  if (!in) {
    throw Error(ErrorCode::kIoError,
                "cannot open mock script " + descriptor.model_id);
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception &e) {
    throw Error(ErrorCode::kConfigError,
                "bad mock script " + descriptor.model_id + ": " + e.what());
  }
  auto mock = std::make_unique<MockBackend>(descriptor);
  mock->LoadScript(j);
  return mock;
}

}  // namespace structprompt
