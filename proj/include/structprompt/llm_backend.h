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

// Language model access. A Backend turns a CompletionRequest into sampled
// text and, for white-box models, token log-probabilities.
//
// Wire protocol of HttpBackend (one POST per request):
//
//   request:  {"prompt": str, "max_tokens": int, "temperature": float,
//              "top_k": int, "n": int, "logprobs": bool, "echo": bool,
//              "model": str}
//   response: {"samples": [{"text": str,
//                           "token_logprobs": [{"token": str,
//                                               "logprob": float,
//                                               "top": [{"token": str,
//                                                        "logprob": float}]}]
//                          }],
//              "prompt_logprobs": [{"token": str, "logprob": float|null}]}

#ifndef STRUCTPROMPT_LLM_BACKEND_H_
#define STRUCTPROMPT_LLM_BACKEND_H_

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "structprompt/error.h"
#include "structprompt/types.h"

namespace structprompt {

enum class BackendMode : std::uint8_t { kWhiteBox, kBlackBox };

struct BackendDescriptor {
  std::string name = "mock";
  BackendMode mode = BackendMode::kWhiteBox;
  // URL, or "mock".
  std::string endpoint = "mock";
  std::string model_id = "mock";
  // Whether the backend can return log-probabilities of the prompt tokens.
  bool supports_echo = true;
};

struct CompletionRequest {
  std::string prompt;
  int max_tokens = 16;
  double temperature = 0.5;
  int top_k = 5;
  int n_samples = 1;
  bool want_logprobs = false;
  bool echo_prompt_logprobs = false;
};

struct TopLogprob {
  std::string token;
  double logprob = 0.0;
  bool operator==(const TopLogprob &) const = default;
};

struct TokenLogprob {
  std::string token;
  // Absent for the first prompt token, which has no context.
  std::optional<double> logprob;
  // Alternatives at this position, most likely first.
  std::vector<TopLogprob> top;
  bool operator==(const TokenLogprob &) const = default;
};

struct Sample {
  std::string text;
  std::optional<std::vector<TokenLogprob>> token_logprobs;
  bool operator==(const Sample &) const = default;
};

struct CompletionResponse {
  std::vector<Sample> samples;
  std::optional<std::vector<TokenLogprob>> prompt_logprobs;
  bool operator==(const CompletionResponse &) const = default;
};

void to_json(json &j, const BackendDescriptor &d);
void from_json(const json &j, BackendDescriptor &d);
void to_json(json &j, const CompletionRequest &r);
void from_json(const json &j, CompletionRequest &r);
void to_json(json &j, const TokenLogprob &t);
void from_json(const json &j, TokenLogprob &t);
void to_json(json &j, const CompletionResponse &r);
void from_json(const json &j, CompletionResponse &r);

class Backend {
 public:
  virtual ~Backend() = default;
  virtual const BackendDescriptor &descriptor() const = 0;
  // Raw generation; callers should go through Complete().
  virtual CompletionResponse Generate(const CompletionRequest &request) = 0;
};

// Validates the request against the backend's capabilities, runs it and
// checks the response shape. Throws kCapabilityMissing, kTransport or
// kMalformedResponse.
CompletionResponse Complete(Backend &backend, const CompletionRequest &request);

// exp(logprob) of the first entry of the first generated position's top-k
// distribution whose text matches `target` (case-insensitive, leading
// whitespace ignored); 0 when the target is not among the returned tokens.
// Throws kNoLogprobs when the response has no generated-token logprobs.
double TokenProb(const CompletionResponse &response, std::string_view target);

// Normalized answer-token text: leading whitespace stripped, lower-cased.
std::string NormalizeToken(std::string_view token);

// ---------------------------------------------------------------------------

// Deterministic in-process backend. Replies come from a scripted table keyed
// by exact prompt text, then from an optional responder function. Requests
// for more samples than scripted cycle through the script; temperature 0
// repeats the first scripted sample.
class MockBackend : public Backend {
 public:
  using Responder = std::function<CompletionResponse(const CompletionRequest &)>;

  explicit MockBackend(BackendDescriptor descriptor = {});

  const BackendDescriptor &descriptor() const override { return descriptor_; }
  CompletionResponse Generate(const CompletionRequest &request) override;

  void Script(std::string prompt, CompletionResponse response);
  void SetResponder(Responder responder) { responder_ = std::move(responder); }

  // Script file: {"descriptor": {...}, "entries": [{"prompt": str,
  // "response": {...}}]}.
  static std::unique_ptr<MockBackend> FromJson(const json &j);
  // Adds the "entries" of a script, keeping this backend's descriptor.
  void LoadScript(const json &j);
  json ToJson() const;

  std::int64_t requests_served() const { return served_.load(); }
  std::size_t script_size() const;

 private:
  BackendDescriptor descriptor_;
  mutable std::mutex mu_;
  std::map<std::string, CompletionResponse> script_;
  Responder responder_;
  std::atomic<std::int64_t> served_{0};
};

struct RetryPolicy {
  int max_attempts = 4;
  std::chrono::milliseconds initial_backoff{200};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{5000};
};

struct HttpOptions {
  RetryPolicy retry;
  int max_in_flight = 4;
  std::chrono::seconds timeout{120};
  // JSONL request/response log; disabled when empty.
  std::filesystem::path log_path;
};

// Client for the completion endpoint described at the top of this file.
// The endpoint in the descriptor can be overridden by the
// STRUCTPROMPT_ENDPOINT environment variable.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(BackendDescriptor descriptor, HttpOptions options = {});
  ~HttpBackend() override;

  const BackendDescriptor &descriptor() const override { return descriptor_; }
  CompletionResponse Generate(const CompletionRequest &request) override;

  std::int64_t attempts() const { return attempts_.load(); }

 private:
  struct Impl;
  BackendDescriptor descriptor_;
  HttpOptions options_;
  std::unique_ptr<Impl> impl_;
  std::atomic<std::int64_t> attempts_{0};
};

// ---------------------------------------------------------------------------

// Content digest of (descriptor, request); the endpoint is excluded.
std::string RequestDigest(const BackendDescriptor &descriptor,
                          const CompletionRequest &request);

std::string Sha256Hex(std::string_view data);

// Persistent content-addressed response cache: one JSON file per digest.
// Entries carry a checksum of their response; a mismatching or unreadable
// entry is treated as a miss, recomputed and overwritten with a warning.
class ScoreCache {
 public:
  explicit ScoreCache(std::filesystem::path dir);

  CompletionResponse GetOrScore(
      const std::string &key, const json &request_record,
      const std::function<CompletionResponse()> &compute);

  std::optional<CompletionResponse> Lookup(const std::string &key) const;

  std::filesystem::path PathFor(const std::string &key) const;
  const std::filesystem::path &dir() const { return dir_; }

  std::int64_t hits() const { return hits_.load(); }
  std::int64_t misses() const { return misses_.load(); }
  std::int64_t corrupt() const { return corrupt_.load(); }

 private:
  enum class Probe { kHit, kMissing, kCorrupt };
  Probe Read(const std::string &key, CompletionResponse *out) const;
  void Write(const std::string &key, const json &request_record,
             const CompletionResponse &response);

  std::filesystem::path dir_;
  mutable std::shared_mutex mu_;
  std::atomic<std::int64_t> hits_{0};
  std::atomic<std::int64_t> misses_{0};
  std::atomic<std::int64_t> corrupt_{0};
};

// Backend decorator that answers from a ScoreCache when possible.
class CachingBackend : public Backend {
 public:
  CachingBackend(Backend &inner, ScoreCache &cache)
      : inner_(inner), cache_(cache) {}

  const BackendDescriptor &descriptor() const override {
    return inner_.descriptor();
  }
  CompletionResponse Generate(const CompletionRequest &request) override;

 private:
  Backend &inner_;
  ScoreCache &cache_;
};

// Builds a backend from its descriptor: "mock" endpoints load a script file
// (path in model_id, or an empty mock when it is "mock"), anything else is
// an HTTP endpoint.
std::unique_ptr<Backend> MakeBackend(const BackendDescriptor &descriptor,
                                     const HttpOptions &options = {});

}  // namespace structprompt

#endif  // STRUCTPROMPT_LLM_BACKEND_H_
