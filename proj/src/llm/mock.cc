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

#include "structprompt/llm_backend.h"

namespace structprompt {

MockBackend::MockBackend(BackendDescriptor descriptor)
    : descriptor_(std::move(descriptor)) {}

void MockBackend::Script(std::string prompt, CompletionResponse response) {
  std::lock_guard<std::mutex> lock(mu_);
  script_[std::move(prompt)] = std::move(response);
}

std::size_t MockBackend::script_size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return script_.size();
}

CompletionResponse MockBackend::Generate(const CompletionRequest &request) {
  CompletionResponse base;
  bool found = false;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = script_.find(request.prompt);
    if (it != script_.end()) {
      base = it->second;
      found = true;
    }
  }
  if (!found) {
    if (!responder_) {
      throw Error(ErrorCode::kMalformedResponse,
                  "mock has no reply for prompt: " +
                      request.prompt.substr(0, 80));
    }
    base = responder_(request);
  }
  ++served_;
  if (base.samples.empty()) {
    throw Error(ErrorCode::kMalformedResponse, "scripted reply has no samples");
  }

  CompletionResponse out;
  out.prompt_logprobs = std::move(base.prompt_logprobs);
  const std::size_t n = static_cast<std::size_t>(request.n_samples);
  out.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t src = request.temperature == 0.0 ? 0 : i % base.samples.size();
    out.samples.push_back(base.samples[src]);
  }
  return out;
}

std::unique_ptr<MockBackend> MockBackend::FromJson(const json &j) {
  BackendDescriptor d;
  if (j.contains("descriptor")) d = j["descriptor"].get<BackendDescriptor>();
  auto mock = std::make_unique<MockBackend>(d);
  mock->LoadScript(j);
  return mock;
}

void MockBackend::LoadScript(const json &j) {
  if (!j.contains("entries")) return;
  try {
    for (const auto &e : j.at("entries")) {
      Script(e.at("prompt").get<std::string>(),
             e.at("response").get<CompletionResponse>());
    }
  } catch (const json::exception &e) {
    throw Error(ErrorCode::kConfigError,
                std::string("malformed mock script: ") + e.what());
  }
}

json MockBackend::ToJson() const {
  std::lock_guard<std::mutex> lock(mu_);
  json entries = json::array();
  for (const auto &[prompt, response] : script_) {
    entries.push_back({{"prompt", prompt}, {"response", response}});
  }
  return json{{"descriptor", descriptor_}, {"entries", std::move(entries)}};
}

}  // namespace structprompt
