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

#include <cstdlib>
#include <fstream>
#include <regex>
#include <semaphore>
#include <thread>

#include "httplib.h"
#include "structprompt/llm_backend.h"

namespace structprompt {

struct HttpBackend::Impl {
  explicit Impl(int limit) : slots(limit) {}

  std::string base;  // scheme://host[:port]
  std::string path;
  std::counting_semaphore<1024> slots;
  std::mutex log_mu;
  std::ofstream log;
};

namespace {

class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<1024> &s) : s_(s) { s_.acquire(); }
  ~SlotGuard() { s_.release(); }

 private:
  std::counting_semaphore<1024> &s_;
};

}  // namespace

HttpBackend::HttpBackend(BackendDescriptor descriptor, HttpOptions options)
    : descriptor_(std::move(descriptor)), options_(std::move(options)) {
  if (const char *env = std::getenv("STRUCTPROMPT_ENDPOINT");
      env != nullptr && *env != '\0') {
    descriptor_.endpoint = env;
  }
  if (options_.max_in_flight < 1 || options_.max_in_flight > 1024) {
    throw Error(ErrorCode::kConfigError, "max_in_flight must be in [1, 1024]");
  }
  if (options_.retry.max_attempts < 1) {
    throw Error(ErrorCode::kConfigError, "max_attempts must be positive");
  }
  static const std::regex kUrl(R"(^(http://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(descriptor_.endpoint, m, kUrl)) {
    throw Error(ErrorCode::kConfigError,
                "unsupported endpoint '" + descriptor_.endpoint +
                    "' (expected http://host[:port]/path)");
  }
  impl_ = std::make_unique<Impl>(options_.max_in_flight);
  impl_->base = m[1].str();
  impl_->path = m[2].matched ? m[2].str() : "/";
  if (!options_.log_path.empty()) {
    impl_->log.open(options_.log_path, std::ios::app);
    if (!impl_->log) {
      throw Error(ErrorCode::kIoError,
                  "cannot open request log " + options_.log_path.string());
    }
  }
}

HttpBackend::~HttpBackend() = default;

CompletionResponse HttpBackend::Generate(const CompletionRequest &request) {
  json body = request;
  body["model"] = descriptor_.model_id;
  const std::string payload = body.dump();

  SlotGuard slot(impl_->slots);
  auto backoff = options_.retry.initial_backoff;
  std::string last_error;
  for (int attempt = 1; attempt <= options_.retry.max_attempts; ++attempt) {
    ++attempts_;
    httplib::Client client(impl_->base);
    client.set_connection_timeout(options_.timeout);
    client.set_read_timeout(options_.timeout);
    client.set_write_timeout(options_.timeout);
    auto res = client.Post(impl_->path, payload, "application/json");

    bool retryable = false;
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
      retryable = true;
    } else if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      retryable = true;
    } else if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status) + ": " + res->body;
    }

    if (impl_->log.is_open()) {
      json line{{"attempt", attempt}, {"request", body}};
      if (res) {
        line["status"] = res->status;
        line["response"] = res->body;
      } else {
        line["error"] = last_error;
      }
      std::lock_guard<std::mutex> lock(impl_->log_mu);
      impl_->log << line.dump() << '\n';
      impl_->log.flush();
    }

    if (res && res->status == 200) {
      try {
        return json::parse(res->body).get<CompletionResponse>();
      } catch (const json::exception &e) {
        throw Error(ErrorCode::kMalformedResponse,
                    std::string("unparseable completion: ") + e.what());
      }
    }
    if (!retryable) break;
    if (attempt < options_.retry.max_attempts) {
      std::this_thread::sleep_for(backoff);
      backoff = std::min(
          options_.retry.max_backoff,
          std::chrono::milliseconds(static_cast<std::int64_t>(
              static_cast<double>(backoff.count()) * options_.retry.multiplier)));
    }
  }
  throw Error(ErrorCode::kTransport,
              descriptor_.endpoint + ": " + last_error);
}

}  // namespace structprompt
