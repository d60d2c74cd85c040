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

#include <openssl/evp.h>

#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "structprompt/llm_backend.h"

namespace structprompt {

namespace {

constexpr int kCacheVersion = 1;

}  // namespace

std::string Sha256Hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(),
                 nullptr) != 1) {
    throw Error(ErrorCode::kIoError, "SHA-256 failed");
  }
  static const char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 15]);
  }
  return out;
}

std::string RequestDigest(const BackendDescriptor &descriptor,
                          const CompletionRequest &request) {
  json j{{"version", kCacheVersion},
         {"mode", descriptor.mode == BackendMode::kWhiteBox ? "white_box"
                                                            : "black_box"},
         {"model_id", descriptor.model_id},
         {"request", request}};
  return Sha256Hex(j.dump());
}

ScoreCache::ScoreCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) {
    throw Error(ErrorCode::kIoError,
                "cannot create cache dir " + dir_.string() + ": " + ec.message());
  }
}

std::filesystem::path ScoreCache::PathFor(const std::string &key) const {
  const std::string shard = key.size() >= 2 ? key.substr(0, 2) : "xx";
  return dir_ / shard / (key + ".json");
}

ScoreCache::Probe ScoreCache::Read(const std::string &key,
                                   CompletionResponse *out) const {
  std::ifstream in(PathFor(key));
  if (!in) return Probe::kMissing;
  try {
    json entry;
    in >> entry;
    if (entry.at("version").get<int>() != kCacheVersion ||
        entry.at("key").get<std::string>() != key) {
      return Probe::kCorrupt;
    }
    const json &response = entry.at("response");
    if (Sha256Hex(response.dump()) != entry.at("checksum").get<std::string>()) {
      return Probe::kCorrupt;
    }
    *out = response.get<CompletionResponse>();
    return Probe::kHit;
  } catch (const json::exception &) {
    return Probe::kCorrupt;
  }
}

void ScoreCache::Write(const std::string &key, const json &request_record,
                       const CompletionResponse &response) {
  json payload = response;
  json entry{{"version", kCacheVersion},
             {"key", key},
             {"request", request_record},
             {"response", payload},
             {"checksum", Sha256Hex(payload.dump())}};
  const auto path = PathFor(key);
  std::ostringstream suffix;
  suffix << ".tmp." << std::this_thread::get_id();
  const auto tmp = path.string() + suffix.str();

  std::unique_lock<std::shared_mutex> lock(mu_);
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << entry.dump() << '\n';
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + tmp);
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw Error(ErrorCode::kIoError,
                "cannot commit cache entry " + path.string() + ": " +
                    ec.message());
  }
}

std::optional<CompletionResponse> ScoreCache::Lookup(
    const std::string &key) const {
  std::shared_lock<std::shared_mutex> lock(mu_);
  CompletionResponse r;
  if (Read(key, &r) == Probe::kHit) return r;
  return std::nullopt;
}

CompletionResponse ScoreCache::GetOrScore(
    const std::string &key, const json &request_record,
    const std::function<CompletionResponse()> &compute) {
  CompletionResponse cached;
  Probe probe;
  {
    std::shared_lock<std::shared_mutex> lock(mu_);
    probe = Read(key, &cached);
  }
  if (probe == Probe::kHit) {
    ++hits_;
    return cached;
  }
  if (probe == Probe::kCorrupt) {
    ++corrupt_;
    std::cerr << "warning: " << ErrorCodeName(ErrorCode::kCacheCorrupt)
              << ": entry " << PathFor(key).string()
              << " failed verification; recomputing\n";
  }
  ++misses_;
  CompletionResponse fresh = compute();
  Write(key, request_record, fresh);
  return fresh;
}

CompletionResponse CachingBackend::Generate(const CompletionRequest &request) {
  const std::string key = RequestDigest(inner_.descriptor(), request);
  return cache_.GetOrScore(key, json(request),
                           [&] { return Complete(inner_, request); });
}

}  // namespace structprompt
