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

#include "structprompt/dataset.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "structprompt/error.h"
#include "structprompt/llm_backend.h"

namespace structprompt {

std::uint64_t DeriveSeed(std::uint64_t seed, std::string_view label) {
  std::string text = std::to_string(seed);
  text += '/';
  text += label;
  return std::stoull(Sha256Hex(text).substr(0, 16), nullptr, 16);
}

void StableShuffle(std::vector<std::size_t> &items, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::uint64_t bound = i;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t r;
    do {
      r = rng();
    } while (r >= limit);
    std::swap(items[i - 1], items[r % bound]);
  }
}

std::vector<FoldSplit> MakeFolds(std::size_t n, int folds, std::uint64_t seed,
                                 double dev_fraction) {
  if (folds < 1 || (n > 0 && static_cast<std::size_t>(folds) > n)) {
    throw Error(ErrorCode::kConfigError,
                "cannot split " + std::to_string(n) + " items into " +
                    std::to_string(folds) + " folds");
  }
  if (dev_fraction < 0 || dev_fraction >= 1) {
    throw Error(ErrorCode::kConfigError, "dev_fraction must be in [0, 1)");
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  StableShuffle(perm, DeriveSeed(seed, "folds"));

  std::vector<FoldSplit> out(folds);
  for (int f = 0; f < folds; ++f) {
    const std::size_t lo = n * f / folds, hi = n * (f + 1) / folds;
    FoldSplit &split = out[f];
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < n; ++i) {
      (i >= lo && i < hi ? split.test : rest).push_back(perm[i]);
    }
    // With a single fold everything is test data.
    if (folds == 1) rest.clear();
    StableShuffle(rest, DeriveSeed(seed, "dev/" + std::to_string(f)));
    const auto dev_count = static_cast<std::size_t>(
        std::lround(dev_fraction * static_cast<double>(rest.size())));
    split.dev.assign(rest.begin(), rest.begin() + dev_count);
    split.train.assign(rest.begin() + dev_count, rest.end());
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.dev.begin(), split.dev.end());
    std::sort(split.test.begin(), split.test.end());
  }
  return out;
}

void ForEachJsonLine(const std::filesystem::path &path,
                     const std::function<void(const json &, int)> &line_fn) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json value;
    try {
      value = json::parse(line);
    } catch (const json::exception &e) {
      throw Error(ErrorCode::kSchemaError, path.string() + ":" +
                                               std::to_string(number) + ": " +
                                               e.what());
    }
    line_fn(value, number);
  }
}

void WriteJsonLines(const std::filesystem::path &path,
                    const std::vector<json> &lines) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + tmp);
    for (const auto &l : lines) out << l.dump() << '\n';
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace structprompt
