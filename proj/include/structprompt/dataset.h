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

// Seeds, fold splits and JSONL plumbing shared by the task adapters.

#ifndef STRUCTPROMPT_DATASET_H_
#define STRUCTPROMPT_DATASET_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "structprompt/types.h"

namespace structprompt {

// A child seed for `label`, from the first 8 bytes of
// SHA-256("<seed>/<label>"). Stable across platforms and runs.
std::uint64_t DeriveSeed(std::uint64_t seed, std::string_view label);

// Fisher-Yates with rejection sampling, so the permutation does not depend
// on the standard library's distribution implementations.
void StableShuffle(std::vector<std::size_t> &items, std::uint64_t seed);

// Indices into the loaded item list, each sorted ascending.
struct FoldSplit {
  std::vector<std::size_t> train, dev, test;
};

// `folds` contiguous test blocks of a seeded permutation (sizes differ by at
// most one); `dev_fraction` of the remaining items, rounded, becomes dev.
// Throws kConfigError for folds < 1 or folds > n (when n > 0).
std::vector<FoldSplit> MakeFolds(std::size_t n, int folds, std::uint64_t seed,
                                 double dev_fraction = 0.1);

// Calls `line_fn(json, line_number)` for every non-blank line. Parse errors
// become kSchemaError citing the line; a missing file is kIoError.
void ForEachJsonLine(const std::filesystem::path &path,
                     const std::function<void(const json &, int)> &line_fn);

// Writes one compact JSON value per line, replacing the file atomically.
void WriteJsonLines(const std::filesystem::path &path,
                    const std::vector<json> &lines);

}  // namespace structprompt

#endif  // STRUCTPROMPT_DATASET_H_
