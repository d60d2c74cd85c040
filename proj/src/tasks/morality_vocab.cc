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

#include "structprompt/morality.h"

namespace structprompt {

namespace {

constexpr std::array<std::string_view, kNumFoundations> kFoundationText = {
    "concern for the suffering of others, including virtues of caring and "
    "compassion, and condemnation of those who inflict harm",
    "concern for justice, equal treatment and reciprocity, and condemnation "
    "of cheating or unfair advantage",
    "obligations to one's group, family or nation, including patriotism and "
    "self-sacrifice, and condemnation of betrayal",
    "respect for legitimate leadership, tradition and social order, and "
    "condemnation of those who undermine it",
    "concern for sanctity and the avoidance of physical or spiritual "
    "contamination, and condemnation of degrading acts"};

constexpr std::array<std::string_view, kNumRoles> kRoleText = {
    "the entity that is cared for or harmed",
    "the entity that inflicts the harm",
    "the entity that offers care or protection",
    "the entity treated fairly or cheated",
    "the entity that secures fairness or justice",
    "the entity that cheats or acts unfairly",
    "the entity that is the object of loyalty or betrayal",
    "the entity that shows loyalty",
    "the entity that betrays",
    "a legitimate authority acting properly",
    "the entity under a legitimate authority",
    "an authority that fails or is subverted",
    "the entity under a failing authority",
    "the entity that is kept pure or degraded",
    "the entity that protects purity or sanctity",
    "the entity that degrades or contaminates"};

std::string Squash(std::string_view s) {
  std::string out;
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || c == '/') {
      out.push_back(static_cast<char>(std::tolower(u)));
    }
  }
  return out;
}

template <std::size_t N>
std::optional<int> Lookup(const std::array<std::string_view, N> &names,
                          std::string_view name) {
  const std::string want = Squash(name);
  for (std::size_t i = 0; i < N; ++i) {
    if (Squash(names[i]) == want) return static_cast<int>(i);
  }
  return std::nullopt;
}

}  // namespace

const AlignmentTable &MoralityAlignment() {
  static const AlignmentTable table = [] {
    AlignmentTable t(kNumFoundations);
    for (int r = 0; r < kNumRoles; ++r) t[kRoleFoundation[r]].push_back(r);
    return t;
  }();
  return table;
}

std::optional<int> FoundationIndex(std::string_view name) {
  return Lookup(kFoundations, name);
}

std::optional<int> RoleIndex(std::string_view name) {
  return Lookup(kRoles, name);
}

std::string_view FoundationDefinition(int foundation) {
  return kFoundationText.at(foundation);
}

std::string_view RoleDefinition(int role) { return kRoleText.at(role); }

}  // namespace structprompt
