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

#ifndef STRUCTPROMPT_ERROR_H_
#define STRUCTPROMPT_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace structprompt {

// Every failure raised by the library carries one of these codes. The CLI
// maps them onto process exit codes (see ExitCodeFor).
enum class ErrorCode {
  // core_model
  kMissingScore,
  kDanglingReference,
  kPartialAssignment,
  kUnknownTag,
  kInvalidProblem,
  // constraint_compiler
  kZeroLabels,
  kEmptyOutcomeSet,
  kLabelSpaceMismatch,
  kOrphanRole,
  kInvalidClause,
  // ilp_engine
  kInfeasible,
  kBudgetExceeded,
  kTooLarge,
  // llm_backend
  kTransport,
  kCapabilityMissing,
  kMalformedResponse,
  kNoLogprobs,
  kCacheCorrupt,
  // scoring
  kAllZero,
  kOptionCollision,
  kEmptyText,
  kAllUnparseable,
  kParseFailure,
  // calibration
  kDimMismatch,
  kNoGold,
  kDiverged,
  kSolverBudget,
  // tasks
  kSchemaError,
  kRoleOutOfVocabulary,
  kMissingField,
  kPairIndexError,
  kInfeasibleAssignment,
  // experiments
  kLengthMismatch,
  kConfigError,
  kIoError,
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Process exit code for the CLI: 2 config errors, 3 data errors, 4 backend
// errors, 1 anything else.
int ExitCodeFor(ErrorCode code);

}  // namespace structprompt

#endif  // STRUCTPROMPT_ERROR_H_
