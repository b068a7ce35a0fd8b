// Copyright 2026 The fedorch Authors.
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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fedorch {

enum class Errc {
  kSyntaxError,
  kUnknownKind,
  kMissingProperty,
  kDuplicateNode,
  kCycleError,
  kTemplateError,
  kResourceUnderflow,
  kEmptyInput,
  kEmptyCandidates,
  kDuplicateRequestId,
  kInfeasible,
  kUnknownInstance,
  kUnknownNode,
  kAlreadyTransitioning,
  kAuthError,
  kNoEligibleProvider,
  kIllegalTransition,
  kNotFound,
  kUnknownToken,
  kExpired,
  kRevoked,
  kConfigError,
  kScenarioError,
  kInvariantViolation,
  kInvalidArgument,
};

/// Stable name of an error code, as it appears in CLI records and logs.
std::string_view ErrcName(Errc code);

/// Every domain failure is raised as an Error; the code is the contract,
/// the message is diagnostic text only.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string &message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }
  std::string_view name() const noexcept { return ErrcName(code_); }

 private:
  Errc code_;
};

inline std::string_view ErrcName(Errc code) {
  switch (code) {
    case Errc::kSyntaxError: return "SyntaxError";
    case Errc::kUnknownKind: return "UnknownKind";
    case Errc::kMissingProperty: return "MissingProperty";
    case Errc::kDuplicateNode: return "DuplicateNode";
    case Errc::kCycleError: return "CycleError";
    case Errc::kTemplateError: return "TemplateError";
    case Errc::kResourceUnderflow: return "ResourceUnderflow";
    case Errc::kEmptyInput: return "EmptyInput";
    case Errc::kEmptyCandidates: return "EmptyCandidates";
    case Errc::kDuplicateRequestId: return "DuplicateRequestId";
    case Errc::kInfeasible: return "Infeasible";
    case Errc::kUnknownInstance: return "UnknownInstance";
    case Errc::kUnknownNode: return "UnknownNode";
    case Errc::kAlreadyTransitioning: return "AlreadyTransitioning";
    case Errc::kAuthError: return "AuthError";
    case Errc::kNoEligibleProvider: return "NoEligibleProvider";
    case Errc::kIllegalTransition: return "IllegalTransition";
    case Errc::kNotFound: return "NotFound";
    case Errc::kUnknownToken: return "Unknown";
    case Errc::kExpired: return "Expired";
    case Errc::kRevoked: return "Revoked";
    case Errc::kConfigError: return "ConfigError";
    case Errc::kScenarioError: return "ScenarioError";
    case Errc::kInvariantViolation: return "InvariantViolation";
    case Errc::kInvalidArgument: return "InvalidArgument";
  }
  return "Error";
}

}  // namespace fedorch
