// Copyright 2026 the probelog authors
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

namespace probelog {

enum class ErrorCode {
  kIndexOutOfRange,
  kMaskedRowEmpty,
  kDegenerateDescriptor,
  kMaskedInput,
  kProbeMismatch,
  kShapeMismatch,
  kKTooLarge,
  kLengthMismatch,
  kNormalizationMismatch,
  kEmptyGallery,
  kEmptyInput,
  kDimMismatch,
  kEmptyRow,
  kFractionOutOfRange,
  kRankTooLarge,
  kSingularSolve,
  kEmptyEvalMask,
  kAllDegenerate,
  kCorruptFile,
  kVersionUnsupported,
  kInvariantViolation,
  kMissingLabel,
  kConfigInvalid,
  kEmptyQueries,
  kIo,
};

std::string_view error_code_name(ErrorCode code);

//! Single exception type carried through the engine; the code identifies
//! the failure class, the message names the offending object.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace probelog
