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
#include "probelog/error.hpp"

namespace probelog {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kMaskedRowEmpty: return "MaskedRowEmpty";
    case ErrorCode::kDegenerateDescriptor: return "DegenerateDescriptor";
    case ErrorCode::kMaskedInput: return "MaskedInput";
    case ErrorCode::kProbeMismatch: return "ProbeMismatch";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kKTooLarge: return "KTooLarge";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kNormalizationMismatch: return "NormalizationMismatch";
    case ErrorCode::kEmptyGallery: return "EmptyGallery";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kEmptyRow: return "EmptyRow";
    case ErrorCode::kFractionOutOfRange: return "FractionOutOfRange";
    case ErrorCode::kRankTooLarge: return "RankTooLarge";
    case ErrorCode::kSingularSolve: return "SingularSolve";
    case ErrorCode::kEmptyEvalMask: return "EmptyEvalMask";
    case ErrorCode::kAllDegenerate: return "AllDegenerate";
    case ErrorCode::kCorruptFile: return "CorruptFile";
    case ErrorCode::kVersionUnsupported: return "VersionUnsupported";
    case ErrorCode::kInvariantViolation: return "InvariantViolation";
    case ErrorCode::kMissingLabel: return "MissingLabel";
    case ErrorCode::kConfigInvalid: return "ConfigInvalid";
    case ErrorCode::kEmptyQueries: return "EmptyQueries";
    case ErrorCode::kIo: return "IoError";
  }
  return "Unknown";
}

}  // namespace probelog
