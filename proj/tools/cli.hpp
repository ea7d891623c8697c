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

#include <iosfwd>
#include <string>
#include <vector>

namespace probelog::cli {

//! Exit codes: 0 ok, 1 internal error, 2 probe/shape/dimension mismatch,
//! 3 all logits degenerate (or no inputs), 4 degenerate descriptor, 5 rank
//! too large, 6 empty row, 7 invalid configuration or usage, 8 unreadable
//! or invalid input file.
enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kMismatch = 2,
  kAllDegenerate = 3,
  kDegenerate = 4,
  kRankTooLarge = 5,
  kEmptyRow = 6,
  kConfigInvalid = 7,
  kBadInput = 8,
};

//! args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace probelog::cli
