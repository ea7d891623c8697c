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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "probelog/descriptor.hpp"

namespace probelog {

//! File name of the probe manifest inside a response directory.
inline constexpr const char* kProbeManifestName = "probeset.json";

//! Writes `path` (PBLG) and its JSON sidecar
//! {model_id, probe_hash, n_logits, n_probes, completed, ...extra}.
void save_response_matrix(const ResponseMatrix& rm, const std::filesystem::path& path,
                          const nlohmann::json& extra = nlohmann::json::object());
//! Errors: CorruptFile, ShapeMismatch (sidecar vs block), MaskedRowEmpty.
ResponseMatrix load_response_matrix(const std::filesystem::path& path);

struct ResponseDirectory {
  std::optional<ProbeSet> probes;
  std::vector<ResponseMatrix> matrices;
  std::vector<std::filesystem::path> files;
};

//! Loads every *.pblg in `dir` (sorted by file name) and checks each against
//! the directory's probe manifest. No matrices means an empty result; the
//! manifest is required otherwise. Errors: ProbeMismatch / ShapeMismatch
//! naming the file, Io.
ResponseDirectory load_response_directory(const std::filesystem::path& dir);

}  // namespace probelog
