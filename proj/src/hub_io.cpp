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
#include "probelog/hub_io.hpp"

#include <algorithm>

#include "json_io.hpp"
#include "probelog/zero_shot.hpp"

namespace probelog {

using nlohmann::json;

void save_response_matrix(const ResponseMatrix& rm, const std::filesystem::path& path,
                          const json& extra) {
  save_pblg(rm.to_pblg(), path);
  json side = extra;
  side["model_id"] = rm.model_id;
  side["probe_hash"] = to_hex(rm.probe_hash);
  side["n_logits"] = rm.n_logits;
  side["n_probes"] = rm.n_probes;
  side["completed"] = rm.completed;
  detail::write_json(sidecar_path(path), side);
}

ResponseMatrix load_response_matrix(const std::filesystem::path& path) {
  auto block = load_pblg(path);
  const json side = detail::read_json(sidecar_path(path));
  std::string model_id;
  Digest hash{};
  std::size_t logits = 0, probes = 0;
  try {
    model_id = side.at("model_id").get<std::string>();
    hash = digest_from_hex(side.at("probe_hash").get<std::string>());
    logits = side.at("n_logits").get<std::size_t>();
    probes = side.at("n_probes").get<std::size_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptFile, sidecar_path(path).string() + ": " + e.what());
  }
  if (block.rows != logits || block.cols != probes) {
    throw Error(ErrorCode::kShapeMismatch,
                path.string() + ": sidecar says " + std::to_string(logits) + "x" +
                    std::to_string(probes) + ", block is " +
                    std::to_string(block.rows) + "x" + std::to_string(block.cols));
  }
  auto rm = ResponseMatrix::from_pblg(std::move(block), std::move(model_id), hash);
  try {
    rm.validate();
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
  return rm;
}

ResponseDirectory load_response_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::kIo, dir.string() + " is not a directory");
  }
  ResponseDirectory out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pblg") {
      out.files.push_back(entry.path());
    }
  }
  std::sort(out.files.begin(), out.files.end());
  if (out.files.empty()) return out;
  out.probes = load_probe_set(dir / kProbeManifestName);
  out.matrices.reserve(out.files.size());
  for (const auto& file : out.files) {
    auto rm = load_response_matrix(file);
    try {
      validate_alignment(*out.probes, rm);
    } catch (const Error& e) {
      throw Error(e.code(), file.string() + ": " + e.what());
    }
    out.matrices.push_back(std::move(rm));
  }
  return out;
}

}  // namespace probelog
