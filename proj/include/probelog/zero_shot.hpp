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

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "probelog/descriptor.hpp"
#include "probelog/digest.hpp"

namespace probelog {

//! Image-side embeddings of every probe, in probe-set order.
struct ProbeEmbeddings {
  Digest probe_hash{};
  std::size_t n_probes = 0;
  std::size_t dim = 0;
  std::vector<float> matrix;  // n_probes x dim, row-major
  std::string producer;
  bool unit_normalized = false;

  std::span<const float> row(std::size_t probe) const {
    return {matrix.data() + probe * dim, dim};
  }
  //! Throws InvariantViolation on empty shape or non-finite entries.
  void validate() const;
};

struct TextEmbedding {
  std::string prompt;
  std::vector<float> vector;
  std::string producer;
  bool unit_normalized = false;

  std::size_t dim() const { return vector.size(); }
};

//! values[j] = <probe_j, text>, accumulated in double. The result is raw;
//! normalize before searching. Errors: DimMismatch.
Descriptor zero_shot_descriptor(const ProbeEmbeddings& pe, const TextEmbedding& te);

//! PBLG (rows = probes, cols = dim) + JSON sidecar
//! {probe_hash, dim, producer, unit_normalized}.
void save_probe_embeddings(const ProbeEmbeddings& pe, const std::filesystem::path& pblg);
ProbeEmbeddings load_probe_embeddings(const std::filesystem::path& pblg);

//! PBLG with one row + JSON sidecar {prompt, dim, producer, unit_normalized}.
void save_text_embedding(const TextEmbedding& te, const std::filesystem::path& pblg);
TextEmbedding load_text_embedding(const std::filesystem::path& pblg);

//! `foo.pblg` -> `foo.json`.
std::filesystem::path sidecar_path(const std::filesystem::path& pblg);

}  // namespace probelog
