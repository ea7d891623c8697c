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
#include "probelog/zero_shot.hpp"

#include <cmath>

#include "json_io.hpp"
#include "probelog/error.hpp"
#include "probelog/pblg.hpp"

namespace probelog {

using nlohmann::json;

using detail::read_json;
using detail::write_json;

std::filesystem::path sidecar_path(const std::filesystem::path& pblg) {
  auto p = pblg;
  p.replace_extension(".json");
  return p;
}

void ProbeEmbeddings::validate() const {
  if (n_probes == 0 || dim == 0 || matrix.size() != n_probes * dim) {
    throw Error(ErrorCode::kInvariantViolation, "probe embeddings have an invalid shape");
  }
  for (float v : matrix) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kInvariantViolation, "non-finite probe embedding");
    }
  }
}

Descriptor zero_shot_descriptor(const ProbeEmbeddings& pe, const TextEmbedding& te) {
  if (pe.dim != te.dim()) {
    throw Error(ErrorCode::kDimMismatch,
                "probe embedding dim " + std::to_string(pe.dim) +
                    " vs text embedding dim " + std::to_string(te.dim()));
  }
  Descriptor d;
  d.values.resize(pe.n_probes);
  for (std::size_t j = 0; j < pe.n_probes; ++j) {
    const auto row = pe.row(j);
    double dot = 0.0;
    for (std::size_t t = 0; t < pe.dim; ++t) {
      dot += static_cast<double>(row[t]) * static_cast<double>(te.vector[t]);
    }
    d.values[j] = static_cast<float>(dot);
  }
  d.origin.text_tag = te.prompt.empty() ? std::string("<text>") : te.prompt;
  return d;
}

void save_probe_embeddings(const ProbeEmbeddings& pe, const std::filesystem::path& pblg) {
  PblgMatrix m;
  m.rows = static_cast<std::uint32_t>(pe.n_probes);
  m.cols = static_cast<std::uint32_t>(pe.dim);
  m.values = pe.matrix;
  save_pblg(m, pblg);
  write_json(sidecar_path(pblg), {{"probe_hash", to_hex(pe.probe_hash)},
                                  {"dim", pe.dim},
                                  {"producer", pe.producer},
                                  {"unit_normalized", pe.unit_normalized}});
}

ProbeEmbeddings load_probe_embeddings(const std::filesystem::path& pblg) {
  auto m = load_pblg(pblg);
  const json side = read_json(sidecar_path(pblg));
  ProbeEmbeddings pe;
  try {
    pe.probe_hash = digest_from_hex(side.at("probe_hash").get<std::string>());
    pe.dim = side.at("dim").get<std::size_t>();
    pe.producer = side.value("producer", std::string());
    pe.unit_normalized = side.value("unit_normalized", false);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptFile, sidecar_path(pblg).string() + ": " + e.what());
  }
  if (m.cols != pe.dim) {
    throw Error(ErrorCode::kDimMismatch,
                pblg.string() + ": sidecar dim " + std::to_string(pe.dim) +
                    " vs " + std::to_string(m.cols) + " columns");
  }
  if (m.has_mask()) throw Error(ErrorCode::kCorruptFile, pblg.string() + ": embeddings cannot be masked");
  pe.n_probes = m.rows;
  pe.matrix = std::move(m.values);
  pe.validate();
  return pe;
}

void save_text_embedding(const TextEmbedding& te, const std::filesystem::path& pblg) {
  PblgMatrix m;
  m.rows = 1;
  m.cols = static_cast<std::uint32_t>(te.dim());
  m.values = te.vector;
  save_pblg(m, pblg);
  write_json(sidecar_path(pblg), {{"prompt", te.prompt},
                                  {"dim", te.dim()},
                                  {"producer", te.producer},
                                  {"unit_normalized", te.unit_normalized}});
}

TextEmbedding load_text_embedding(const std::filesystem::path& pblg) {
  auto m = load_pblg(pblg);
  const json side = read_json(sidecar_path(pblg));
  TextEmbedding te;
  std::size_t dim = 0;
  try {
    te.prompt = side.at("prompt").get<std::string>();
    dim = side.at("dim").get<std::size_t>();
    te.producer = side.value("producer", std::string());
    te.unit_normalized = side.value("unit_normalized", false);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptFile, sidecar_path(pblg).string() + ": " + e.what());
  }
  if (m.rows != 1 || m.cols != dim || m.has_mask()) {
    throw Error(ErrorCode::kDimMismatch,
                pblg.string() + ": text embedding must be a single unmasked row of dim " +
                    std::to_string(dim));
  }
  for (float v : m.values) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kInvariantViolation, pblg.string() + ": non-finite entry");
    }
  }
  te.vector = std::move(m.values);
  return te;
}

}  // namespace probelog
