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
#include "probelog/descriptor.hpp"

#include <cmath>
#include <fstream>
#include <unordered_set>

#include "json_io.hpp"
#include "probelog/error.hpp"

namespace probelog {

using nlohmann::json;

Digest probe_content_hash(std::span<const std::string> ids) {
  std::vector<std::uint8_t> buffer;
  for (const auto& id : ids) {
    const auto len = static_cast<std::uint32_t>(id.size());
    for (int i = 0; i < 4; ++i) buffer.push_back(static_cast<std::uint8_t>(len >> (8 * i)));
    buffer.insert(buffer.end(), id.begin(), id.end());
  }
  return sha256(buffer);
}

ProbeSet ProbeSet::create(std::vector<std::string> ids, std::string source) {
  std::unordered_set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) {
      throw Error(ErrorCode::kConfigInvalid, "duplicate probe id '" + id + "'");
    }
  }
  ProbeSet ps;
  ps.content_hash = probe_content_hash(ids);
  ps.probe_ids = std::move(ids);
  ps.source_name = std::move(source);
  return ps;
}

void save_probe_set(const ProbeSet& ps, const std::filesystem::path& path) {
  json j;
  j["source_name"] = ps.source_name;
  j["probe_ids"] = ps.probe_ids;
  j["content_hash"] = to_hex(ps.content_hash);
  detail::write_json(path, j);
}

ProbeSet load_probe_set(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  json j;
  try {
    in >> j;
    auto ps = ProbeSet::create(j.at("probe_ids").get<std::vector<std::string>>(),
                               j.at("source_name").get<std::string>());
    const Digest stored = digest_from_hex(j.at("content_hash").get<std::string>());
    if (stored != ps.content_hash) {
      throw Error(ErrorCode::kCorruptFile,
                  path.string() + ": content_hash " + to_hex(stored) +
                      " does not match ids (" + to_hex(ps.content_hash) + ")");
    }
    return ps;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptFile, path.string() + ": " + e.what());
  }
}

bool ResponseMatrix::fully_observed() const {
  for (auto m : mask) {
    if (!m) return false;
  }
  return true;
}

void ResponseMatrix::validate() const {
  if (n_logits == 0 || n_probes == 0) {
    throw Error(ErrorCode::kInvariantViolation,
                model_id + ": response matrix must have at least one logit and probe");
  }
  if (values.size() != n_logits * n_probes ||
      (!mask.empty() && mask.size() != values.size())) {
    throw Error(ErrorCode::kInvariantViolation, model_id + ": payload size mismatch");
  }
  for (std::size_t i = 0; i < n_logits; ++i) {
    bool any = false;
    for (std::size_t j = 0; j < n_probes; ++j) {
      if (!observed(i, j)) continue;
      any = true;
      if (!std::isfinite(values[i * n_probes + j])) {
        throw Error(ErrorCode::kInvariantViolation,
                    model_id + ": non-finite response at logit " +
                        std::to_string(i) + ", probe " + std::to_string(j));
      }
    }
    if (!any) {
      throw Error(ErrorCode::kMaskedRowEmpty,
                  model_id + ": logit " + std::to_string(i) + " has no observed probes");
    }
  }
}

PblgMatrix ResponseMatrix::to_pblg() const {
  PblgMatrix m;
  m.rows = static_cast<std::uint32_t>(n_logits);
  m.cols = static_cast<std::uint32_t>(n_probes);
  m.completed = completed;
  m.values = values;
  m.mask = mask;
  return m;
}

ResponseMatrix ResponseMatrix::from_pblg(PblgMatrix m, std::string model_id,
                                         const Digest& probe_hash) {
  ResponseMatrix rm;
  rm.model_id = std::move(model_id);
  rm.probe_hash = probe_hash;
  rm.n_logits = m.rows;
  rm.n_probes = m.cols;
  rm.completed = m.completed;
  rm.values = std::move(m.values);
  rm.mask = std::move(m.mask);
  return rm;
}

bool Descriptor::fully_available() const {
  for (auto a : available) {
    if (!a) return false;
  }
  return true;
}

Descriptor extract_descriptor(const ResponseMatrix& rm, std::size_t logit_index) {
  if (logit_index >= rm.n_logits) {
    throw Error(ErrorCode::kIndexOutOfRange,
                rm.model_id + ": logit " + std::to_string(logit_index) +
                    " out of range [0, " + std::to_string(rm.n_logits) + ")");
  }
  Descriptor d;
  const auto row = rm.row(logit_index);
  d.values.assign(row.begin(), row.end());
  if (rm.has_mask()) {
    const auto* m = rm.mask.data() + logit_index * rm.n_probes;
    d.available.assign(m, m + rm.n_probes);
    bool any = false;
    for (auto a : d.available) any = any || a;
    if (!any) {
      throw Error(ErrorCode::kMaskedRowEmpty,
                  rm.model_id + ": logit " + std::to_string(logit_index) +
                      " is fully masked");
    }
  }
  d.origin.model_id = rm.model_id;
  d.origin.logit_index = logit_index;
  return d;
}

Descriptor normalize_descriptor(const Descriptor& d, double epsilon) {
  if (!d.fully_available()) {
    throw Error(ErrorCode::kMaskedInput,
                "cannot normalize a descriptor with unavailable entries");
  }
  const std::size_t n = d.values.size();
  if (n == 0) throw Error(ErrorCode::kDegenerateDescriptor, "empty descriptor");
  const double count = static_cast<double>(n);
  double sum = 0.0;
  for (float v : d.values) sum += v;
  std::vector<double> centered(n);
  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    centered[i] = count * static_cast<double>(d.values[i]) - sum;
    sq += centered[i] * centered[i];
  }
  // centered = n * (x - mean), so std = sqrt(sq / n) / n.
  const double scaled_std = std::sqrt(sq / count);
  const double sigma = scaled_std / count;
  if (!(sigma > epsilon)) {
    throw Error(ErrorCode::kDegenerateDescriptor,
                "descriptor has population std " + std::to_string(sigma));
  }
  Descriptor out;
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.values[i] = static_cast<float>(centered[i] / scaled_std);
  }
  out.normalized = true;
  out.mu = sum / count;
  out.sigma = sigma;
  out.origin = d.origin;
  return out;
}

void validate_alignment(const ProbeSet& ps, const ResponseMatrix& rm) {
  if (rm.probe_hash != ps.content_hash) {
    throw Error(ErrorCode::kProbeMismatch,
                rm.model_id + ": probe hash " + to_hex(rm.probe_hash) +
                    " != probe set " + to_hex(ps.content_hash));
  }
  if (rm.n_probes != ps.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                rm.model_id + ": " + std::to_string(rm.n_probes) +
                    " columns vs " + std::to_string(ps.size()) + " probes");
  }
}

}  // namespace probelog
