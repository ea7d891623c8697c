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
#include "probelog/gallery.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <set>

#include "json.hpp"
#include "probelog/error.hpp"

namespace probelog {

using nlohmann::json;

namespace {

constexpr char kGalleryMagic[4] = {'P', 'L', 'G', 'G'};
constexpr double kInvariantTolerance = 1e-5;

class Writer {
 public:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str32(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::span<const std::uint8_t> take(std::uint64_t n) {
    if (n > bytes_.size() - pos_) {
      throw Error(ErrorCode::kCorruptFile, "gallery file truncated at byte " +
                                               std::to_string(pos_));
    }
    auto s = bytes_.subspan(pos_, static_cast<std::size_t>(n));
    pos_ += static_cast<std::size_t>(n);
    return s;
  }
  std::uint8_t u8() { return take(1)[0]; }
  std::uint32_t u32() {
    auto s = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(s[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    auto s = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(s[i]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str32() {
    auto s = take(u32());
    return std::string(reinterpret_cast<const char*>(s.data()), s.size());
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void check_normalized(std::span<const float> v, const std::string& who) {
  double sum = 0.0;
  for (float x : v) sum += x;
  const double mean = sum / static_cast<double>(v.size());
  double sq = 0.0;
  for (float x : v) sq += (x - mean) * (x - mean);
  const double sd = std::sqrt(sq / static_cast<double>(v.size()));
  if (!(std::abs(mean) <= kInvariantTolerance) ||
      !(std::abs(sd - 1.0) <= kInvariantTolerance)) {
    throw Error(ErrorCode::kInvariantViolation,
                who + ": descriptor is not standardized (mean " +
                    std::to_string(mean) + ", std " + std::to_string(sd) + ")");
  }
}

}  // namespace

Gallery build_gallery(std::span<const ResponseMatrix> responses,
                      const LabelTable* labels) {
  if (responses.empty()) {
    throw Error(ErrorCode::kAllDegenerate, "no response matrices found");
  }
  Gallery g;
  g.probe_hash = responses.front().probe_hash;
  g.dim = responses.front().n_probes;
  std::set<std::string> models;
  for (const auto& rm : responses) {
    if (rm.probe_hash != g.probe_hash) {
      throw Error(ErrorCode::kProbeMismatch,
                  rm.model_id + ": probe hash " + to_hex(rm.probe_hash) +
                      " differs from " + to_hex(g.probe_hash));
    }
    if (rm.n_probes != g.dim) {
      throw Error(ErrorCode::kShapeMismatch,
                  rm.model_id + ": " + std::to_string(rm.n_probes) +
                      " probes, expected " + std::to_string(g.dim));
    }
    if (!rm.fully_observed()) {
      throw Error(ErrorCode::kMaskedInput,
                  rm.model_id + ": masked responses must be completed first");
    }
    if (!models.insert(rm.model_id).second) {
      throw Error(ErrorCode::kInvariantViolation,
                  "duplicate model id '" + rm.model_id + "'");
    }
    if (rm.completed) g.completed_models.push_back(rm.model_id);
    for (std::size_t i = 0; i < rm.n_logits; ++i) {
      try {
        GalleryEntry e;
        e.descriptor = normalize_descriptor(extract_descriptor(rm, i));
        if (labels) e.concept_label = labels->find(rm.model_id, i);
        g.entries.push_back(std::move(e));
      } catch (const Error& err) {
        if (err.code() != ErrorCode::kDegenerateDescriptor) throw;
        g.excluded.push_back({rm.model_id, i, "constant logit"});
      }
    }
  }
  if (g.entries.empty()) {
    throw Error(ErrorCode::kAllDegenerate, "every logit is constant");
  }
  return g;
}

std::vector<std::uint8_t> encode_gallery(const Gallery& g) {
  json header;
  header["format"] = "probelog-gallery";
  header["version"] = Gallery::kFormatVersion;
  header["probe_hash"] = to_hex(g.probe_hash);
  header["dim"] = g.dim;
  header["entries"] = g.entries.size();
  header["normalization"] = Gallery::kNormalization;
  header["completed_models"] = g.completed_models;
  header["reserved_sections"] = {{"ann", 1}};
  json excluded = json::array();
  for (const auto& x : g.excluded) {
    excluded.push_back({{"model_id", x.model_id},
                        {"logit_index", x.logit_index},
                        {"reason", x.reason}});
  }
  header["excluded"] = std::move(excluded);

  PblgMatrix block;
  block.rows = static_cast<std::uint32_t>(g.entries.size());
  block.cols = static_cast<std::uint32_t>(g.dim);
  block.values.reserve(g.entries.size() * g.dim);
  for (const auto& e : g.entries) {
    if (e.descriptor.size() != g.dim || !e.descriptor.normalized) {
      throw Error(ErrorCode::kInvariantViolation,
                  e.model_id() + ": only normalized descriptors of length " +
                      std::to_string(g.dim) + " can be stored");
    }
    block.values.insert(block.values.end(), e.descriptor.values.begin(),
                        e.descriptor.values.end());
  }

  Writer w;
  w.raw(kGalleryMagic, 4);
  w.u32(Gallery::kFormatVersion);
  const std::string header_text = header.dump();
  w.u64(header_text.size());
  w.raw(header_text.data(), header_text.size());
  const auto pblg = encode_pblg(block);
  w.u64(pblg.size());
  w.raw(pblg.data(), pblg.size());
  w.u32(static_cast<std::uint32_t>(g.entries.size()));
  for (const auto& e : g.entries) {
    w.str32(e.model_id());
    w.u32(static_cast<std::uint32_t>(e.logit_index()));
    w.f64(e.descriptor.mu);
    w.f64(e.descriptor.sigma);
    w.u8(e.concept_label ? 1 : 0);
    if (e.concept_label) w.str32(*e.concept_label);
  }
  w.u32(0);  // no optional sections
  return w.take();
}

Gallery decode_gallery(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  auto magic = r.take(4);
  if (std::memcmp(magic.data(), kGalleryMagic, 4) != 0) {
    throw Error(ErrorCode::kCorruptFile, "bad gallery magic");
  }
  const std::uint32_t version = r.u32();
  if (version != Gallery::kFormatVersion) {
    throw Error(ErrorCode::kVersionUnsupported,
                "gallery version " + std::to_string(version) +
                    " (reader supports " +
                    std::to_string(Gallery::kFormatVersion) + ")");
  }
  Gallery g;
  json header;
  try {
    auto text = r.take(r.u64());
    header = json::parse(text.begin(), text.end());
    if (header.at("normalization").get<std::string>() != Gallery::kNormalization) {
      throw Error(ErrorCode::kVersionUnsupported,
                  "unknown normalization " + header.at("normalization").dump());
    }
    g.probe_hash = digest_from_hex(header.at("probe_hash").get<std::string>());
    g.dim = header.at("dim").get<std::size_t>();
    g.completed_models = header.at("completed_models").get<std::vector<std::string>>();
    for (const auto& x : header.at("excluded")) {
      g.excluded.push_back({x.at("model_id").get<std::string>(),
                            x.at("logit_index").get<std::size_t>(),
                            x.at("reason").get<std::string>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptFile, std::string("gallery header: ") + e.what());
  }
  const auto block_bytes = r.take(r.u64());
  std::size_t used = 0;
  PblgMatrix block = decode_pblg(block_bytes, &used);
  if (used != block_bytes.size() || block.cols != g.dim || block.has_mask()) {
    throw Error(ErrorCode::kCorruptFile, "gallery descriptor block malformed");
  }
  const std::uint32_t count = r.u32();
  if (count != block.rows || count != header.value("entries", std::size_t{0})) {
    throw Error(ErrorCode::kCorruptFile,
                "entry table has " + std::to_string(count) + " records for " +
                    std::to_string(block.rows) + " descriptors");
  }
  std::set<std::pair<std::string, std::size_t>> seen;
  g.entries.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    GalleryEntry e;
    e.descriptor.origin.model_id = r.str32();
    e.descriptor.origin.logit_index = r.u32();
    e.descriptor.mu = r.f64();
    e.descriptor.sigma = r.f64();
    if (r.u8()) e.concept_label = r.str32();
    e.descriptor.normalized = true;
    const float* row = block.values.data() + static_cast<std::size_t>(i) * g.dim;
    e.descriptor.values.assign(row, row + g.dim);
    const std::string who =
        e.model_id() + "#" + std::to_string(e.logit_index());
    if (!seen.insert({e.model_id(), e.logit_index()}).second) {
      throw Error(ErrorCode::kInvariantViolation, "duplicate gallery entry " + who);
    }
    if (!(e.descriptor.sigma > 0.0)) {
      throw Error(ErrorCode::kInvariantViolation, who + ": sigma must be positive");
    }
    check_normalized(e.descriptor.values, who);
    g.entries.push_back(std::move(e));
  }
  const std::uint32_t sections = r.u32();
  for (std::uint32_t s = 0; s < sections; ++s) {
    r.u32();
    r.take(r.u64());
  }
  if (!r.done()) throw Error(ErrorCode::kCorruptFile, "trailing bytes in gallery file");
  return g;
}

void save_gallery(const Gallery& g, const std::filesystem::path& path) {
  write_file_bytes(path, encode_gallery(g));
}

Gallery load_gallery(const std::filesystem::path& path) {
  try {
    return decode_gallery(read_file_bytes(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIo) throw;
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

PblgMatrix CorrelationMatrix::to_pblg() const {
  PblgMatrix m;
  m.rows = m.cols = static_cast<std::uint32_t>(n);
  m.values.reserve(values.size());
  for (double v : values) m.values.push_back(static_cast<float>(v));
  return m;
}

CorrelationMatrix correlation_matrix(std::span<const Descriptor> descriptors) {
  if (descriptors.size() < 2) {
    throw Error(ErrorCode::kEmptyInput, "correlation needs at least two descriptors");
  }
  const std::size_t len = descriptors.front().size();
  std::vector<std::vector<double>> z;
  z.reserve(descriptors.size());
  for (const auto& d : descriptors) {
    if (d.size() != len) {
      throw Error(ErrorCode::kLengthMismatch,
                  "descriptor lengths " + std::to_string(d.size()) + " and " +
                      std::to_string(len));
    }
    if (!d.fully_available()) {
      throw Error(ErrorCode::kMaskedInput, "correlation needs fully observed descriptors");
    }
    double sum = 0.0;
    for (float v : d.values) sum += v;
    const double mean = sum / static_cast<double>(len);
    std::vector<double> c(len);
    double sq = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      c[i] = d.values[i] - mean;
      sq += c[i] * c[i];
    }
    const double norm = std::sqrt(sq);
    if (!(norm / std::sqrt(static_cast<double>(len)) > kDegenerateEpsilon)) {
      throw Error(ErrorCode::kDegenerateDescriptor,
                  "constant descriptor in correlation input");
    }
    for (auto& v : c) v /= norm;
    z.push_back(std::move(c));
  }
  CorrelationMatrix out;
  out.n = z.size();
  out.values.assign(out.n * out.n, 0.0);
  for (std::size_t i = 0; i < out.n; ++i) {
    out.values[i * out.n + i] = 1.0;
    for (std::size_t j = i + 1; j < out.n; ++j) {
      double dot = 0.0;
      for (std::size_t t = 0; t < len; ++t) dot += z[i][t] * z[j][t];
      out.values[i * out.n + j] = out.values[j * out.n + i] = dot;
    }
  }
  return out;
}

}  // namespace probelog
