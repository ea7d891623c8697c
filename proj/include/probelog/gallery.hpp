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
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "probelog/descriptor.hpp"
#include "probelog/digest.hpp"
#include "probelog/labels.hpp"
#include "probelog/pblg.hpp"

namespace probelog {

struct GalleryEntry {
  std::optional<std::string> concept_label;
  //! Normalized; origin holds (model_id, logit_index).
  Descriptor descriptor;

  const std::string& model_id() const { return descriptor.origin.model_id; }
  std::size_t logit_index() const { return descriptor.origin.logit_index; }
};

struct ExclusionRecord {
  std::string model_id;
  std::size_t logit_index = 0;
  std::string reason;

  bool operator==(const ExclusionRecord&) const = default;
};

//! Repository-wide index of normalized descriptors, immutable after build.
struct Gallery {
  static constexpr std::uint32_t kFormatVersion = 1;
  static constexpr const char* kNormalization = "zscore-population-v1";

  Digest probe_hash{};
  std::size_t dim = 0;
  std::vector<GalleryEntry> entries;
  std::vector<ExclusionRecord> excluded;
  //! Model ids whose responses came out of matrix completion.
  std::vector<std::string> completed_models;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
};

//! One normalized descriptor per logit of every (dense) matrix; constant
//! logits are excluded and recorded. Errors: ProbeMismatch, MaskedInput,
//! InvariantViolation (duplicate model id), AllDegenerate.
Gallery build_gallery(std::span<const ResponseMatrix> responses,
                      const LabelTable* labels = nullptr);

//! Gallery file, little-endian:
//!   "PLGG" | u32 format version
//!   u64 length | UTF-8 JSON header
//!   u64 length | PBLG block (entries x dim, normalized descriptors)
//!   u32 entry count | per entry: u32 len + model_id, u32 logit_index,
//!       f64 mu, f64 sigma, u8 has_label, [u32 len + label]
//!   u32 section count | per section: u32 id, u64 length, bytes
//! Section id 1 is reserved for ANN sidecars; readers skip unknown ids.
std::vector<std::uint8_t> encode_gallery(const Gallery& g);
Gallery decode_gallery(std::span<const std::uint8_t> bytes);
void save_gallery(const Gallery& g, const std::filesystem::path& path);
//! Errors: CorruptFile, VersionUnsupported, InvariantViolation.
Gallery load_gallery(const std::filesystem::path& path);

struct CorrelationMatrix {
  std::size_t n = 0;
  std::vector<double> values;

  double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
  PblgMatrix to_pblg() const;
};

//! Pearson correlation between every pair of descriptors.
//! Errors: EmptyInput (< 2), LengthMismatch, DegenerateDescriptor, MaskedInput.
CorrelationMatrix correlation_matrix(std::span<const Descriptor> descriptors);

}  // namespace probelog
