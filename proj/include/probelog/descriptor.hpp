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
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "probelog/digest.hpp"
#include "probelog/pblg.hpp"

namespace probelog {

//! Ordered, repository-wide list of probe identifiers.
struct ProbeSet {
  std::vector<std::string> probe_ids;
  std::string source_name;
  Digest content_hash{};

  //! Builds the set and its hash; throws ConfigInvalid on duplicate ids.
  static ProbeSet create(std::vector<std::string> ids, std::string source);

  std::size_t size() const { return probe_ids.size(); }
};

//! SHA-256 over the ids in order, each encoded as a u32 little-endian byte
//! length followed by its UTF-8 bytes.
Digest probe_content_hash(std::span<const std::string> ids);

//! UTF-8 JSON manifest {source_name, probe_ids, content_hash}. Loading
//! recomputes the hash and rejects a mismatch (CorruptFile).
void save_probe_set(const ProbeSet& ps, const std::filesystem::path& path);
ProbeSet load_probe_set(const std::filesystem::path& path);

//! Raw responses of one model, logit-major: values[logit * n_probes + probe].
struct ResponseMatrix {
  std::string model_id;
  Digest probe_hash{};
  std::size_t n_logits = 0;
  std::size_t n_probes = 0;
  std::vector<float> values;
  //! One byte per entry, 1 = observed; empty means dense.
  std::vector<std::uint8_t> mask;
  //! Set when the values came out of matrix completion.
  bool completed = false;

  bool has_mask() const { return !mask.empty(); }
  bool observed(std::size_t logit, std::size_t probe) const {
    return mask.empty() || mask[logit * n_probes + probe] != 0;
  }
  std::span<const float> row(std::size_t logit) const {
    return {values.data() + logit * n_probes, n_probes};
  }
  //! True when no entry is masked out (mask absent or all ones).
  bool fully_observed() const;

  //! Throws InvariantViolation / MaskedRowEmpty on shape, finiteness or
  //! empty-row violations.
  void validate() const;

  PblgMatrix to_pblg() const;
  static ResponseMatrix from_pblg(PblgMatrix m, std::string model_id,
                                  const Digest& probe_hash);
};

struct DescriptorOrigin {
  static constexpr std::size_t kNoLogit = std::numeric_limits<std::size_t>::max();

  std::string model_id;
  std::size_t logit_index = kNoLogit;
  //! Non-empty for text-derived descriptors (holds the prompt).
  std::string text_tag;

  bool is_text() const { return !text_tag.empty(); }
};

struct Descriptor {
  std::vector<float> values;
  //! One byte per entry, 0 = unavailable; empty means all available.
  std::vector<std::uint8_t> available;
  bool normalized = false;
  double mu = 0.0;
  double sigma = 0.0;
  DescriptorOrigin origin;

  std::size_t size() const { return values.size(); }
  bool fully_available() const;
};

inline constexpr double kDegenerateEpsilon = 1e-9;

//! Row logit_index of rm as a raw descriptor; masked probes are flagged
//! unavailable. Errors: IndexOutOfRange, MaskedRowEmpty.
Descriptor extract_descriptor(const ResponseMatrix& rm, std::size_t logit_index);

//! Z-scores with the population standard deviation. The centered values are
//! formed as n*x_i - sum(x) in double precision, so any affine map that is
//! exact in floating point (power-of-two scale, representable shift) gives
//! bit-identical output. Errors: MaskedInput, DegenerateDescriptor.
Descriptor normalize_descriptor(const Descriptor& d,
                                double epsilon = kDegenerateEpsilon);

//! Errors: ProbeMismatch (both hashes), ShapeMismatch (both counts).
void validate_alignment(const ProbeSet& ps, const ResponseMatrix& rm);

}  // namespace probelog
