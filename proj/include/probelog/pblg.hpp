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
#include <span>
#include <vector>

namespace probelog {

//! In-memory image of a "PBLG" block: a row-major float32 matrix with an
//! optional observation mask.
//!
//! On-disk layout (all integers little-endian):
//!   [0,4)   magic "PBLG"
//!   [4,8)   u32 version (= 1)
//!   [8,12)  u32 rows
//!   [12,16) u32 cols
//!   [16]    u8 flags: bit0 mask present, bit1 completed
//!   [17,32) zero padding
//!   rows*cols float32, row-major
//!   if bit0: ceil(rows*cols/8) bytes, entry t = r*cols + c at byte t/8,
//!            bit t%8 (LSB first), 1 = observed
struct PblgMatrix {
  static constexpr std::uint32_t kVersion = 1;
  static constexpr std::uint8_t kFlagMask = 0x01;
  static constexpr std::uint8_t kFlagCompleted = 0x02;
  static constexpr std::size_t kHeaderSize = 32;

  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  bool completed = false;
  std::vector<float> values;
  //! One byte per entry (0/1); empty when no mask is attached.
  std::vector<std::uint8_t> mask;

  bool has_mask() const { return !mask.empty(); }
  float at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  bool observed(std::size_t r, std::size_t c) const {
    return mask.empty() || mask[r * cols + c] != 0;
  }

  bool operator==(const PblgMatrix&) const = default;
};

std::vector<std::uint8_t> encode_pblg(const PblgMatrix& m);

//! Decodes one block starting at bytes[0]; consumed receives the block size.
//! Errors: CorruptFile (magic, truncation, padding, flags),
//! VersionUnsupported.
PblgMatrix decode_pblg(std::span<const std::uint8_t> bytes,
                       std::size_t* consumed = nullptr);

void save_pblg(const PblgMatrix& m, const std::filesystem::path& path);
PblgMatrix load_pblg(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
//! Writes to a temporary sibling then renames into place.
void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes);

}  // namespace probelog
