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
#include "probelog/pblg.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "probelog/error.hpp"

namespace probelog {

namespace {

constexpr char kMagic[4] = {'P', 'B', 'L', 'G'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

std::vector<std::uint8_t> encode_pblg(const PblgMatrix& m) {
  const std::size_t n = static_cast<std::size_t>(m.rows) * m.cols;
  if (m.values.size() != n || (!m.mask.empty() && m.mask.size() != n)) {
    throw Error(ErrorCode::kShapeMismatch,
                "PBLG payload does not match " + std::to_string(m.rows) + "x" +
                    std::to_string(m.cols));
  }
  std::vector<std::uint8_t> out;
  out.reserve(PblgMatrix::kHeaderSize + 4 * n + (m.has_mask() ? (n + 7) / 8 : 0));
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u32(out, PblgMatrix::kVersion);
  put_u32(out, m.rows);
  put_u32(out, m.cols);
  std::uint8_t flags = 0;
  if (m.has_mask()) flags |= PblgMatrix::kFlagMask;
  if (m.completed) flags |= PblgMatrix::kFlagCompleted;
  out.push_back(flags);
  out.resize(PblgMatrix::kHeaderSize, 0);
  for (float v : m.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  if (m.has_mask()) {
    std::vector<std::uint8_t> bits((n + 7) / 8, 0);
    for (std::size_t t = 0; t < n; ++t) {
      if (m.mask[t]) bits[t / 8] |= static_cast<std::uint8_t>(1u << (t % 8));
    }
    out.insert(out.end(), bits.begin(), bits.end());
  }
  return out;
}

PblgMatrix decode_pblg(std::span<const std::uint8_t> bytes,
                       std::size_t* consumed) {
  if (bytes.size() < PblgMatrix::kHeaderSize) {
    throw Error(ErrorCode::kCorruptFile, "PBLG header truncated");
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::kCorruptFile, "bad PBLG magic");
  }
  const std::uint32_t version = get_u32(bytes.data() + 4);
  if (version != PblgMatrix::kVersion) {
    throw Error(ErrorCode::kVersionUnsupported,
                "PBLG version " + std::to_string(version) +
                    " (reader supports 1)");
  }
  PblgMatrix m;
  m.rows = get_u32(bytes.data() + 8);
  m.cols = get_u32(bytes.data() + 12);
  const std::uint8_t flags = bytes[16];
  if (flags & ~(PblgMatrix::kFlagMask | PblgMatrix::kFlagCompleted)) {
    throw Error(ErrorCode::kCorruptFile, "unknown PBLG flag bits");
  }
  for (std::size_t i = 17; i < PblgMatrix::kHeaderSize; ++i) {
    if (bytes[i] != 0) throw Error(ErrorCode::kCorruptFile, "non-zero PBLG padding");
  }
  m.completed = (flags & PblgMatrix::kFlagCompleted) != 0;
  const bool masked = (flags & PblgMatrix::kFlagMask) != 0;
  const std::size_t n = static_cast<std::size_t>(m.rows) * m.cols;
  if (n > bytes.size()) {
    throw Error(ErrorCode::kCorruptFile, "PBLG payload truncated");
  }
  const std::size_t mask_bytes = masked ? (n + 7) / 8 : 0;
  const std::size_t total = PblgMatrix::kHeaderSize + 4 * n + mask_bytes;
  if (bytes.size() < total) {
    throw Error(ErrorCode::kCorruptFile,
                "PBLG payload truncated: need " + std::to_string(total) +
                    " bytes, have " + std::to_string(bytes.size()));
  }
  m.values.resize(n);
  const std::uint8_t* p = bytes.data() + PblgMatrix::kHeaderSize;
  for (std::size_t t = 0; t < n; ++t, p += 4) {
    m.values[t] = std::bit_cast<float>(get_u32(p));
  }
  if (masked) {
    m.mask.resize(n);
    for (std::size_t t = 0; t < n; ++t) m.mask[t] = (p[t / 8] >> (t % 8)) & 1u;
  }
  if (consumed) *consumed = total;
  return m;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::kIo, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void save_pblg(const PblgMatrix& m, const std::filesystem::path& path) {
  write_file_bytes(path, encode_pblg(m));
}

PblgMatrix load_pblg(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  std::size_t used = 0;
  PblgMatrix m = decode_pblg(bytes, &used);
  if (used != bytes.size()) {
    throw Error(ErrorCode::kCorruptFile,
                path.string() + ": trailing bytes after PBLG block");
  }
  return m;
}

}  // namespace probelog
