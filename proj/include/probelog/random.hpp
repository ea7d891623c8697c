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
#include <vector>

namespace probelog {

//! SplitMix64 (Steele, Lea, Flood 2014): 64-bit state, output is a
//! bijective mix of the state advanced by the golden-ratio increment.
//! Every derived draw below is defined on top of next() alone, so streams
//! are bit-identical across platforms and standard libraries.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  //! Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  //! Uniform integer in [0, bound) by rejection (no modulo bias).
  std::uint64_t below(std::uint64_t bound);

  //! Standard normal via Box-Muller; the spare value is cached.
  double gaussian();

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

//! Derives an independent stream seed from (seed, stream) so per-model and
//! per-row draws do not depend on iteration order.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

//! k distinct indices from [0, n) via partial Fisher-Yates, in draw order.
std::vector<std::size_t> sample_without_replacement(SplitMix64& rng,
                                                    std::size_t n,
                                                    std::size_t k);

}  // namespace probelog
