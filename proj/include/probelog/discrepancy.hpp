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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "probelog/descriptor.hpp"
#include "probelog/gallery.hpp"

namespace probelog {

enum class Strategy { kTopK, kBottomK, kRandom, kQuantiles, kAll, kTopKNoNorm };

std::string_view strategy_name(Strategy s);
//! Accepts topk, bottomk, random, quantiles, all, topk-nonorm.
//! Throws ConfigInvalid otherwise.
Strategy parse_strategy(std::string_view name);

struct DiscrepancyConfig {
  std::size_t k = 32;
  Strategy strategy = Strategy::kTopK;
  //! Only used by Strategy::kRandom.
  std::uint64_t seed = 0;
};

//! Probe positions compared for this query. Ties sort lower index first.
//! Errors: MaskedInput, KTooLarge, ConfigInvalid (k = 0).
std::vector<std::size_t> select_indices(const Descriptor& query,
                                        const DiscrepancyConfig& cfg);

//! L2 distance over the given positions.
double distance_at(std::span<const float> query, std::span<const float> gallery,
                   std::span<const std::size_t> indices);

//! Asymmetric distance: positions come from the query.
//! Errors: LengthMismatch, NormalizationMismatch.
double discrepancy(const Descriptor& query, const Descriptor& gallery,
                   const DiscrepancyConfig& cfg);

//! Discrepancy against a partially observed raw gallery row: both sides are
//! restricted to the row's available positions and standardized there, then
//! the query's top-k (or all, per cfg) positions within that subset are
//! compared. This is the no-completion baseline for sparsely probed hubs.
//! Errors: LengthMismatch, NormalizationMismatch (query must be raw),
//! DegenerateDescriptor, KTooLarge.
double observed_discrepancy(const Descriptor& query_raw,
                            const Descriptor& gallery_raw,
                            const DiscrepancyConfig& cfg);

struct RankedHit {
  std::string model_id;
  std::size_t logit_index = 0;
  double score = 0.0;

  bool operator==(const RankedHit&) const = default;
};

struct RankOptions {
  //! Keep only the best-scoring logit of each model.
  bool distinct_models = false;
  //! Skip the entry whose origin equals the query's origin.
  bool exclude_self = false;
  //! Skip every entry of this model.
  std::optional<std::string> exclude_model;
};

//! Scores every candidate, returns the top_m ascending by score with ties
//! broken by (model_id, logit_index). Errors: EmptyGallery, LengthMismatch.
std::vector<RankedHit> rank_descriptors(const Descriptor& query,
                                        std::span<const Descriptor> candidates,
                                        const DiscrepancyConfig& cfg,
                                        std::size_t top_m,
                                        const RankOptions& options = {});

std::vector<RankedHit> rank_gallery(const Descriptor& query, const Gallery& gallery,
                                    const DiscrepancyConfig& cfg, std::size_t top_m,
                                    const RankOptions& options = {});

//! Element-wise mean of normalized descriptors, re-standardized.
//! Errors: EmptyInput, LengthMismatch, NormalizationMismatch,
//! DegenerateDescriptor.
Descriptor model_level_descriptor(std::span<const Descriptor> model_descriptors);

}  // namespace probelog
