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
#include "probelog/discrepancy.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <tuple>

#include "probelog/error.hpp"
#include "probelog/parallel.hpp"
#include "probelog/random.hpp"

namespace probelog {

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kTopK: return "topk";
    case Strategy::kBottomK: return "bottomk";
    case Strategy::kRandom: return "random";
    case Strategy::kQuantiles: return "quantiles";
    case Strategy::kAll: return "all";
    case Strategy::kTopKNoNorm: return "topk-nonorm";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  for (auto s : {Strategy::kTopK, Strategy::kBottomK, Strategy::kRandom,
                 Strategy::kQuantiles, Strategy::kAll, Strategy::kTopKNoNorm}) {
    if (strategy_name(s) == name) return s;
  }
  throw Error(ErrorCode::kConfigInvalid, "unknown strategy '" + std::string(name) + "'");
}

namespace {

// Indices of `values` restricted to `pool`, ordered by value (descending when
// `descending`), ties by lower index; only the first `count` are sorted.
std::vector<std::size_t> ordered_indices(std::span<const float> values,
                                         std::vector<std::size_t> pool,
                                         std::size_t count, bool descending) {
  auto cmp = [&](std::size_t a, std::size_t b) {
    if (values[a] != values[b]) {
      return descending ? values[a] > values[b] : values[a] < values[b];
    }
    return a < b;
  };
  count = std::min(count, pool.size());
  std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(count),
                    pool.end(), cmp);
  pool.resize(count);
  return pool;
}

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

std::vector<std::size_t> select_from(std::span<const float> values,
                                     std::vector<std::size_t> pool,
                                     const DiscrepancyConfig& cfg) {
  const std::size_t n = pool.size();
  if (cfg.strategy == Strategy::kAll) return pool;
  if (cfg.k == 0) throw Error(ErrorCode::kConfigInvalid, "k must be positive");
  if (cfg.k > n) {
    throw Error(ErrorCode::kKTooLarge,
                "k = " + std::to_string(cfg.k) + " exceeds " + std::to_string(n) +
                    " probes");
  }
  switch (cfg.strategy) {
    case Strategy::kTopK:
    case Strategy::kTopKNoNorm:
      return ordered_indices(values, std::move(pool), cfg.k, true);
    case Strategy::kBottomK:
      return ordered_indices(values, std::move(pool), cfg.k, false);
    case Strategy::kRandom: {
      SplitMix64 rng(cfg.seed);
      auto picks = sample_without_replacement(rng, n, cfg.k);
      for (auto& p : picks) p = pool[p];
      return picks;
    }
    case Strategy::kQuantiles: {
      auto sorted = ordered_indices(values, std::move(pool), n, true);
      std::vector<std::size_t> out;
      out.reserve(cfg.k);
      for (std::size_t i = 0; i < cfg.k; ++i) {
        const std::size_t pos = cfg.k == 1 ? 0 : i * (n - 1) / (cfg.k - 1);
        out.push_back(sorted[pos]);
      }
      return out;
    }
    case Strategy::kAll:
      break;
  }
  return pool;
}

void check_pair(const Descriptor& query, const Descriptor& gallery,
                const DiscrepancyConfig& cfg) {
  if (query.size() != gallery.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "query length " + std::to_string(query.size()) +
                    " vs gallery length " + std::to_string(gallery.size()));
  }
  const bool want_normalized = cfg.strategy != Strategy::kTopKNoNorm;
  if (query.normalized != want_normalized || gallery.normalized != want_normalized) {
    throw Error(ErrorCode::kNormalizationMismatch,
                std::string("strategy ") + std::string(strategy_name(cfg.strategy)) +
                    " requires " + (want_normalized ? "normalized" : "raw") +
                    " descriptors on both sides");
  }
}

// Shared scan over any candidate container; `at(i)` yields a Descriptor.
std::vector<RankedHit> rank_impl(
    const Descriptor& query, std::size_t count,
    const std::function<const Descriptor&(std::size_t)>& at,
    const DiscrepancyConfig& cfg, std::size_t top_m, const RankOptions& options) {
  if (count == 0) throw Error(ErrorCode::kEmptyGallery, "gallery is empty");
  const auto indices = select_indices(query, cfg);
  std::vector<double> scores(count);
  std::vector<char> keep(count, 1);
  parallel_for(count, [&](std::size_t i) {
    const Descriptor& g = at(i);
    const auto& origin = g.origin;
    if (options.exclude_model && origin.model_id == *options.exclude_model) {
      keep[i] = 0;
      return;
    }
    if (options.exclude_self && !query.origin.is_text() &&
        origin.model_id == query.origin.model_id &&
        origin.logit_index == query.origin.logit_index) {
      keep[i] = 0;
      return;
    }
    check_pair(query, g, cfg);
    scores[i] = distance_at(query.values, g.values, indices);
  });
  std::vector<std::size_t> order;
  order.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (keep[i]) order.push_back(i);
  }
  auto less = [&](std::size_t a, std::size_t b) {
    const auto& oa = at(a).origin;
    const auto& ob = at(b).origin;
    return std::tie(scores[a], oa.model_id, oa.logit_index) <
           std::tie(scores[b], ob.model_id, ob.logit_index);
  };
  std::sort(order.begin(), order.end(), less);
  std::vector<RankedHit> out;
  std::set<std::string> seen_models;
  for (std::size_t i : order) {
    if (out.size() >= top_m) break;
    const auto& origin = at(i).origin;
    if (options.distinct_models && !seen_models.insert(origin.model_id).second) continue;
    out.push_back({origin.model_id, origin.logit_index, scores[i]});
  }
  return out;
}

}  // namespace

std::vector<std::size_t> select_indices(const Descriptor& query,
                                        const DiscrepancyConfig& cfg) {
  if (!query.fully_available()) {
    throw Error(ErrorCode::kMaskedInput, "query descriptor must be fully observed");
  }
  return select_from(query.values, iota_indices(query.size()), cfg);
}

double distance_at(std::span<const float> query, std::span<const float> gallery,
                   std::span<const std::size_t> indices) {
  double sum = 0.0;
  for (std::size_t i : indices) {
    const double d = static_cast<double>(query[i]) - static_cast<double>(gallery[i]);
    sum += d * d;
  }
  return std::sqrt(sum);
}

double discrepancy(const Descriptor& query, const Descriptor& gallery,
                   const DiscrepancyConfig& cfg) {
  check_pair(query, gallery, cfg);
  const auto indices = select_indices(query, cfg);
  return distance_at(query.values, gallery.values, indices);
}

double observed_discrepancy(const Descriptor& query_raw, const Descriptor& gallery_raw,
                            const DiscrepancyConfig& cfg) {
  if (query_raw.size() != gallery_raw.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "query length " + std::to_string(query_raw.size()) +
                    " vs gallery length " + std::to_string(gallery_raw.size()));
  }
  if (query_raw.normalized || gallery_raw.normalized) {
    throw Error(ErrorCode::kNormalizationMismatch,
                "observed-entry discrepancy standardizes raw descriptors itself");
  }
  if (!query_raw.fully_available()) {
    throw Error(ErrorCode::kMaskedInput, "query descriptor must be fully observed");
  }
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < gallery_raw.size(); ++i) {
    if (gallery_raw.available.empty() || gallery_raw.available[i]) pool.push_back(i);
  }
  auto standardize = [&](const Descriptor& d) {
    Descriptor sub;
    sub.values.reserve(pool.size());
    for (std::size_t i : pool) sub.values.push_back(d.values[i]);
    return normalize_descriptor(sub).values;
  };
  const auto q = standardize(query_raw);
  const auto g = standardize(gallery_raw);
  DiscrepancyConfig local = cfg;
  if (local.strategy == Strategy::kTopKNoNorm) local.strategy = Strategy::kTopK;
  const auto positions = select_from(q, iota_indices(q.size()), local);
  return distance_at(q, g, positions);
}

std::vector<RankedHit> rank_descriptors(const Descriptor& query,
                                        std::span<const Descriptor> candidates,
                                        const DiscrepancyConfig& cfg,
                                        std::size_t top_m,
                                        const RankOptions& options) {
  return rank_impl(
      query, candidates.size(),
      [&](std::size_t i) -> const Descriptor& { return candidates[i]; }, cfg, top_m,
      options);
}

std::vector<RankedHit> rank_gallery(const Descriptor& query, const Gallery& gallery,
                                    const DiscrepancyConfig& cfg, std::size_t top_m,
                                    const RankOptions& options) {
  if (!gallery.empty() && query.size() != gallery.dim) {
    throw Error(ErrorCode::kLengthMismatch,
                "query length " + std::to_string(query.size()) +
                    " vs gallery dim " + std::to_string(gallery.dim));
  }
  return rank_impl(
      query, gallery.size(),
      [&](std::size_t i) -> const Descriptor& { return gallery.entries[i].descriptor; },
      cfg, top_m, options);
}

Descriptor model_level_descriptor(std::span<const Descriptor> model_descriptors) {
  if (model_descriptors.empty()) {
    throw Error(ErrorCode::kEmptyInput, "model has no descriptors");
  }
  const std::size_t n = model_descriptors.front().size();
  std::vector<double> sum(n, 0.0);
  for (const auto& d : model_descriptors) {
    if (d.size() != n) {
      throw Error(ErrorCode::kLengthMismatch, "descriptor lengths differ within model");
    }
    if (!d.normalized) {
      throw Error(ErrorCode::kNormalizationMismatch,
                  "model-level averaging expects normalized descriptors");
    }
    for (std::size_t i = 0; i < n; ++i) sum[i] += d.values[i];
  }
  Descriptor mean;
  mean.values.resize(n);
  const double count = static_cast<double>(model_descriptors.size());
  for (std::size_t i = 0; i < n; ++i) mean.values[i] = static_cast<float>(sum[i] / count);
  mean.origin.model_id = model_descriptors.front().origin.model_id;
  return normalize_descriptor(mean);
}

}  // namespace probelog
