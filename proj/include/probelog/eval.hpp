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
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "probelog/discrepancy.hpp"
#include "probelog/labels.hpp"
#include "probelog/zero_shot.hpp"

namespace probelog {

//! Directional many-to-many relation: which retrieved concepts count as
//! correct for a query concept. Identity is always accepted.
class LabelMapping {
 public:
  void add(const std::string& query_concept, const std::string& allowed);
  bool accepts(const std::string& query_concept, const std::string& retrieved) const;
  std::size_t rule_count() const { return rules_.size(); }

  //! One rule per line: `query<TAB>allowed1,allowed2,...`; `#` comments;
  //! repeated query lines are merged. Errors: CorruptFile.
  static LabelMapping parse(std::string_view text);
  static LabelMapping load(const std::filesystem::path& path);

 private:
  std::map<std::string, std::set<std::string>> rules_;
};

struct QueryResult {
  //! Ground-truth concept of the query (logit label or text prompt concept).
  std::string query_concept;
  //! Query provenance: "model#logit" or the text prompt.
  std::string query_tag;
  std::vector<RankedHit> hits;
};

//! Percentage of queries with an acceptable concept among their first k
//! hits. A hit with logit_index == DescriptorOrigin::kNoLogit stands for a
//! whole model and is acceptable when any of the model's labels is.
//! Errors: EmptyQueries, ConfigInvalid (fewer than k hits, k = 0),
//! MissingLabel.
double topk_accuracy(std::span<const QueryResult> results, const LabelTable& labels,
                     const LabelMapping& mapping, std::size_t k);

//! Relevant hits among all queries' first k over k * #queries, in percent.
double topk_precision(std::span<const QueryResult> results, const LabelTable& labels,
                      const LabelMapping& mapping, std::size_t k);

struct LabeledQuery {
  Descriptor descriptor;
  std::string concept_name;
};

//! Ranks every query against the candidates (queries run in parallel).
std::vector<QueryResult> run_queries(std::span<const LabeledQuery> queries,
                                     std::span<const Descriptor> candidates,
                                     const DiscrepancyConfig& cfg, std::size_t top_m,
                                     const RankOptions& options);

//! No-completion baseline: raw queries against partially observed raw
//! candidates, scored with observed_discrepancy.
std::vector<QueryResult> run_observed_queries(std::span<const LabeledQuery> raw_queries,
                                              std::span<const Descriptor> raw_candidates,
                                              const DiscrepancyConfig& cfg,
                                              std::size_t top_m);

//! Raw (or normalized) descriptors of every logit; constant logits are
//! skipped when normalizing.
std::vector<Descriptor> hub_descriptors(std::span<const ResponseMatrix> hub,
                                        bool normalized);

//! Normalized descriptor per text embedding; concept = prompt.
std::vector<LabeledQuery> text_queries(const ProbeEmbeddings& pe,
                                       std::span<const TextEmbedding> texts,
                                       bool normalized);

struct BenchmarkConfig {
  DiscrepancyConfig discrepancy;
  std::size_t top_m = 5;
  //! Fraction of hub models used as queries in the hub -> hub split.
  double split_fraction = 0.5;
  std::uint64_t split_seed = 0;
  //! For the cross-hub scenario; the split scenario is disjoint by design.
  bool exclude_self = true;
  bool exclude_same_model = true;
  bool distinct_models = false;
  //! Adds the bottom-k, random, quantile and un-normalized top-k variants.
  bool ablation = false;
};

struct MethodScores {
  std::string method;
  std::string strategy;
  double top1_accuracy = 0.0;
  double top5_accuracy = 0.0;
  double top5_precision = 0.0;
  std::vector<QueryResult> results;
};

struct ScenarioReport {
  std::string name;
  std::size_t n_queries = 0;
  std::size_t n_gallery = 0;
  std::vector<MethodScores> methods;
};

struct EvalReport {
  std::vector<ScenarioReport> scenarios;
  nlohmann::json config;

  nlohmann::json to_json(bool include_hits = true) const;
  //! Table layout: Retrieval,Method,<one column per scenario>.
  std::string to_csv() const;
};

struct BenchmarkInputs {
  std::span<const ResponseMatrix> hub;
  const LabelTable* labels = nullptr;
  //! Optional second hub searched against the full first hub.
  std::span<const ResponseMatrix> query_hub;
  const LabelTable* query_labels = nullptr;
  //! Optional text queries searched against the full first hub.
  const ProbeEmbeddings* probe_embeddings = nullptr;
  std::span<const TextEmbedding> texts;
};

//! Runs hub -> hub (disjoint model split), cross -> hub and text -> hub,
//! each with ProbeLog (configured strategy), Full Query (all probes) and
//! Model-Level (averaged gallery models) methods.
//! Errors: ProbeMismatch, EmptyQueries, MissingLabel.
EvalReport run_benchmark(const BenchmarkInputs& inputs, const BenchmarkConfig& cfg,
                         const LabelMapping& mapping);

}  // namespace probelog
