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
#include "probelog/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "probelog/error.hpp"
#include "probelog/gallery.hpp"
#include "probelog/random.hpp"

namespace probelog {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool hit_relevant(const QueryResult& q, const RankedHit& hit, const LabelTable& labels,
                  const LabelMapping& mapping) {
  if (hit.logit_index == DescriptorOrigin::kNoLogit) {
    const auto concepts = labels.model_labels(hit.model_id);
    if (concepts.empty()) {
      throw Error(ErrorCode::kMissingLabel, "model " + hit.model_id + " has no labels");
    }
    return std::any_of(concepts.begin(), concepts.end(), [&](const std::string& c) {
      return mapping.accepts(q.query_concept, c);
    });
  }
  const auto label = labels.find(hit.model_id, hit.logit_index);
  if (!label) {
    throw Error(ErrorCode::kMissingLabel,
                hit.model_id + "#" + std::to_string(hit.logit_index) + " has no label");
  }
  return mapping.accepts(q.query_concept, *label);
}

// Relevant-hit count within the first k hits of every query.
std::vector<std::size_t> relevant_counts(std::span<const QueryResult> results,
                                         const LabelTable& labels,
                                         const LabelMapping& mapping, std::size_t k) {
  if (results.empty()) throw Error(ErrorCode::kEmptyQueries, "no queries to score");
  if (k == 0) throw Error(ErrorCode::kConfigInvalid, "k must be positive");
  std::vector<std::size_t> counts;
  counts.reserve(results.size());
  for (const auto& q : results) {
    if (q.hits.size() < k) {
      throw Error(ErrorCode::kConfigInvalid,
                  "query " + q.query_tag + " has " + std::to_string(q.hits.size()) +
                      " retrievals, need " + std::to_string(k));
    }
    std::size_t c = 0;
    for (std::size_t i = 0; i < k; ++i) c += hit_relevant(q, q.hits[i], labels, mapping);
    counts.push_back(c);
  }
  return counts;
}

std::string origin_tag(const DescriptorOrigin& o) {
  if (o.is_text()) return o.text_tag;
  return o.model_id + "#" + std::to_string(o.logit_index);
}

std::vector<LabeledQuery> labeled_hub_queries(std::span<const ResponseMatrix> hub,
                                              const LabelTable& labels, bool normalized) {
  std::vector<LabeledQuery> out;
  for (auto& d : hub_descriptors(hub, normalized)) {
    auto label = labels.find(d.origin.model_id, d.origin.logit_index);
    if (!label) {
      throw Error(ErrorCode::kMissingLabel,
                  "query logit " + origin_tag(d.origin) + " has no label");
    }
    out.push_back({std::move(d), std::move(*label)});
  }
  return out;
}

std::vector<Descriptor> model_level_gallery(std::span<const ResponseMatrix> hub) {
  std::vector<Descriptor> out;
  for (const auto& rm : hub) {
    std::vector<Descriptor> logits = hub_descriptors(std::span(&rm, 1), true);
    if (logits.empty()) continue;
    try {
      auto d = model_level_descriptor(logits);
      d.origin.model_id = rm.model_id;
      d.origin.logit_index = DescriptorOrigin::kNoLogit;
      out.push_back(std::move(d));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateDescriptor) throw;
    }
  }
  return out;
}

struct Method {
  std::string name;
  Strategy strategy;
  bool normalized;
  bool model_level;
  //! Compare over every probe regardless of k.
  bool all_probes = false;
};

std::vector<Method> methods_for(const BenchmarkConfig& cfg) {
  std::vector<Method> m = {
      {"ProbeLog", cfg.discrepancy.strategy,
       cfg.discrepancy.strategy != Strategy::kTopKNoNorm, false},
      {"Full Query", Strategy::kAll, true, false},
      {"Model-Level", cfg.discrepancy.strategy == Strategy::kTopKNoNorm
                          ? Strategy::kTopK
                          : cfg.discrepancy.strategy,
       true, true},
  };
  if (cfg.ablation) {
    m.push_back({"Top-k + No Norm.", Strategy::kTopKNoNorm, false, false});
    m.push_back({"Full Query (raw)", Strategy::kTopKNoNorm, false, false, true});
    m.push_back({"Bottom-k", Strategy::kBottomK, true, false});
    m.push_back({"Random", Strategy::kRandom, true, false});
    m.push_back({"Quantiles", Strategy::kQuantiles, true, false});
  }
  return m;
}

// Query and gallery material for one scenario, normalized and raw.
struct ScenarioData {
  std::string name;
  std::vector<LabeledQuery> queries;
  std::vector<LabeledQuery> raw_queries;
  std::span<const ResponseMatrix> gallery_hub;
  bool cross_hub = false;
};

ScenarioReport run_scenario(const ScenarioData& s, const LabelTable& labels,
                            const BenchmarkConfig& cfg, const LabelMapping& mapping) {
  if (s.queries.empty()) {
    throw Error(ErrorCode::kEmptyQueries, "scenario " + s.name + " has no queries");
  }
  const auto gallery = hub_descriptors(s.gallery_hub, true);
  ScenarioReport report;
  report.name = s.name;
  report.n_queries = s.queries.size();
  report.n_gallery = gallery.size();
  std::vector<Descriptor> raw_gallery;
  std::vector<Descriptor> model_gallery;
  const std::size_t top_m = std::max<std::size_t>(cfg.top_m, 5);
  for (const auto& method : methods_for(cfg)) {
    DiscrepancyConfig dc = cfg.discrepancy;
    dc.strategy = method.strategy;
    if (method.all_probes) dc.k = s.raw_queries.front().descriptor.size();
    const std::vector<Descriptor>* candidates = &gallery;
    if (!method.normalized) {
      if (raw_gallery.empty()) raw_gallery = hub_descriptors(s.gallery_hub, false);
      candidates = &raw_gallery;
    } else if (method.model_level) {
      if (model_gallery.empty()) model_gallery = model_level_gallery(s.gallery_hub);
      candidates = &model_gallery;
    }
    RankOptions options;
    options.distinct_models = cfg.distinct_models;
    options.exclude_self = s.cross_hub && cfg.exclude_self;
    MethodScores scores;
    scores.method = method.name;
    scores.strategy = std::string(strategy_name(method.strategy));
    const auto& queries = method.normalized ? s.queries : s.raw_queries;
    if (s.cross_hub && cfg.exclude_same_model) {
      for (const auto& q : queries) {
        RankOptions per_query = options;
        per_query.exclude_model = q.descriptor.origin.model_id;
        auto r = run_queries(std::span(&q, 1), *candidates, dc, top_m, per_query);
        scores.results.push_back(std::move(r.front()));
      }
    } else {
      scores.results = run_queries(queries, *candidates, dc, top_m, options);
    }
    scores.top1_accuracy = topk_accuracy(scores.results, labels, mapping, 1);
    scores.top5_accuracy = topk_accuracy(scores.results, labels, mapping, 5);
    scores.top5_precision = topk_precision(scores.results, labels, mapping, 5);
    report.methods.push_back(std::move(scores));
  }
  return report;
}

}  // namespace

void LabelMapping::add(const std::string& query_concept, const std::string& allowed) {
  rules_[query_concept].insert(allowed);
}

bool LabelMapping::accepts(const std::string& query_concept,
                           const std::string& retrieved) const {
  if (query_concept == retrieved) return true;
  auto it = rules_.find(query_concept);
  return it != rules_.end() && it->second.count(retrieved) > 0;
}

LabelMapping LabelMapping::parse(std::string_view text) {
  LabelMapping mapping;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw Error(ErrorCode::kCorruptFile,
                  "mapping line " + std::to_string(line_no) +
                      ": expected query<TAB>allowed,...");
    }
    const std::string query = trim(line.substr(0, tab));
    std::string_view rest = line.substr(tab + 1);
    std::size_t start = 0;
    while (start <= rest.size()) {
      const auto comma = std::min(rest.find(',', start), rest.size());
      const std::string allowed = trim(rest.substr(start, comma - start));
      if (!allowed.empty()) mapping.add(query, allowed);
      start = comma + 1;
    }
  }
  return mapping;
}

LabelMapping LabelMapping::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

double topk_accuracy(std::span<const QueryResult> results, const LabelTable& labels,
                     const LabelMapping& mapping, std::size_t k) {
  const auto counts = relevant_counts(results, labels, mapping, k);
  const auto hits = std::count_if(counts.begin(), counts.end(),
                                  [](std::size_t c) { return c > 0; });
  return 100.0 * static_cast<double>(hits) / static_cast<double>(counts.size());
}

double topk_precision(std::span<const QueryResult> results, const LabelTable& labels,
                      const LabelMapping& mapping, std::size_t k) {
  const auto counts = relevant_counts(results, labels, mapping, k);
  std::size_t relevant = 0;
  for (auto c : counts) relevant += c;
  return 100.0 * static_cast<double>(relevant) /
         (static_cast<double>(k) * static_cast<double>(counts.size()));
}

std::vector<QueryResult> run_queries(std::span<const LabeledQuery> queries,
                                     std::span<const Descriptor> candidates,
                                     const DiscrepancyConfig& cfg, std::size_t top_m,
                                     const RankOptions& options) {
  std::vector<QueryResult> out;
  out.reserve(queries.size());
  for (const auto& q : queries) {
    QueryResult r;
    r.query_concept = q.concept_name;
    r.query_tag = origin_tag(q.descriptor.origin);
    r.hits = rank_descriptors(q.descriptor, candidates, cfg, top_m, options);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<QueryResult> run_observed_queries(std::span<const LabeledQuery> raw_queries,
                                              std::span<const Descriptor> raw_candidates,
                                              const DiscrepancyConfig& cfg,
                                              std::size_t top_m) {
  if (raw_candidates.empty()) throw Error(ErrorCode::kEmptyGallery, "gallery is empty");
  std::vector<QueryResult> out;
  out.reserve(raw_queries.size());
  for (const auto& q : raw_queries) {
    std::vector<double> scores(raw_candidates.size());
    for (std::size_t i = 0; i < raw_candidates.size(); ++i) {
      scores[i] = observed_discrepancy(q.descriptor, raw_candidates[i], cfg);
    }
    std::vector<std::size_t> order(raw_candidates.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const auto& oa = raw_candidates[a].origin;
      const auto& ob = raw_candidates[b].origin;
      return std::tie(scores[a], oa.model_id, oa.logit_index) <
             std::tie(scores[b], ob.model_id, ob.logit_index);
    });
    QueryResult r;
    r.query_concept = q.concept_name;
    r.query_tag = origin_tag(q.descriptor.origin);
    for (std::size_t i = 0; i < std::min(top_m, order.size()); ++i) {
      const auto& o = raw_candidates[order[i]].origin;
      r.hits.push_back({o.model_id, o.logit_index, scores[order[i]]});
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<Descriptor> hub_descriptors(std::span<const ResponseMatrix> hub,
                                        bool normalized) {
  std::vector<Descriptor> out;
  for (const auto& rm : hub) {
    for (std::size_t i = 0; i < rm.n_logits; ++i) {
      auto d = extract_descriptor(rm, i);
      if (!normalized) {
        out.push_back(std::move(d));
        continue;
      }
      try {
        out.push_back(normalize_descriptor(d));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kDegenerateDescriptor) throw;
      }
    }
  }
  return out;
}

std::vector<LabeledQuery> text_queries(const ProbeEmbeddings& pe,
                                       std::span<const TextEmbedding> texts,
                                       bool normalized) {
  std::vector<LabeledQuery> out;
  for (const auto& te : texts) {
    auto d = zero_shot_descriptor(pe, te);
    if (normalized) d = normalize_descriptor(d);
    out.push_back({std::move(d), te.prompt});
  }
  return out;
}

EvalReport run_benchmark(const BenchmarkInputs& inputs, const BenchmarkConfig& cfg,
                         const LabelMapping& mapping) {
  if (inputs.hub.empty()) throw Error(ErrorCode::kEmptyQueries, "hub is empty");
  if (!inputs.labels) throw Error(ErrorCode::kMissingLabel, "hub labels are required");
  if (!(cfg.split_fraction > 0.0 && cfg.split_fraction < 1.0)) {
    throw Error(ErrorCode::kConfigInvalid, "split fraction must lie in (0, 1)");
  }
  const Digest& hash = inputs.hub.front().probe_hash;
  auto check_hash = [&](const Digest& h, const std::string& who) {
    if (h != hash) {
      throw Error(ErrorCode::kProbeMismatch,
                  who + ": probe hash " + to_hex(h) + " != hub " + to_hex(hash));
    }
  };
  for (const auto& rm : inputs.hub) check_hash(rm.probe_hash, rm.model_id);
  for (const auto& rm : inputs.query_hub) check_hash(rm.probe_hash, rm.model_id);
  if (inputs.probe_embeddings) check_hash(inputs.probe_embeddings->probe_hash, "probe embeddings");

  // Labels for every retrievable logit: hub labels, plus query-hub labels
  // (needed only to name query concepts).
  const LabelTable& labels = *inputs.labels;

  EvalReport report;
  {
    const std::size_t n = inputs.hub.size();
    SplitMix64 rng(cfg.split_seed);
    const auto order = sample_without_replacement(rng, n, n);
    const auto n_query = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(cfg.split_fraction * static_cast<double>(n))),
        1, n > 1 ? n - 1 : 1);
    if (n >= 2) {
      std::vector<std::size_t> q_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_query));
      std::vector<std::size_t> g_idx(order.begin() + static_cast<std::ptrdiff_t>(n_query), order.end());
      std::sort(q_idx.begin(), q_idx.end());
      std::sort(g_idx.begin(), g_idx.end());
      std::vector<ResponseMatrix> query_half, gallery_half;
      for (auto i : q_idx) query_half.push_back(inputs.hub[i]);
      for (auto i : g_idx) gallery_half.push_back(inputs.hub[i]);
      ScenarioData s;
      s.name = "hub \xE2\x86\x92 hub";
      s.queries = labeled_hub_queries(query_half, labels, true);
      s.raw_queries = labeled_hub_queries(query_half, labels, false);
      s.gallery_hub = gallery_half;
      report.scenarios.push_back(run_scenario(s, labels, cfg, mapping));
    }
  }
  if (!inputs.query_hub.empty()) {
    const LabelTable& qlabels = inputs.query_labels ? *inputs.query_labels : labels;
    ScenarioData s;
    s.name = "cross \xE2\x86\x92 hub";
    s.queries = labeled_hub_queries(inputs.query_hub, qlabels, true);
    s.raw_queries = labeled_hub_queries(inputs.query_hub, qlabels, false);
    s.gallery_hub = inputs.hub;
    s.cross_hub = true;
    report.scenarios.push_back(run_scenario(s, labels, cfg, mapping));
  }
  if (inputs.probe_embeddings && !inputs.texts.empty()) {
    ScenarioData s;
    s.name = "text \xE2\x86\x92 hub";
    s.queries = text_queries(*inputs.probe_embeddings, inputs.texts, true);
    s.raw_queries = text_queries(*inputs.probe_embeddings, inputs.texts, false);
    s.gallery_hub = inputs.hub;
    report.scenarios.push_back(run_scenario(s, labels, cfg, mapping));
  }
  report.config = {
      {"k", cfg.discrepancy.k},
      {"strategy", std::string(strategy_name(cfg.discrepancy.strategy))},
      {"random_seed", cfg.discrepancy.seed},
      {"top_m", std::max<std::size_t>(cfg.top_m, 5)},
      {"split_fraction", cfg.split_fraction},
      {"split_seed", cfg.split_seed},
      {"exclude_self", cfg.exclude_self},
      {"exclude_same_model", cfg.exclude_same_model},
      {"distinct_models", cfg.distinct_models},
      {"n_probes", inputs.hub.front().n_probes},
      {"mapping_rules", mapping.rule_count()},
  };
  return report;
}

json EvalReport::to_json(bool include_hits) const {
  json j;
  j["config"] = config;
  json scenarios_json = json::array();
  for (const auto& s : scenarios) {
    json sj = {{"name", s.name}, {"n_queries", s.n_queries}, {"n_gallery", s.n_gallery}};
    json methods_json = json::array();
    for (const auto& m : s.methods) {
      json mj = {{"method", m.method},
                 {"strategy", m.strategy},
                 {"top1_accuracy", m.top1_accuracy},
                 {"top5_accuracy", m.top5_accuracy},
                 {"top5_precision", m.top5_precision}};
      if (include_hits) {
        json queries = json::array();
        for (const auto& q : m.results) {
          json hits = json::array();
          for (const auto& h : q.hits) {
            hits.push_back({{"model_id", h.model_id},
                            {"logit_index", h.logit_index == DescriptorOrigin::kNoLogit
                                                ? json(nullptr)
                                                : json(h.logit_index)},
                            {"score", h.score}});
          }
          queries.push_back({{"query", q.query_tag},
                             {"label", q.query_concept},
                             {"hits", std::move(hits)}});
        }
        mj["queries"] = std::move(queries);
      }
      methods_json.push_back(std::move(mj));
    }
    sj["methods"] = std::move(methods_json);
    scenarios_json.push_back(std::move(sj));
  }
  j["scenarios"] = std::move(scenarios_json);
  return j;
}

std::string EvalReport::to_csv() const {
  std::ostringstream out;
  out << "Retrieval,Method";
  for (const auto& s : scenarios) out << ',' << s.name;
  out << '\n';
  if (scenarios.empty()) return out.str();
  struct Row {
    const char* label;
    double MethodScores::*field;
  };
  const Row rows[] = {{"Top-1 Accuracy", &MethodScores::top1_accuracy},
                      {"Top-5 Accuracy", &MethodScores::top5_accuracy},
                      {"Top-5 Precision", &MethodScores::top5_precision}};
  for (const auto& row : rows) {
    for (std::size_t m = 0; m < scenarios.front().methods.size(); ++m) {
      out << row.label << ',' << scenarios.front().methods[m].method;
      for (const auto& s : scenarios) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.1f", s.methods[m].*row.field);
        out << ',' << buf;
      }
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace probelog
