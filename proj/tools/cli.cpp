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
#include "cli.hpp"

#include <chrono>
#include <ctime>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "probelog/completion.hpp"
#include "probelog/discrepancy.hpp"
#include "probelog/error.hpp"
#include "probelog/eval.hpp"
#include "probelog/gallery.hpp"
#include "probelog/hub_io.hpp"
#include "probelog/parallel.hpp"
#include "probelog/synthetic.hpp"
#include "probelog/zero_shot.hpp"

namespace probelog::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "probelog 1.0.0";
constexpr const char* kManifestName = "run_manifest.json";

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kProbeMismatch:
    case ErrorCode::kShapeMismatch:
    case ErrorCode::kDimMismatch:
    case ErrorCode::kLengthMismatch:
    case ErrorCode::kNormalizationMismatch:
      return kMismatch;
    case ErrorCode::kAllDegenerate:
      return kAllDegenerate;
    case ErrorCode::kDegenerateDescriptor:
      return kDegenerate;
    case ErrorCode::kRankTooLarge:
      return kRankTooLarge;
    case ErrorCode::kEmptyRow:
    case ErrorCode::kMaskedRowEmpty:
      return kEmptyRow;
    case ErrorCode::kConfigInvalid:
    case ErrorCode::kKTooLarge:
    case ErrorCode::kFractionOutOfRange:
      return kConfigInvalid;
    case ErrorCode::kCorruptFile:
    case ErrorCode::kVersionUnsupported:
    case ErrorCode::kInvariantViolation:
    case ErrorCode::kIo:
    case ErrorCode::kMissingLabel:
    case ErrorCode::kEmptyQueries:
    case ErrorCode::kEmptyGallery:
    case ErrorCode::kEmptyInput:
    case ErrorCode::kMaskedInput:
    case ErrorCode::kIndexOutOfRange:
      return kBadInput;
    default:
      return kInternal;
  }
}

// SHA-256 of a file, or of every regular file under a directory keyed by
// relative path.
void hash_input(const fs::path& p, json& out) {
  if (p.empty() || !fs::exists(p)) return;
  if (fs::is_regular_file(p)) {
    out[p.string()] = to_hex(sha256(read_file_bytes(p)));
    return;
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(p)) {
    if (e.is_regular_file() && e.path().filename() != kManifestName) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) out[f.string()] = to_hex(sha256(read_file_bytes(f)));
}

// Records the invocation next to an artifact.
class RunManifest {
 public:
  RunManifest(std::string command, const std::vector<std::string>& args)
      : start_(std::chrono::steady_clock::now()) {
    doc_["command"] = std::move(command);
    doc_["argv"] = args;
    doc_["tool_version"] = kToolVersion;
    doc_["flags"] = json::object();
    doc_["seeds"] = json::object();
    doc_["input_hashes"] = json::object();
    doc_["threads"] = thread_count();
  }

  void flag(const std::string& name, json value) { doc_["flags"][name] = std::move(value); }
  void seed(const std::string& name, std::uint64_t value) { doc_["seeds"][name] = value; }
  void input(const fs::path& p) { hash_input(p, doc_["input_hashes"]); }

  void write(const fs::path& path) {
    const auto elapsed = std::chrono::duration<double>(
        std::chrono::steady_clock::now() - start_);
    doc_["wall_clock_seconds"] = elapsed.count();
    const std::time_t now = std::time(nullptr);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    doc_["finished_at"] = stamp;
    const std::string text = doc_.dump(1) + "\n";
    write_file_bytes(path, std::span<const std::uint8_t>(
                               reinterpret_cast<const std::uint8_t*>(text.data()),
                               text.size()));
  }

 private:
  json doc_;
  std::chrono::steady_clock::time_point start_;
};

void write_text_file(const fs::path& path, const std::string& text) {
  write_file_bytes(path, std::span<const std::uint8_t>(
                             reinterpret_cast<const std::uint8_t*>(text.data()),
                             text.size()));
}

struct SearchFlags {
  std::size_t k = 32;
  std::string strategy = "topk";
  std::uint64_t seed = 0;
  std::size_t top = 5;
  bool distinct_models = false;
  std::string format = "json";
};

void add_search_flags(CLI::App* sub, SearchFlags& f) {
  sub->add_option("--k", f.k, "Probes compared per query")->capture_default_str();
  sub->add_option("--strategy", f.strategy,
                  "topk | bottomk | random | quantiles | all")
      ->capture_default_str();
  sub->add_option("--seed", f.seed, "Seed for --strategy random")->capture_default_str();
  sub->add_option("--top", f.top, "Number of results")->capture_default_str();
  sub->add_flag("--distinct-models", f.distinct_models, "Keep the best logit per model");
  sub->add_option("--format", f.format, "json | tsv")
      ->check(CLI::IsMember({"json", "tsv"}))
      ->capture_default_str();
}

DiscrepancyConfig discrepancy_config(const SearchFlags& f) {
  DiscrepancyConfig cfg;
  cfg.k = f.k;
  cfg.strategy = parse_strategy(f.strategy);
  cfg.seed = f.seed;
  if (cfg.strategy == Strategy::kTopKNoNorm) {
    throw Error(ErrorCode::kConfigInvalid,
                "topk-nonorm needs raw descriptors; galleries store normalized ones");
  }
  return cfg;
}

void print_results(std::ostream& out, const SearchFlags& f, const json& query,
                   const std::vector<RankedHit>& hits) {
  if (f.format == "tsv") {
    out << "rank\tmodel_id\tlogit_index\tscore\n";
    for (std::size_t i = 0; i < hits.size(); ++i) {
      out << (i + 1) << '\t' << hits[i].model_id << '\t' << hits[i].logit_index << '\t'
          << std::setprecision(9) << hits[i].score << '\n';
    }
    return;
  }
  json results = json::array();
  for (std::size_t i = 0; i < hits.size(); ++i) {
    results.push_back({{"rank", i + 1},
                       {"model_id", hits[i].model_id},
                       {"logit_index", hits[i].logit_index},
                       {"score", hits[i].score}});
  }
  json doc = {{"query", query},
              {"config",
               {{"k", f.k},
                {"strategy", f.strategy},
                {"seed", f.seed},
                {"top", f.top},
                {"distinct_models", f.distinct_models}}},
              {"results", std::move(results)}};
  out << doc.dump(1) << '\n';
}

std::vector<TextEmbedding> load_text_dir(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".pblg") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<TextEmbedding> out;
  for (const auto& f : files) out.push_back(load_text_embedding(f));
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Logit-level model search: build galleries, search by logit or text, "
               "complete sparse probing, evaluate."};
  app.require_subcommand(1);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = all cores)");

  // build
  fs::path build_responses, build_out, build_labels;
  auto* build = app.add_subcommand("build", "Build a gallery from a response directory");
  build->add_option("--responses", build_responses, "Directory of PBLG response matrices")
      ->required();
  build->add_option("--out", build_out, "Gallery file to write")->required();
  build->add_option("--labels", build_labels, "Optional labels TSV");

  // search-logit
  SearchFlags logit_flags;
  fs::path sl_gallery, sl_query;
  std::size_t sl_logit = 0;
  bool sl_exclude_self = false, sl_exclude_model = false;
  auto* search_logit = app.add_subcommand("search-logit", "Search with an existing logit");
  search_logit->add_option("--gallery", sl_gallery)->required();
  search_logit->add_option("--query-responses", sl_query, "PBLG response file")->required();
  search_logit->add_option("--logit", sl_logit)->required();
  search_logit->add_flag("--exclude-self", sl_exclude_self, "Skip the query logit itself");
  search_logit->add_flag("--exclude-model", sl_exclude_model,
                         "Skip every logit of the query's model");
  add_search_flags(search_logit, logit_flags);

  // search-text
  SearchFlags text_flags;
  fs::path st_gallery, st_probe_emb, st_text_emb;
  auto* search_text = app.add_subcommand("search-text", "Search with a text embedding");
  search_text->add_option("--gallery", st_gallery)->required();
  search_text->add_option("--probe-embeddings", st_probe_emb)->required();
  search_text->add_option("--text-embedding", st_text_emb)->required();
  add_search_flags(search_text, text_flags);

  // complete
  fs::path cp_responses, cp_out;
  double cp_fraction = 0.1;
  CompletionConfig cp_cfg;
  auto* complete = app.add_subcommand("complete", "Complete sparsely probed responses");
  complete->add_option("--responses", cp_responses)->required();
  complete->add_option("--out", cp_out)->required();
  complete->add_option("--fraction", cp_fraction, "Probe fraction per model for dense input")
      ->capture_default_str();
  complete->add_option("--rank", cp_cfg.rank)->capture_default_str();
  complete->add_option("--iters", cp_cfg.max_iters)->capture_default_str();
  complete->add_option("--tol", cp_cfg.tol)->capture_default_str();
  complete->add_option("--lambda", cp_cfg.lambda)->capture_default_str();
  complete->add_option("--seed", cp_cfg.seed)->capture_default_str();

  // synth
  SyntheticHubConfig sy;
  fs::path sy_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic hub directory");
  synth->add_option("--out", sy_out)->required();
  synth->add_option("--concepts", sy.n_concepts)->capture_default_str();
  synth->add_option("--models", sy.n_models)->capture_default_str();
  synth->add_option("--min-classes", sy.min_classes)->capture_default_str();
  synth->add_option("--max-classes", sy.max_classes)->capture_default_str();
  synth->add_option("--probes", sy.n_probes)->capture_default_str();
  synth->add_option("--latent-dim", sy.latent_dim)->capture_default_str();
  synth->add_option("--noise", sy.noise)->capture_default_str();
  synth->add_option("--low-noise-scale", sy.low_activation_noise_scale,
                    "Noise multiplier where the clean activation is negative")
      ->capture_default_str();
  synth->add_option("--scale-min", sy.scale_min)->capture_default_str();
  synth->add_option("--scale-max", sy.scale_max)->capture_default_str();
  synth->add_option("--shift-min", sy.shift_min)->capture_default_str();
  synth->add_option("--shift-max", sy.shift_max)->capture_default_str();
  synth->add_option("--embedding-noise", sy.embedding_noise)->capture_default_str();
  synth->add_option("--seed", sy.seed)->capture_default_str();

  // eval
  fs::path ev_hub, ev_responses, ev_labels, ev_probe_emb, ev_text_dir, ev_query_responses,
      ev_query_labels, ev_mapping, ev_out;
  BenchmarkConfig ev_cfg;
  std::string ev_strategy = "topk";
  bool ev_keep_self = false, ev_keep_same_model = false, ev_no_hits = false;
  auto* eval = app.add_subcommand("eval", "Run the retrieval benchmark");
  eval->add_option("--hub", ev_hub, "Hub directory (as written by synth)");
  eval->add_option("--responses", ev_responses, "Response directory (overrides hub/responses)");
  eval->add_option("--labels", ev_labels, "Labels TSV (overrides hub/labels.tsv)");
  eval->add_option("--probe-embeddings", ev_probe_emb);
  eval->add_option("--text-dir", ev_text_dir, "Directory of text embedding PBLG files");
  eval->add_option("--query-responses", ev_query_responses, "Second hub for cross-hub search");
  eval->add_option("--query-labels", ev_query_labels);
  eval->add_option("--mapping", ev_mapping, "Label mapping file (default: exact match)");
  eval->add_option("--out", ev_out)->required();
  eval->add_option("--k", ev_cfg.discrepancy.k)->capture_default_str();
  eval->add_option("--strategy", ev_strategy)->capture_default_str();
  eval->add_option("--seed", ev_cfg.discrepancy.seed, "Seed for the random strategy");
  eval->add_option("--top", ev_cfg.top_m)->capture_default_str();
  eval->add_option("--split-fraction", ev_cfg.split_fraction)->capture_default_str();
  eval->add_option("--split-seed", ev_cfg.split_seed)->capture_default_str();
  eval->add_flag("--ablation", ev_cfg.ablation, "Also run every probe-selection variant");
  eval->add_flag("--distinct-models", ev_cfg.distinct_models);
  eval->add_flag("--keep-self", ev_keep_self, "Cross-hub: allow a query to retrieve itself");
  eval->add_flag("--keep-same-model", ev_keep_same_model,
                 "Cross-hub: allow retrievals from the query's model");
  eval->add_flag("--no-hits", ev_no_hits, "Omit per-query hit lists from report.json");

  // correlate
  fs::path co_responses, co_out;
  auto* correlate = app.add_subcommand("correlate", "Pearson correlation of all logits");
  correlate->add_option("--responses", co_responses)->required();
  correlate->add_option("--out", co_out, "PBLG file to write")->required();

  std::vector<const char*> argv;
  argv.push_back("probelog");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigInvalid;
  }

  set_thread_count(threads);
  try {
    if (build->parsed()) {
      RunManifest manifest("build", args);
      manifest.input(build_responses);
      manifest.input(build_labels);
      const auto dir = load_response_directory(build_responses);
      std::optional<LabelTable> labels;
      if (!build_labels.empty()) labels = LabelTable::load_tsv(build_labels);
      const Gallery g = build_gallery(dir.matrices, labels ? &*labels : nullptr);
      save_gallery(g, build_out);
      manifest.flag("entries", g.size());
      manifest.flag("excluded", g.excluded.size());
      manifest.write(fs::path(build_out.string() + ".manifest.json"));
      out << "gallery: " << g.size() << " descriptors of length " << g.dim << " ("
          << g.excluded.size() << " constant logits excluded)\n";
      return kOk;
    }

    if (search_logit->parsed()) {
      const auto cfg = discrepancy_config(logit_flags);
      const Gallery g = load_gallery(sl_gallery);
      const auto rm = load_response_matrix(sl_query);
      if (rm.probe_hash != g.probe_hash) {
        throw Error(ErrorCode::kProbeMismatch,
                    sl_query.string() + ": probe hash " + to_hex(rm.probe_hash) +
                        " != gallery " + to_hex(g.probe_hash));
      }
      if (!rm.fully_observed()) {
        throw Error(ErrorCode::kMaskedInput,
                    sl_query.string() + ": masked responses must be completed first");
      }
      const auto query = normalize_descriptor(extract_descriptor(rm, sl_logit));
      RankOptions options;
      options.distinct_models = logit_flags.distinct_models;
      options.exclude_self = sl_exclude_self;
      if (sl_exclude_model) options.exclude_model = rm.model_id;
      const auto hits = rank_gallery(query, g, cfg, logit_flags.top, options);
      print_results(out, logit_flags,
                    {{"type", "logit"}, {"model_id", rm.model_id}, {"logit_index", sl_logit}},
                    hits);
      return kOk;
    }

    if (search_text->parsed()) {
      const auto cfg = discrepancy_config(text_flags);
      const Gallery g = load_gallery(st_gallery);
      const auto pe = load_probe_embeddings(st_probe_emb);
      const auto te = load_text_embedding(st_text_emb);
      if (pe.probe_hash != g.probe_hash) {
        throw Error(ErrorCode::kProbeMismatch,
                    st_probe_emb.string() + ": probe hash " + to_hex(pe.probe_hash) +
                        " != gallery " + to_hex(g.probe_hash));
      }
      const auto query = normalize_descriptor(zero_shot_descriptor(pe, te));
      RankOptions options;
      options.distinct_models = text_flags.distinct_models;
      const auto hits = rank_gallery(query, g, cfg, text_flags.top, options);
      print_results(out, text_flags, {{"type", "text"}, {"prompt", te.prompt}}, hits);
      return kOk;
    }

    if (complete->parsed()) {
      RunManifest manifest("complete", args);
      manifest.input(cp_responses);
      manifest.seed("seed", cp_cfg.seed);
      const auto dir = load_response_directory(cp_responses);
      if (dir.matrices.empty()) {
        throw Error(ErrorCode::kAllDegenerate, "no response matrices found");
      }
      bool any_masked = false;
      for (const auto& rm : dir.matrices) any_masked = any_masked || !rm.fully_observed();
      if (!(cp_fraction > 0.0 && cp_fraction <= 1.0)) {
        throw Error(ErrorCode::kFractionOutOfRange,
                    "--fraction must lie in (0, 1], got " + std::to_string(cp_fraction));
      }
      std::vector<ResponseMatrix> masked;
      if (any_masked) {
        masked = dir.matrices;
      } else {
        masked = apply_model_masks(dir.matrices, cp_fraction, cp_cfg.seed);
      }
      const auto stacked = stack_masked(masked);
      const auto result = als_complete(stacked, cp_cfg);
      const auto completed = unstack_completed(masked, result.completed);

      json completion = {
          {"rank", cp_cfg.rank},
          {"max_iters", cp_cfg.max_iters},
          {"tol", cp_cfg.tol},
          {"lambda", cp_cfg.lambda},
          {"seed", cp_cfg.seed},
          {"fraction", any_masked ? json(nullptr) : json(cp_fraction)},
          {"input_masked", any_masked},
          {"iterations", result.iterations},
          {"converged", result.converged},
          {"objective_trace", result.objective_trace},
          {"flagged_columns", result.flagged_columns},
      };
      fs::create_directories(cp_out);
      save_probe_set(*dir.probes, cp_out / kProbeManifestName);
      for (const auto& rm : completed) {
        save_response_matrix(rm, cp_out / (rm.model_id + ".pblg"),
                             {{"completion", completion}});
      }
      write_text_file(cp_out / "completion.json", completion.dump(1) + "\n");
      manifest.flag("rank", cp_cfg.rank);
      manifest.flag("iters", cp_cfg.max_iters);
      manifest.flag("tol", cp_cfg.tol);
      manifest.flag("lambda", cp_cfg.lambda);
      manifest.flag("fraction", cp_fraction);
      manifest.write(cp_out / kManifestName);
      out << "completed " << stacked.rows << "x" << stacked.cols << " in "
          << result.iterations << " iterations, objective "
          << result.objective_trace.back() << "\n";
      return kOk;
    }

    if (synth->parsed()) {
      RunManifest manifest("synth", args);
      manifest.seed("seed", sy.seed);
      const auto hub = generate_synthetic_hub(sy);
      write_synthetic_hub(hub, sy_out);
      manifest.write(sy_out / kManifestName);
      std::size_t logits = 0;
      for (const auto& rm : hub.models) logits += rm.n_logits;
      out << "synthetic hub: " << hub.models.size() << " models, " << logits
          << " logits, " << hub.probes.size() << " probes\n";
      return kOk;
    }

    if (eval->parsed()) {
      RunManifest manifest("eval", args);
      ev_cfg.discrepancy.strategy = parse_strategy(ev_strategy);
      ev_cfg.exclude_self = !ev_keep_self;
      ev_cfg.exclude_same_model = !ev_keep_same_model;
      if (!ev_hub.empty()) {
        if (ev_responses.empty()) ev_responses = ev_hub / "responses";
        if (ev_labels.empty()) ev_labels = ev_hub / "labels.tsv";
        if (ev_probe_emb.empty() && fs::exists(ev_hub / "embeddings" / "probes.pblg")) {
          ev_probe_emb = ev_hub / "embeddings" / "probes.pblg";
        }
        if (ev_text_dir.empty() && fs::exists(ev_hub / "embeddings" / "text")) {
          ev_text_dir = ev_hub / "embeddings" / "text";
        }
      }
      if (ev_responses.empty() || ev_labels.empty()) {
        throw Error(ErrorCode::kConfigInvalid, "eval needs --hub or --responses and --labels");
      }
      for (const auto& p : {ev_responses, ev_labels, ev_probe_emb, ev_text_dir,
                            ev_query_responses, ev_query_labels, ev_mapping}) {
        manifest.input(p);
      }
      manifest.seed("split_seed", ev_cfg.split_seed);
      manifest.seed("strategy_seed", ev_cfg.discrepancy.seed);

      const auto hub = load_response_directory(ev_responses);
      const auto labels = LabelTable::load_tsv(ev_labels);
      ResponseDirectory query_hub;
      std::optional<LabelTable> query_labels;
      if (!ev_query_responses.empty()) {
        query_hub = load_response_directory(ev_query_responses);
        if (!ev_query_labels.empty()) query_labels = LabelTable::load_tsv(ev_query_labels);
      }
      std::optional<ProbeEmbeddings> pe;
      std::vector<TextEmbedding> texts;
      if (!ev_probe_emb.empty() && !ev_text_dir.empty()) {
        pe = load_probe_embeddings(ev_probe_emb);
        texts = load_text_dir(ev_text_dir);
      }
      LabelMapping mapping;
      if (!ev_mapping.empty()) mapping = LabelMapping::load(ev_mapping);

      BenchmarkInputs inputs;
      inputs.hub = hub.matrices;
      inputs.labels = &labels;
      inputs.query_hub = query_hub.matrices;
      inputs.query_labels = query_labels ? &*query_labels : nullptr;
      inputs.probe_embeddings = pe ? &*pe : nullptr;
      inputs.texts = texts;
      const auto report = run_benchmark(inputs, ev_cfg, mapping);

      fs::create_directories(ev_out);
      write_text_file(ev_out / "report.json", report.to_json(!ev_no_hits).dump(1) + "\n");
      write_text_file(ev_out / "table.csv", report.to_csv());
      manifest.flag("k", ev_cfg.discrepancy.k);
      manifest.flag("strategy", ev_strategy);
      manifest.write(ev_out / kManifestName);
      out << report.to_csv();
      return kOk;
    }

    if (correlate->parsed()) {
      RunManifest manifest("correlate", args);
      manifest.input(co_responses);
      const auto dir = load_response_directory(co_responses);
      std::vector<Descriptor> descriptors;
      json rows = json::array();
      for (const auto& rm : dir.matrices) {
        for (std::size_t i = 0; i < rm.n_logits; ++i) {
          descriptors.push_back(extract_descriptor(rm, i));
          rows.push_back({{"model_id", rm.model_id}, {"logit_index", i}});
        }
      }
      const auto corr = correlation_matrix(descriptors);
      save_pblg(corr.to_pblg(), co_out);
      write_text_file(sidecar_path(co_out), json({{"rows", rows}}).dump(1) + "\n");
      manifest.write(fs::path(co_out.string() + ".manifest.json"));
      out << "correlation: " << corr.n << "x" << corr.n << "\n";
      return kOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kInternal;
}

}  // namespace probelog::cli
