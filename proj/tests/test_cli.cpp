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
#include <gtest/gtest.h>

#include <chrono>
#include <fstream>
#include <map>
#include <sstream>

#include "cli.hpp"
#include "json.hpp"
#include "probelog/discrepancy.hpp"
#include "probelog/gallery.hpp"
#include "probelog/hub_io.hpp"
#include "probelog/synthetic.hpp"
#include "test_support.hpp"

namespace probelog {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing::TempDir;

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

// Content hash of every file under dir except run manifests, which record
// wall-clock time.
std::map<std::string, std::string> tree_hashes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto name = e.path().filename().string();
    if (name == "run_manifest.json" || name.ends_with(".manifest.json")) continue;
    out[fs::relative(e.path(), dir).string()] = to_hex(sha256(read_file_bytes(e.path())));
  }
  return out;
}

void write_dir(const fs::path& dir, const ProbeSet& ps, const std::vector<ResponseMatrix>& ms) {
  fs::create_directories(dir);
  save_probe_set(ps, dir / kProbeManifestName);
  for (const auto& rm : ms) save_response_matrix(rm, dir / (rm.model_id + ".pblg"));
}

struct SmallResponses {
  TempDir tmp;
  ProbeSet ps = testing::probe_set(64);
  std::vector<ResponseMatrix> models;
  fs::path dir = tmp / "responses";
  SmallResponses() {
    for (int m = 0; m < 5; ++m) {
      models.push_back(testing::random_matrix("model_" + std::to_string(m), ps, 2 + m, 100 + m));
    }
    write_dir(dir, ps, models);
  }
};

TEST(Cli, HelpAndParseErrors) {
  EXPECT_EQ(run_cli({"--help"}).code, 0);
  EXPECT_EQ(run_cli({}).code, cli::kConfigInvalid);
  EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kConfigInvalid);
  EXPECT_EQ(run_cli({"build", "--out", "x"}).code, cli::kConfigInvalid);
}

TEST(CliBuild, GalleryHasEveryLogit) {
  SmallResponses r;
  const auto out = r.tmp / "g.plgg";
  const auto res = run_cli({"build", "--responses", r.dir.string(), "--out", out.string()});
  ASSERT_EQ(res.code, 0) << res.err;
  EXPECT_EQ(load_gallery(out).size(), 2u + 3 + 4 + 5 + 6);
  std::ifstream in(out.string() + ".manifest.json");
  const auto manifest = json::parse(in);
  EXPECT_EQ(manifest["command"], "build");
  EXPECT_TRUE(manifest.contains("wall_clock_seconds"));
  EXPECT_TRUE(manifest.contains("tool_version"));
  // probeset.json plus one matrix and one sidecar per model.
  EXPECT_EQ(manifest["input_hashes"].size(), 11u);
}

TEST(CliBuild, MixedProbeHashesExitTwo) {
  SmallResponses r;
  save_response_matrix(testing::random_matrix("odd", testing::probe_set(64, "x"), 2, 1),
                       r.dir / "odd.pblg");
  const auto res = run_cli({"build", "--responses", r.dir.string(), "--out",
                            (r.tmp / "g.plgg").string()});
  EXPECT_EQ(res.code, cli::kMismatch);
  EXPECT_NE(res.err.find("odd.pblg"), std::string::npos);
  EXPECT_FALSE(fs::exists(r.tmp / "g.plgg"));
}

TEST(CliBuild, EmptyDirectoryExitThree) {
  TempDir tmp;
  fs::create_directories(tmp / "empty");
  const auto res = run_cli({"build", "--responses", (tmp / "empty").string(), "--out",
                            (tmp / "g.plgg").string()});
  EXPECT_EQ(res.code, cli::kAllDegenerate);
  EXPECT_NE(res.err.find("no response matrices found"), std::string::npos);
}

TEST(CliBuild, CorruptInputExitEight) {
  SmallResponses r;
  auto bytes = read_file_bytes(r.dir / "model_1.pblg");
  bytes.resize(bytes.size() - 3);
  write_file_bytes(r.dir / "model_1.pblg", bytes);
  EXPECT_EQ(run_cli({"build", "--responses", r.dir.string(), "--out",
                     (r.tmp / "g.plgg").string()})
                .code,
            cli::kBadInput);
}

struct BuiltGallery : SmallResponses {
  fs::path gallery = tmp / "g.plgg";
  BuiltGallery() {
    EXPECT_EQ(run_cli({"build", "--responses", dir.string(), "--out", gallery.string()}).code, 0);
  }
};

TEST(CliSearch, LogitFindsItself) {
  BuiltGallery b;
  const auto res = run_cli({"search-logit", "--gallery", b.gallery.string(), "--query-responses",
                            (b.dir / "model_2.pblg").string(), "--logit", "3", "--k", "8"});
  ASSERT_EQ(res.code, 0) << res.err;
  const auto doc = json::parse(res.out);
  ASSERT_EQ(doc["results"].size(), 5u);
  EXPECT_EQ(doc["results"][0]["model_id"], "model_2");
  EXPECT_EQ(doc["results"][0]["logit_index"], 3);
  EXPECT_EQ(doc["results"][0]["score"], 0.0);
  EXPECT_EQ(doc["config"]["k"], 8);
  EXPECT_EQ(doc["query"]["model_id"], "model_2");
}

TEST(CliSearch, ExclusionsAndTsv) {
  BuiltGallery b;
  const auto res = run_cli({"search-logit", "--gallery", b.gallery.string(), "--query-responses",
                            (b.dir / "model_2.pblg").string(), "--logit", "3", "--k", "8",
                            "--exclude-model", "--top", "3", "--format", "tsv"});
  ASSERT_EQ(res.code, 0) << res.err;
  std::istringstream lines(res.out);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "rank\tmodel_id\tlogit_index\tscore");
  int rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    EXPECT_EQ(line.find("model_2\t"), std::string::npos);
  }
  EXPECT_EQ(rows, 3);
}

TEST(CliSearch, AllStrategyIsEuclideanRanking) {
  BuiltGallery b;
  const auto res =
      run_cli({"search-logit", "--gallery", b.gallery.string(), "--query-responses",
               (b.dir / "model_0.pblg").string(), "--logit", "1", "--strategy", "all", "--top",
               "20"});
  ASSERT_EQ(res.code, 0) << res.err;
  const auto doc = json::parse(res.out);

  // Oracle: plain Euclidean distance between z-scored rows, sorted.
  const auto query = testing::zscore_oracle(
      std::vector<float>(b.models[0].row(1).begin(), b.models[0].row(1).end()));
  std::vector<std::tuple<double, std::string, std::size_t>> expected;
  for (const auto& rm : b.models) {
    for (std::size_t i = 0; i < rm.n_logits; ++i) {
      const auto z = testing::zscore_oracle(std::vector<float>(rm.row(i).begin(), rm.row(i).end()));
      double s = 0;
      for (std::size_t j = 0; j < z.size(); ++j) s += (z[j] - query[j]) * (z[j] - query[j]);
      expected.emplace_back(std::sqrt(s), rm.model_id, i);
    }
  }
  std::sort(expected.begin(), expected.end());
  ASSERT_EQ(doc["results"].size(), expected.size());
  for (std::size_t r = 0; r < expected.size(); ++r) {
    EXPECT_EQ(doc["results"][r]["model_id"], std::get<1>(expected[r]));
    EXPECT_EQ(doc["results"][r]["logit_index"], std::get<2>(expected[r]));
    EXPECT_NEAR(doc["results"][r]["score"].get<double>(), std::get<0>(expected[r]), 1e-4);
  }
}

TEST(CliSearch, Errors) {
  BuiltGallery b;
  const auto base = std::vector<std::string>{"search-logit", "--gallery", b.gallery.string(),
                                             "--query-responses",
                                             (b.dir / "model_0.pblg").string(), "--logit", "0"};
  auto bad_strategy = base;
  bad_strategy.insert(bad_strategy.end(), {"--strategy", "best"});
  EXPECT_EQ(run_cli(bad_strategy).code, cli::kConfigInvalid);
  auto nonorm = base;
  nonorm.insert(nonorm.end(), {"--strategy", "topk-nonorm"});
  EXPECT_EQ(run_cli(nonorm).code, cli::kConfigInvalid);
  auto big_k = base;
  big_k.insert(big_k.end(), {"--k", "65"});
  EXPECT_EQ(run_cli(big_k).code, cli::kConfigInvalid);

  save_response_matrix(testing::random_matrix("x", testing::probe_set(64, "q"), 2, 1),
                       b.tmp / "x.pblg");
  EXPECT_EQ(run_cli({"search-logit", "--gallery", b.gallery.string(), "--query-responses",
                     (b.tmp / "x.pblg").string(), "--logit", "0"})
                .code,
            cli::kMismatch);
}

TEST(CliSearch, TextQueries) {
  BuiltGallery b;
  ProbeEmbeddings pe;
  pe.probe_hash = b.ps.content_hash;
  pe.n_probes = 64;
  pe.dim = 4;
  SplitMix64 rng(1);
  for (int i = 0; i < 64 * 4; ++i) pe.matrix.push_back(static_cast<float>(rng.gaussian()));
  save_probe_embeddings(pe, b.tmp / "probes.pblg");
  TextEmbedding te;
  te.prompt = "a dog";
  te.vector = {0.1f, 0.2f, -0.3f, 0.4f};
  save_text_embedding(te, b.tmp / "dog.pblg");
  const auto ok = run_cli({"search-text", "--gallery", b.gallery.string(), "--probe-embeddings",
                           (b.tmp / "probes.pblg").string(), "--text-embedding",
                           (b.tmp / "dog.pblg").string(), "--k", "8"});
  ASSERT_EQ(ok.code, 0) << ok.err;
  EXPECT_EQ(json::parse(ok.out)["query"]["prompt"], "a dog");

  te.vector.assign(4, 0.0f);
  save_text_embedding(te, b.tmp / "zero.pblg");
  EXPECT_EQ(run_cli({"search-text", "--gallery", b.gallery.string(), "--probe-embeddings",
                     (b.tmp / "probes.pblg").string(), "--text-embedding",
                     (b.tmp / "zero.pblg").string()})
                .code,
            cli::kDegenerate);

  te.vector.assign(5, 1.0f);
  save_text_embedding(te, b.tmp / "wide.pblg");
  EXPECT_EQ(run_cli({"search-text", "--gallery", b.gallery.string(), "--probe-embeddings",
                     (b.tmp / "probes.pblg").string(), "--text-embedding",
                     (b.tmp / "wide.pblg").string()})
                .code,
            cli::kMismatch);
}

// Noise-free hub whose stacked matrix has rank latent_dim + 1.
fs::path low_rank_hub(const TempDir& tmp) {
  const auto out = tmp / "hub";
  const auto res = run_cli({"synth", "--out", out.string(), "--concepts", "8", "--models", "6",
                            "--min-classes", "2", "--max-classes", "4", "--probes", "60",
                            "--latent-dim", "4", "--noise", "0", "--seed", "3"});
  EXPECT_EQ(res.code, 0) << res.err;
  return out / "responses";
}

TEST(CliComplete, FullFractionReproducesInput) {
  TempDir tmp;
  const auto dir = low_rank_hub(tmp);
  const auto out = tmp / "done";
  const auto res = run_cli({"complete", "--responses", dir.string(), "--fraction", "1.0",
                            "--rank", "8", "--iters", "300", "--tol", "0", "--lambda", "1e-6",
                            "--out", out.string()});
  ASSERT_EQ(res.code, 0) << res.err;
  const auto before = load_response_directory(dir);
  const auto after = load_response_directory(out);
  ASSERT_EQ(after.matrices.size(), before.matrices.size());
  for (std::size_t m = 0; m < before.matrices.size(); ++m) {
    EXPECT_TRUE(after.matrices[m].completed);
    EXPECT_TRUE(load_pblg(after.files[m]).completed);
    for (std::size_t t = 0; t < before.matrices[m].values.size(); ++t) {
      ASSERT_NEAR(after.matrices[m].values[t], before.matrices[m].values[t], 1e-3);
    }
  }
  std::ifstream in(out / "completion.json");
  const auto meta = json::parse(in);
  EXPECT_EQ(meta["rank"], 8);
  EXPECT_TRUE(meta["objective_trace"].is_array());
  EXPECT_TRUE(fs::exists(out / "run_manifest.json"));
}

TEST(CliComplete, SeededRunsAreByteIdentical) {
  TempDir tmp;
  const auto dir = low_rank_hub(tmp);
  for (const char* name : {"a", "b"}) {
    ASSERT_EQ(run_cli({"complete", "--responses", dir.string(), "--fraction", "0.3", "--rank",
                       "4", "--seed", "9", "--out", (tmp / name).string()})
                  .code,
              0);
  }
  EXPECT_EQ(tree_hashes(tmp / "a"), tree_hashes(tmp / "b"));
  EXPECT_FALSE(tree_hashes(tmp / "a").empty());
  ASSERT_EQ(run_cli({"complete", "--responses", dir.string(), "--fraction", "0.3", "--rank", "4",
                     "--seed", "10", "--out", (tmp / "c").string()})
                .code,
            0);
  EXPECT_NE(tree_hashes(tmp / "a"), tree_hashes(tmp / "c"));
}

TEST(CliComplete, RankOneFixture) {
  TempDir tmp;
  const auto ps = testing::probe_set(2);
  auto rm = testing::response_matrix("m", ps, 2, {1, 2, 2, 0});
  rm.mask = {1, 1, 1, 0};
  write_dir(tmp / "in", ps, {rm});
  const auto res = run_cli({"complete", "--responses", (tmp / "in").string(), "--rank", "1",
                            "--lambda", "1e-9", "--iters", "500", "--tol", "0", "--out",
                            (tmp / "out").string()});
  ASSERT_EQ(res.code, 0) << res.err;
  EXPECT_NEAR(load_response_matrix(tmp / "out" / "m.pblg").values[3], 4.0, 0.01);
}

TEST(CliComplete, ExitCodes) {
  TempDir tmp;
  const auto ps = testing::probe_set(3);
  write_dir(tmp / "in", ps, {testing::random_matrix("m", ps, 2, 1)});
  EXPECT_EQ(run_cli({"complete", "--responses", (tmp / "in").string(), "--rank", "5", "--out",
                     (tmp / "o").string()})
                .code,
            cli::kRankTooLarge);
  EXPECT_EQ(run_cli({"complete", "--responses", (tmp / "in").string(), "--fraction", "0",
                     "--rank", "1", "--out", (tmp / "o").string()})
                .code,
            cli::kConfigInvalid);

  auto rm = testing::random_matrix("m", ps, 2, 1);
  rm.mask = {1, 1, 1, 0, 0, 0};
  fs::remove_all(tmp / "in");
  write_dir(tmp / "in", ps, {rm});
  EXPECT_EQ(run_cli({"complete", "--responses", (tmp / "in").string(), "--rank", "1", "--out",
                     (tmp / "o").string()})
                .code,
            cli::kEmptyRow);
}

TEST(CliSynth, SameSeedSameTree) {
  TempDir tmp;
  const std::vector<std::string> flags = {"--concepts", "6",  "--models", "5", "--min-classes",
                                          "2",          "--max-classes", "3", "--probes", "50",
                                          "--latent-dim", "8"};
  for (const char* name : {"a", "b"}) {
    auto args = flags;
    args.insert(args.begin(), {"synth", "--out", (tmp / name).string()});
    ASSERT_EQ(run_cli(args).code, 0);
  }
  EXPECT_EQ(tree_hashes(tmp / "a"), tree_hashes(tmp / "b"));
  std::ifstream in(tmp / "a" / "run_manifest.json");
  const auto manifest = json::parse(in);
  EXPECT_EQ(manifest["seeds"]["seed"], 0);
}

TEST(CliSynth, InvalidConfigExitSeven) {
  TempDir tmp;
  EXPECT_EQ(run_cli({"synth", "--out", (tmp / "x").string(), "--min-classes", "40",
                     "--max-classes", "30"})
                .code,
            cli::kConfigInvalid);
}

TEST(CliEval, EndToEndOnDefaults) {
  TempDir tmp;
  const auto start = std::chrono::steady_clock::now();
  ASSERT_EQ(run_cli({"synth", "--out", (tmp / "hub").string()}).code, 0);
  ASSERT_EQ(run_cli({"build", "--responses", (tmp / "hub" / "responses").string(), "--labels",
                     (tmp / "hub" / "labels.tsv").string(), "--out", (tmp / "g.plgg").string()})
                .code,
            0);
  const auto res = run_cli({"eval", "--hub", (tmp / "hub").string(), "--out",
                            (tmp / "eval").string()});
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ASSERT_EQ(res.code, 0) << res.err;
  EXPECT_LT(secs, 60.0);
  std::ifstream in(tmp / "eval" / "report.json");
  const auto report = json::parse(in);
  ASSERT_EQ(report["scenarios"].size(), 2u);
  EXPECT_EQ(report["config"]["mapping_rules"], 0);
  for (const auto& s : report["scenarios"]) {
    EXPECT_GE(s["methods"][0]["top1_accuracy"].get<double>(), 80.0);
  }
  EXPECT_TRUE(fs::exists(tmp / "eval" / "table.csv"));
  EXPECT_TRUE(fs::exists(tmp / "eval" / "run_manifest.json"));
}

TEST(CliEval, MappingFileChangesRelevance) {
  TempDir tmp;
  ASSERT_EQ(run_cli({"synth", "--out", (tmp / "hub").string(), "--concepts", "6", "--models",
                     "12", "--min-classes", "2", "--max-classes", "3", "--probes", "80",
                     "--latent-dim", "8"})
                .code,
            0);
  // Every concept accepts every other concept: all retrievals become hits.
  std::ofstream map(tmp / "map.tsv");
  for (int a = 0; a < 6; ++a) {
    map << concept_name(a) << '\t';
    for (int b = 0; b < 6; ++b) map << (b ? "," : "") << concept_name(b);
    map << '\n';
  }
  map.close();
  const auto res = run_cli({"eval", "--hub", (tmp / "hub").string(), "--mapping",
                            (tmp / "map.tsv").string(), "--no-hits", "--out",
                            (tmp / "eval").string()});
  ASSERT_EQ(res.code, 0) << res.err;
  std::ifstream in(tmp / "eval" / "report.json");
  const auto report = json::parse(in);
  for (const auto& s : report["scenarios"]) {
    for (const auto& m : s["methods"]) EXPECT_EQ(m["top5_precision"], 100.0);
  }
}

TEST(CliCorrelate, WritesSquareMatrix) {
  BuiltGallery b;
  const auto res = run_cli({"correlate", "--responses", b.dir.string(), "--out",
                            (b.tmp / "corr.pblg").string()});
  ASSERT_EQ(res.code, 0) << res.err;
  const auto m = load_pblg(b.tmp / "corr.pblg");
  EXPECT_EQ(m.rows, 20u);
  EXPECT_EQ(m.cols, 20u);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_NEAR(m.at(i, i), 1.0, 1e-6);
}

TEST(CliInputs, NeverModified) {
  SmallResponses r;
  const auto before = tree_hashes(r.dir);
  ASSERT_EQ(run_cli({"build", "--responses", r.dir.string(), "--out",
                     (r.tmp / "g.plgg").string()})
                .code,
            0);
  ASSERT_EQ(run_cli({"complete", "--responses", r.dir.string(), "--rank", "2", "--iters", "3",
                     "--out", (r.tmp / "c").string()})
                .code,
            0);
  EXPECT_EQ(tree_hashes(r.dir), before);
}

}  // namespace
}  // namespace probelog
