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

#include <cstring>
#include <fstream>

#include "json.hpp"
#include "probelog/zero_shot.hpp"
#include "test_support.hpp"

namespace probelog {
namespace {

using testing::TempDir;

ProbeEmbeddings embeddings(std::size_t n, std::size_t dim, std::vector<float> m) {
  ProbeEmbeddings pe;
  pe.probe_hash = testing::probe_set(n).content_hash;
  pe.n_probes = n;
  pe.dim = dim;
  pe.matrix = std::move(m);
  return pe;
}

TextEmbedding text(std::vector<float> v, std::string prompt = "dog") {
  TextEmbedding te;
  te.prompt = std::move(prompt);
  te.vector = std::move(v);
  return te;
}

TEST(ZeroShot, OrthonormalProbes) {
  const auto pe = embeddings(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  const auto d = zero_shot_descriptor(pe, text({0, 1, 0}));
  EXPECT_EQ(d.values, (std::vector<float>{0, 1, 0}));
  EXPECT_FALSE(d.normalized);
  EXPECT_TRUE(d.origin.is_text());
  EXPECT_EQ(d.origin.text_tag, "dog");
}

TEST(ZeroShot, DotProducts) {
  const auto pe = embeddings(3, 2, {1, 0, 0, 1, 0.70711f, 0.70711f});
  const auto d = zero_shot_descriptor(pe, text({0.6f, 0.8f}));
  EXPECT_NEAR(d.values[0], 0.6, 1e-7);
  EXPECT_NEAR(d.values[1], 0.8, 1e-7);
  EXPECT_NEAR(d.values[2], 0.98995, 1e-5);
}

TEST(ZeroShot, ZeroTextIsDegenerateAfterNormalization) {
  const auto pe = embeddings(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  const auto d = zero_shot_descriptor(pe, text({0, 0, 0}));
  EXPECT_EQ(d.values, (std::vector<float>{0, 0, 0}));
  EXPECT_PROBELOG_ERROR(normalize_descriptor(d), ErrorCode::kDegenerateDescriptor);
}

TEST(ZeroShot, DimMismatch) {
  const auto pe = embeddings(2, 2, {1, 0, 0, 1});
  EXPECT_PROBELOG_ERROR(zero_shot_descriptor(pe, text({1, 2, 3})), ErrorCode::kDimMismatch);
}

TEST(ZeroShot, LinearInText) {
  SplitMix64 rng(17);
  const std::size_t n = 50, dim = 16;
  std::vector<float> m(n * dim);
  for (auto& x : m) x = static_cast<float>(rng.gaussian());
  const auto pe = embeddings(n, dim, m);
  std::vector<float> t1(dim), t2(dim), mix(dim);
  const float a = 1.7f, b = -0.4f;
  for (std::size_t i = 0; i < dim; ++i) {
    t1[i] = static_cast<float>(rng.gaussian());
    t2[i] = static_cast<float>(rng.gaussian());
    mix[i] = a * t1[i] + b * t2[i];
  }
  const auto d1 = zero_shot_descriptor(pe, text(t1));
  const auto d2 = zero_shot_descriptor(pe, text(t2));
  const auto dm = zero_shot_descriptor(pe, text(mix));
  for (std::size_t j = 0; j < n; ++j) {
    EXPECT_NEAR(dm.values[j], a * d1.values[j] + b * d2.values[j], 1e-5);
  }
}

TEST(ZeroShot, PowerOfTwoTextScalingIsBitIdenticalAfterNormalization) {
  SplitMix64 rng(19);
  const std::size_t n = 200, dim = 32;
  std::vector<float> m(n * dim);
  for (auto& x : m) x = static_cast<float>(rng.gaussian());
  const auto pe = embeddings(n, dim, m);
  std::vector<float> t(dim), t8(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    t[i] = static_cast<float>(rng.gaussian());
    t8[i] = 8.0f * t[i];
  }
  const auto a = normalize_descriptor(zero_shot_descriptor(pe, text(t)));
  const auto b = normalize_descriptor(zero_shot_descriptor(pe, text(t8)));
  ASSERT_EQ(a.values.size(), b.values.size());
  EXPECT_EQ(std::memcmp(a.values.data(), b.values.data(), 4 * n), 0);

  // Any positive scale agrees to float precision.
  std::vector<float> t3(dim);
  for (std::size_t i = 0; i < dim; ++i) t3[i] = 3.3f * t[i];
  const auto c = normalize_descriptor(zero_shot_descriptor(pe, text(t3)));
  for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(c.values[j], a.values[j], 1e-5);
}

TEST(ZeroShotFiles, ProbeEmbeddingsRoundTrip) {
  TempDir dir;
  auto pe = embeddings(3, 2, {1, 2, 3, 4, 5, 6});
  pe.producer = "clip-vit-b32";
  pe.unit_normalized = true;
  save_probe_embeddings(pe, dir / "probes.pblg");
  EXPECT_TRUE(std::filesystem::exists(dir / "probes.json"));
  const auto back = load_probe_embeddings(dir / "probes.pblg");
  EXPECT_EQ(back.matrix, pe.matrix);
  EXPECT_EQ(back.probe_hash, pe.probe_hash);
  EXPECT_EQ(back.dim, 2u);
  EXPECT_EQ(back.n_probes, 3u);
  EXPECT_EQ(back.producer, "clip-vit-b32");
  EXPECT_TRUE(back.unit_normalized);

  std::ifstream in(dir / "probes.json");
  const auto side = nlohmann::json::parse(in);
  EXPECT_EQ(side.at("dim"), 2);
  EXPECT_EQ(side.at("probe_hash"), to_hex(pe.probe_hash));
}

TEST(ZeroShotFiles, SidecarDimMustMatchBlock) {
  TempDir dir;
  save_probe_embeddings(embeddings(3, 2, {1, 2, 3, 4, 5, 6}), dir / "probes.pblg");
  std::ifstream in(dir / "probes.json");
  auto side = nlohmann::json::parse(in);
  in.close();
  side["dim"] = 3;
  std::ofstream(dir / "probes.json") << side.dump();
  EXPECT_PROBELOG_ERROR(load_probe_embeddings(dir / "probes.pblg"), ErrorCode::kDimMismatch);
}

TEST(ZeroShotFiles, TextEmbeddingRoundTrip) {
  TempDir dir;
  auto te = text({0.25f, -1.5f, 3.0f}, "siamese cat");
  te.producer = "clip";
  save_text_embedding(te, dir / "cat.pblg");
  const auto back = load_text_embedding(dir / "cat.pblg");
  EXPECT_EQ(back.vector, te.vector);
  EXPECT_EQ(back.prompt, "siamese cat");
  EXPECT_EQ(back.producer, "clip");
  EXPECT_EQ(load_pblg(dir / "cat.pblg").rows, 1u);
  EXPECT_EQ(sidecar_path("a/b/cat.pblg"), std::filesystem::path("a/b/cat.json"));
}

TEST(ZeroShotFiles, MissingSidecarIsRejected) {
  TempDir dir;
  save_text_embedding(text({1, 2}), dir / "t.pblg");
  std::filesystem::remove(dir / "t.json");
  EXPECT_THROW(load_text_embedding(dir / "t.pblg"), Error);
}

}  // namespace
}  // namespace probelog
