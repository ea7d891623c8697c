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

#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "probelog/descriptor.hpp"
#include "probelog/digest.hpp"
#include "probelog/labels.hpp"
#include "test_support.hpp"

namespace probelog {
namespace {

using testing::TempDir;

TEST(ProbeSet, HashIsLengthPrefixedIds) {
  std::vector<std::uint8_t> buf;
  for (const std::string id : {"a", "bc", ""}) {
    const auto n = static_cast<std::uint32_t>(id.size());
    for (int b = 0; b < 4; ++b) buf.push_back(static_cast<std::uint8_t>(n >> (8 * b)));
    buf.insert(buf.end(), id.begin(), id.end());
  }
  const auto ps = ProbeSet::create({"a", "bc", ""}, "src");
  EXPECT_EQ(ps.content_hash, sha256(buf));
  EXPECT_EQ(ps.size(), 3u);
}

TEST(ProbeSet, OrderMattersAndIdsAreUnique) {
  EXPECT_NE(ProbeSet::create({"a", "b"}, "s").content_hash,
            ProbeSet::create({"b", "a"}, "s").content_hash);
  // Length prefixes keep concatenations apart.
  EXPECT_NE(ProbeSet::create({"ab", "c"}, "s").content_hash,
            ProbeSet::create({"a", "bc"}, "s").content_hash);
  EXPECT_PROBELOG_ERROR(ProbeSet::create({"a", "a"}, "s"), ErrorCode::kConfigInvalid);
}

TEST(ProbeSet, ManifestRoundTripAndTamperDetection) {
  TempDir dir;
  const auto ps = ProbeSet::create({"img_1.jpg", "img_2.jpg", "über.png"}, "scenes");
  save_probe_set(ps, dir / "probeset.json");
  const auto back = load_probe_set(dir / "probeset.json");
  EXPECT_EQ(back.probe_ids, ps.probe_ids);
  EXPECT_EQ(back.source_name, "scenes");
  EXPECT_EQ(back.content_hash, ps.content_hash);

  std::ifstream in(dir / "probeset.json");
  auto doc = nlohmann::json::parse(in);
  EXPECT_EQ(doc["content_hash"], to_hex(ps.content_hash));
  doc["probe_ids"][0] = "img_9.jpg";
  std::ofstream(dir / "bad.json") << doc.dump();
  EXPECT_PROBELOG_ERROR(load_probe_set(dir / "bad.json"), ErrorCode::kCorruptFile);
}

TEST(ExtractDescriptor, SelectsRow) {
  const auto ps = testing::probe_set(3);
  const auto rm = testing::response_matrix("m", ps, 2, {1, 2, 3, 4, 5, 6});
  const auto d = extract_descriptor(rm, 1);
  EXPECT_EQ(d.values, (std::vector<float>{4, 5, 6}));
  EXPECT_FALSE(d.normalized);
  EXPECT_TRUE(d.fully_available());
  EXPECT_EQ(d.origin.model_id, "m");
  EXPECT_EQ(d.origin.logit_index, 1u);
}

TEST(ExtractDescriptor, OutOfRange) {
  const auto ps = testing::probe_set(3);
  const auto rm = testing::response_matrix("m", ps, 1, {1, 2, 3});
  EXPECT_PROBELOG_ERROR(extract_descriptor(rm, 3), ErrorCode::kIndexOutOfRange);
}

TEST(ExtractDescriptor, MaskPassthrough) {
  const auto ps = testing::probe_set(3);
  auto rm = testing::response_matrix("m", ps, 1, {1, 2, 3});
  rm.mask = {1, 0, 1};
  const auto d = extract_descriptor(rm, 0);
  EXPECT_EQ(d.available, (std::vector<std::uint8_t>{1, 0, 1}));
  EXPECT_EQ(d.values[0], 1.0f);
  EXPECT_EQ(d.values[2], 3.0f);
  EXPECT_FALSE(d.fully_available());

  rm.mask = {0, 0, 0};
  EXPECT_PROBELOG_ERROR(extract_descriptor(rm, 0), ErrorCode::kMaskedRowEmpty);
}

TEST(ExtractDescriptor, RowsReconstructMatrix) {
  const auto ps = testing::probe_set(17);
  const auto rm = testing::random_matrix("m", ps, 5, 3);
  std::vector<float> rebuilt;
  for (std::size_t i = 0; i < rm.n_logits; ++i) {
    const auto d = extract_descriptor(rm, i);
    rebuilt.insert(rebuilt.end(), d.values.begin(), d.values.end());
  }
  EXPECT_EQ(rebuilt, rm.values);
}

TEST(NormalizeDescriptor, OneTwoThree) {
  const auto d = testing::normalized({1, 2, 3});
  EXPECT_TRUE(d.normalized);
  EXPECT_NEAR(d.values[0], -1.224745, 1e-6);
  EXPECT_EQ(d.values[1], 0.0f);
  EXPECT_NEAR(d.values[2], 1.224745, 1e-6);
  EXPECT_DOUBLE_EQ(d.mu, 2.0);
  EXPECT_NEAR(d.sigma, 0.816497, 1e-6);
}

TEST(NormalizeDescriptor, MatchesTwoPassOracle) {
  SplitMix64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<float> x(1 + rng.below(300) + 1);
    const double scale = std::exp(rng.uniform(-5, 5));
    const double shift = rng.uniform(-100, 100);
    for (auto& v : x) v = static_cast<float>(shift + scale * rng.gaussian());
    const auto expected = testing::zscore_oracle(x);
    const auto got = testing::normalized(x);
    for (std::size_t i = 0; i < x.size(); ++i) {
      ASSERT_NEAR(got.values[i], expected[i], 1e-5) << "trial " << trial;
    }
  }
}

TEST(NormalizeDescriptor, RejectsConstantAndMasked) {
  EXPECT_PROBELOG_ERROR(testing::normalized({5, 5, 5}), ErrorCode::kDegenerateDescriptor);
  auto d = testing::raw({1, 2, 3});
  d.available = {1, 0, 1};
  EXPECT_PROBELOG_ERROR(normalize_descriptor(d), ErrorCode::kMaskedInput);
}

TEST(NormalizeDescriptor, AffineMap) {
  const std::vector<float> x = {0.3f, -1.7f, 2.2f, 0.9f, 4.1f};
  std::vector<float> y, z;
  for (float v : x) {
    y.push_back(2 * v + 7);
    z.push_back(-3 * v + 1);
  }
  const auto nx = testing::normalized(x);
  const auto ny = testing::normalized(y);
  const auto nz = testing::normalized(z);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_NEAR(ny.values[i], nx.values[i], 1e-6);
    EXPECT_NEAR(nz.values[i], -nx.values[i], 1e-6);
  }
}

TEST(NormalizeDescriptor, Idempotent) {
  const auto once = testing::normalized({0.1f, 7.0f, -3.0f, 2.5f});
  const auto twice = normalize_descriptor(once);
  for (std::size_t i = 0; i < once.size(); ++i) {
    EXPECT_NEAR(twice.values[i], once.values[i], 1e-6);
  }
}

TEST(ValidateAlignment, HashAndShape) {
  const auto ps = testing::probe_set(3);
  auto rm = testing::response_matrix("m", ps, 1, {1, 2, 3});
  EXPECT_NO_THROW(validate_alignment(ps, rm));

  auto wide = testing::response_matrix("m", ps, 1, {1, 2, 3, 4});
  wide.n_probes = 4;
  EXPECT_PROBELOG_ERROR(validate_alignment(ps, wide), ErrorCode::kShapeMismatch);

  rm.probe_hash = testing::probe_set(3, "q").content_hash;
  try {
    validate_alignment(ps, rm);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kProbeMismatch);
    const std::string msg = e.what();
    EXPECT_NE(msg.find(to_hex(ps.content_hash)), std::string::npos);
    EXPECT_NE(msg.find(to_hex(rm.probe_hash)), std::string::npos);
  }
}

TEST(ResponseMatrix, ValidateChecksInvariants) {
  const auto ps = testing::probe_set(2);
  auto rm = testing::response_matrix("m", ps, 2, {1, 2, 3, 4});
  EXPECT_NO_THROW(rm.validate());
  EXPECT_TRUE(rm.fully_observed());

  rm.mask = {1, 1, 1, 1};
  EXPECT_TRUE(rm.fully_observed());
  rm.mask = {1, 0, 0, 0};
  EXPECT_PROBELOG_ERROR(rm.validate(), ErrorCode::kMaskedRowEmpty);

  rm.mask = {1, 0, 0, 1};
  rm.values[1] = std::numeric_limits<float>::quiet_NaN();  // masked: allowed
  EXPECT_NO_THROW(rm.validate());
  rm.values[0] = std::numeric_limits<float>::infinity();
  EXPECT_PROBELOG_ERROR(rm.validate(), ErrorCode::kInvariantViolation);

  auto empty = testing::response_matrix("m", ps, 0, {});
  EXPECT_PROBELOG_ERROR(empty.validate(), ErrorCode::kInvariantViolation);
}

TEST(ResponseMatrix, PblgConversion) {
  const auto ps = testing::probe_set(3);
  auto rm = testing::response_matrix("m", ps, 2, {1, 2, 3, 4, 5, 6});
  rm.mask = {1, 1, 0, 0, 1, 1};
  const auto m = rm.to_pblg();
  EXPECT_EQ(m.rows, 2u);
  EXPECT_EQ(m.cols, 3u);
  EXPECT_EQ(m.mask, rm.mask);
  const auto back = ResponseMatrix::from_pblg(m, "m", ps.content_hash);
  EXPECT_EQ(back.values, rm.values);
  EXPECT_EQ(back.mask, rm.mask);
  EXPECT_EQ(back.n_logits, 2u);
}

TEST(LabelTable, TsvRoundTrip) {
  TempDir dir;
  LabelTable t;
  t.set("model_b", 1, "siamese cat");
  t.set("model_a", 0, "dog");
  t.set("model_b", 0, "husky");
  t.save_tsv(dir / "labels.tsv");
  const auto back = LabelTable::load_tsv(dir / "labels.tsv");
  EXPECT_EQ(back.entries(), t.entries());
  EXPECT_EQ(back.find("model_b", 1), std::optional<std::string>("siamese cat"));
  EXPECT_FALSE(back.find("model_b", 2).has_value());
  EXPECT_EQ(back.model_labels("model_b"), (std::vector<std::string>{"husky", "siamese cat"}));
}

TEST(LabelTable, RejectsMalformedLines) {
  TempDir dir;
  std::ofstream(dir / "a.tsv") << "# comment\nm\t0\tcat\n\nm\tx\tdog\n";
  EXPECT_PROBELOG_ERROR(LabelTable::load_tsv(dir / "a.tsv"), ErrorCode::kCorruptFile);
  std::ofstream(dir / "b.tsv") << "m\t0\n";
  EXPECT_PROBELOG_ERROR(LabelTable::load_tsv(dir / "b.tsv"), ErrorCode::kCorruptFile);
}

}  // namespace
}  // namespace probelog
