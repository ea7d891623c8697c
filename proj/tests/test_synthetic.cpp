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

#include "probelog/eval.hpp"
#include "probelog/gallery.hpp"
#include "probelog/hub_io.hpp"
#include "probelog/synthetic.hpp"
#include "test_support.hpp"

namespace probelog {
namespace {

using testing::TempDir;

SyntheticHubConfig small() {
  SyntheticHubConfig cfg;
  cfg.n_concepts = 12;
  cfg.n_models = 24;
  cfg.min_classes = 3;
  cfg.max_classes = 6;
  cfg.n_probes = 300;
  cfg.latent_dim = 16;
  return cfg;
}

SyntheticHubConfig noiseless() {
  auto cfg = small();
  cfg.noise = 0.0;
  cfg.embedding_noise = 0.0;
  cfg.scale_min = cfg.scale_max = 1.0;
  cfg.shift_min = cfg.shift_max = 0.0;
  return cfg;
}

double hub_top1(const SyntheticHub& hub) {
  BenchmarkInputs in;
  in.hub = hub.models;
  in.labels = &hub.labels;
  return run_benchmark(in, BenchmarkConfig{}, LabelMapping{}).scenarios.at(0).methods.at(0)
      .top1_accuracy;
}

TEST(SyntheticHub, ShapesAndLabels) {
  const auto cfg = small();
  const auto hub = generate_synthetic_hub(cfg);
  EXPECT_EQ(hub.models.size(), cfg.n_models);
  EXPECT_EQ(hub.probes.size(), cfg.n_probes);
  EXPECT_EQ(hub.texts.size(), cfg.n_concepts);
  EXPECT_EQ(hub.probe_embeddings.dim, cfg.latent_dim);
  EXPECT_EQ(hub.probe_embeddings.probe_hash, hub.probes.content_hash);
  EXPECT_EQ(hub.concepts.front(), concept_name(0));
  std::size_t logits = 0;
  for (const auto& rm : hub.models) {
    EXPECT_GE(rm.n_logits, cfg.min_classes);
    EXPECT_LE(rm.n_logits, cfg.max_classes);
    EXPECT_EQ(rm.probe_hash, hub.probes.content_hash);
    EXPECT_NO_THROW(rm.validate());
    auto labels = hub.labels.model_labels(rm.model_id);
    EXPECT_EQ(labels.size(), rm.n_logits);
    std::sort(labels.begin(), labels.end());
    EXPECT_EQ(std::unique(labels.begin(), labels.end()), labels.end());
    logits += rm.n_logits;
  }
  EXPECT_EQ(hub.labels.size(), logits);
  EXPECT_EQ(hub.texts[3].prompt, concept_name(3));
}

TEST(SyntheticHub, Deterministic) {
  const auto a = generate_synthetic_hub(small());
  const auto b = generate_synthetic_hub(small());
  ASSERT_EQ(a.models.size(), b.models.size());
  for (std::size_t m = 0; m < a.models.size(); ++m) {
    EXPECT_EQ(a.models[m].values, b.models[m].values);
  }
  EXPECT_EQ(a.probe_embeddings.matrix, b.probe_embeddings.matrix);
  auto cfg = small();
  cfg.seed = 1;
  EXPECT_NE(generate_synthetic_hub(cfg).models[0].values, a.models[0].values);
}

TEST(SyntheticHub, ConfigValidation) {
  auto cfg = small();
  cfg.max_classes = 13;
  EXPECT_PROBELOG_ERROR(generate_synthetic_hub(cfg), ErrorCode::kConfigInvalid);
  cfg = small();
  cfg.min_classes = 7;
  cfg.max_classes = 6;
  EXPECT_PROBELOG_ERROR(generate_synthetic_hub(cfg), ErrorCode::kConfigInvalid);
  cfg = small();
  cfg.noise = -0.1;
  EXPECT_PROBELOG_ERROR(generate_synthetic_hub(cfg), ErrorCode::kConfigInvalid);
  cfg = small();
  cfg.scale_min = 0.0;
  EXPECT_PROBELOG_ERROR(generate_synthetic_hub(cfg), ErrorCode::kConfigInvalid);
  cfg = small();
  cfg.n_probes = 0;
  EXPECT_PROBELOG_ERROR(generate_synthetic_hub(cfg), ErrorCode::kConfigInvalid);
}

TEST(SyntheticHub, NoiselessLogitsOfOneConceptCoincide) {
  const auto hub = generate_synthetic_hub(noiseless());
  std::map<std::string, Descriptor> first;
  std::size_t pairs = 0;
  for (const auto& rm : hub.models) {
    for (std::size_t i = 0; i < rm.n_logits; ++i) {
      const auto label = *hub.labels.find(rm.model_id, i);
      const auto d = normalize_descriptor(extract_descriptor(rm, i));
      auto [it, fresh] = first.emplace(label, d);
      if (fresh) continue;
      ++pairs;
      for (std::size_t j = 0; j < d.size(); ++j) {
        ASSERT_NEAR(d.values[j], it->second.values[j], 1e-5) << label;
      }
    }
  }
  EXPECT_GT(pairs, 0u);
}

TEST(SyntheticHub, NoiselessTextMatchesLogit) {
  const auto hub = generate_synthetic_hub(noiseless());
  const auto& rm = hub.models[0];
  for (std::size_t i = 0; i < rm.n_logits; ++i) {
    const auto label = *hub.labels.find(rm.model_id, i);
    const auto c = static_cast<std::size_t>(
        std::find(hub.concepts.begin(), hub.concepts.end(), label) - hub.concepts.begin());
    const auto text = normalize_descriptor(zero_shot_descriptor(hub.probe_embeddings, hub.texts[c]));
    const auto logit = normalize_descriptor(extract_descriptor(rm, i));
    for (std::size_t j = 0; j < text.size(); ++j) {
      ASSERT_NEAR(text.values[j], logit.values[j], 1e-5);
    }
  }
}

TEST(SyntheticHub, WithinConceptCorrelationDominates) {
  SyntheticHubConfig cfg;
  cfg.n_concepts = 10;
  cfg.n_models = 10;
  cfg.min_classes = cfg.max_classes = 10;
  cfg.n_probes = 500;
  const auto hub = generate_synthetic_hub(cfg);
  std::vector<Descriptor> ds;
  std::vector<std::string> labels;
  for (const auto& rm : hub.models) {
    for (std::size_t i = 0; i < rm.n_logits; ++i) {
      ds.push_back(extract_descriptor(rm, i));
      labels.push_back(*hub.labels.find(rm.model_id, i));
    }
  }
  const auto corr = correlation_matrix(ds);
  double within = 0, between = 0;
  std::size_t nw = 0, nb = 0;
  for (std::size_t a = 0; a < ds.size(); ++a) {
    for (std::size_t b = a + 1; b < ds.size(); ++b) {
      if (labels[a] == labels[b]) {
        within += corr.at(a, b);
        ++nw;
      } else {
        between += corr.at(a, b);
        ++nb;
      }
    }
  }
  EXPECT_GT(within / nw, between / nb + 0.5);
}

TEST(SyntheticHub, SplitRetrievalIsAccurate) {
  EXPECT_GE(hub_top1(generate_synthetic_hub(small())), 95.0);
}

TEST(SyntheticHub, AccuracyNonIncreasingInNoise) {
  double previous = 101.0;
  for (double sigma : {0.0, 0.1, 0.5, 2.0}) {
    auto cfg = small();
    cfg.noise = sigma;
    cfg.low_activation_noise_scale = 5.0;
    const double acc = hub_top1(generate_synthetic_hub(cfg));
    EXPECT_LE(acc, previous) << "sigma " << sigma;
    previous = acc;
  }
}

TEST(SyntheticHub, DirectoryLayoutIsConsumable) {
  TempDir dir;
  const auto hub = generate_synthetic_hub(small());
  write_synthetic_hub(hub, dir.path());
  const auto loaded = load_response_directory(dir / "responses");
  ASSERT_EQ(loaded.matrices.size(), hub.models.size());
  EXPECT_EQ(loaded.probes->content_hash, hub.probes.content_hash);
  for (std::size_t m = 0; m < hub.models.size(); ++m) {
    EXPECT_EQ(loaded.matrices[m].values, hub.models[m].values);
  }
  EXPECT_EQ(LabelTable::load_tsv(dir / "labels.tsv").entries(), hub.labels.entries());
  EXPECT_EQ(load_probe_embeddings(dir / "embeddings/probes.pblg").matrix,
            hub.probe_embeddings.matrix);
  const auto te = load_text_embedding(dir / ("embeddings/text/" + concept_name(2) + ".pblg"));
  EXPECT_EQ(te.prompt, concept_name(2));
  EXPECT_EQ(te.vector, hub.texts[2].vector);
}

}  // namespace
}  // namespace probelog
