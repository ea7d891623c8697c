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
#include "probelog/synthetic.hpp"

#include <cstdio>
#include <sstream>

#include "json_io.hpp"
#include "probelog/error.hpp"
#include "probelog/hub_io.hpp"
#include "probelog/random.hpp"

namespace probelog {

namespace {

// Stream ids for derive_seed; models use kModelStream + m.
constexpr std::uint64_t kConceptStream = 1;
constexpr std::uint64_t kProbeStream = 2;
constexpr std::uint64_t kProbeEmbeddingStream = 3;
constexpr std::uint64_t kTextStream = 4;
constexpr std::uint64_t kModelStream = 1000;

std::string numbered(const char* prefix, std::size_t i, int width) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%0*zu", prefix, width, i);
  return buf;
}

std::vector<double> gaussian_rows(std::uint64_t seed, std::size_t rows, std::size_t dim) {
  SplitMix64 rng(seed);
  std::vector<double> out(rows * dim);
  for (auto& v : out) v = rng.gaussian();
  return out;
}

}  // namespace

void SyntheticHubConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kConfigInvalid, what);
  };
  if (n_concepts == 0 || n_models == 0 || n_probes == 0 || latent_dim == 0) {
    fail("concept, model, probe and latent counts must be positive");
  }
  if (min_classes == 0 || min_classes > max_classes) {
    fail("classes per model must satisfy 1 <= min <= max");
  }
  if (max_classes > n_concepts) fail("classes per model cannot exceed the concept count");
  if (!(noise >= 0.0) || !(embedding_noise >= 0.0) ||
      !(low_activation_noise_scale >= 0.0)) {
    fail("noise levels must be non-negative");
  }
  if (!(scale_min > 0.0) || scale_min > scale_max) {
    fail("calibration scale range must be positive and ordered");
  }
  if (shift_min > shift_max) fail("calibration shift range must be ordered");
}

std::string concept_name(std::size_t c) { return numbered("concept", c, 3); }

SyntheticHub generate_synthetic_hub(const SyntheticHubConfig& cfg) {
  cfg.validate();
  const std::size_t d = cfg.latent_dim;
  const auto concepts = gaussian_rows(derive_seed(cfg.seed, kConceptStream), cfg.n_concepts, d);
  const auto probes = gaussian_rows(derive_seed(cfg.seed, kProbeStream), cfg.n_probes, d);

  // activation[c][j] = w_c . p_j, shared by every logit of concept c.
  std::vector<double> activation(cfg.n_concepts * cfg.n_probes);
  for (std::size_t c = 0; c < cfg.n_concepts; ++c) {
    for (std::size_t j = 0; j < cfg.n_probes; ++j) {
      double dot = 0.0;
      for (std::size_t t = 0; t < d; ++t) dot += concepts[c * d + t] * probes[j * d + t];
      activation[c * cfg.n_probes + j] = dot;
    }
  }

  SyntheticHub hub;
  std::vector<std::string> ids;
  ids.reserve(cfg.n_probes);
  for (std::size_t j = 0; j < cfg.n_probes; ++j) ids.push_back(numbered("probe", j, 5));
  hub.probes = ProbeSet::create(std::move(ids), "synthetic-gaussian");
  for (std::size_t c = 0; c < cfg.n_concepts; ++c) hub.concepts.push_back(concept_name(c));

  for (std::size_t m = 0; m < cfg.n_models; ++m) {
    SplitMix64 rng(derive_seed(cfg.seed, kModelStream + m));
    const std::size_t classes =
        cfg.min_classes + rng.below(cfg.max_classes - cfg.min_classes + 1);
    const auto subset = sample_without_replacement(rng, cfg.n_concepts, classes);
    const double a = rng.uniform(cfg.scale_min, cfg.scale_max);
    const double b = rng.uniform(cfg.shift_min, cfg.shift_max);
    ResponseMatrix rm;
    rm.model_id = numbered("model", m, 4);
    rm.probe_hash = hub.probes.content_hash;
    rm.n_logits = classes;
    rm.n_probes = cfg.n_probes;
    rm.values.resize(classes * cfg.n_probes);
    for (std::size_t i = 0; i < classes; ++i) {
      const double* act = activation.data() + subset[i] * cfg.n_probes;
      for (std::size_t j = 0; j < cfg.n_probes; ++j) {
        double sigma = cfg.noise;
        if (act[j] < 0.0) sigma *= cfg.low_activation_noise_scale;
        rm.values[i * cfg.n_probes + j] =
            static_cast<float>(a * act[j] + b + sigma * rng.gaussian());
      }
      hub.labels.set(rm.model_id, i, hub.concepts[subset[i]]);
    }
    hub.models.push_back(std::move(rm));
  }

  {
    SplitMix64 rng(derive_seed(cfg.seed, kProbeEmbeddingStream));
    auto& pe = hub.probe_embeddings;
    pe.probe_hash = hub.probes.content_hash;
    pe.n_probes = cfg.n_probes;
    pe.dim = d;
    pe.producer = "synthetic";
    pe.matrix.resize(cfg.n_probes * d);
    for (std::size_t t = 0; t < pe.matrix.size(); ++t) {
      pe.matrix[t] = static_cast<float>(probes[t] + cfg.embedding_noise * rng.gaussian());
    }
  }
  {
    SplitMix64 rng(derive_seed(cfg.seed, kTextStream));
    for (std::size_t c = 0; c < cfg.n_concepts; ++c) {
      TextEmbedding te;
      te.prompt = hub.concepts[c];
      te.producer = "synthetic";
      te.vector.resize(d);
      for (std::size_t t = 0; t < d; ++t) {
        te.vector[t] =
            static_cast<float>(concepts[c * d + t] + cfg.embedding_noise * rng.gaussian());
      }
      hub.texts.push_back(std::move(te));
    }
  }
  return hub;
}

void write_synthetic_hub(const SyntheticHub& hub, const std::filesystem::path& dir) {
  const auto responses = dir / "responses";
  std::filesystem::create_directories(responses);
  save_probe_set(hub.probes, responses / kProbeManifestName);
  for (const auto& rm : hub.models) {
    save_response_matrix(rm, responses / (rm.model_id + ".pblg"));
  }
  hub.labels.save_tsv(dir / "labels.tsv");
  save_probe_embeddings(hub.probe_embeddings, dir / "embeddings" / "probes.pblg");
  for (const auto& te : hub.texts) {
    save_text_embedding(te, dir / "embeddings" / "text" / (te.prompt + ".pblg"));
  }
  std::ostringstream names;
  for (const auto& c : hub.concepts) names << c << '\n';
  detail::write_text(dir / "concepts.txt", names.str());
}

}  // namespace probelog
