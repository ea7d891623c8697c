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
#include <string>
#include <vector>

#include "probelog/descriptor.hpp"
#include "probelog/labels.hpp"
#include "probelog/zero_shot.hpp"

namespace probelog {

//! Generator for a hub with known ground-truth concepts.
//!
//! Concept directions w_c and probe latents p_j are standard Gaussian in
//! R^latent_dim. Model m owns a random concept subset (its logit order) and
//! responds f_m[i][j] = a_m * (w_c(i) . p_j) + b_m + e, with a_m > 0 and
//! e ~ N(0, noise^2), scaled by low_activation_noise_scale wherever
//! w_c(i) . p_j < 0. Probe embeddings are p_j + N(0, embedding_noise^2);
//! the text embedding of concept c is w_c + N(0, embedding_noise^2).
struct SyntheticHubConfig {
  std::size_t n_concepts = 50;
  std::size_t n_models = 200;
  std::size_t min_classes = 10;
  std::size_t max_classes = 30;
  std::size_t n_probes = 1000;
  std::size_t latent_dim = 64;
  double noise = 0.1;
  double low_activation_noise_scale = 1.0;
  double scale_min = 0.5;
  double scale_max = 2.0;
  double shift_min = -1.0;
  double shift_max = 1.0;
  double embedding_noise = 0.5;
  std::uint64_t seed = 0;

  //! Throws ConfigInvalid.
  void validate() const;
};

struct SyntheticHub {
  ProbeSet probes;
  std::vector<ResponseMatrix> models;
  LabelTable labels;
  ProbeEmbeddings probe_embeddings;
  std::vector<std::string> concepts;
  //! One per concept, prompt = concept name.
  std::vector<TextEmbedding> texts;
};

SyntheticHub generate_synthetic_hub(const SyntheticHubConfig& cfg);

std::string concept_name(std::size_t c);

//! Hub directory layout:
//!   responses/probeset.json, responses/<model>.pblg + .json
//!   labels.tsv
//!   embeddings/probes.pblg + .json
//!   embeddings/text/<concept>.pblg + .json
//!   concepts.txt
void write_synthetic_hub(const SyntheticHub& hub, const std::filesystem::path& dir);

}  // namespace probelog
