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
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "probelog/descriptor.hpp"

namespace probelog {

struct CompletionConfig {
  std::size_t rank = 16;
  std::size_t max_iters = 100;
  //! Stop once the relative objective decrease of a full iteration is below.
  double tol = 1e-5;
  double lambda = 1e-3;
  std::uint64_t seed = 0;
};

//! Every logit of every model stacked row-wise, logit-major.
struct StackedMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Digest probe_hash{};
  std::vector<float> values;
  std::vector<std::uint8_t> mask;  // rows x cols, 1 = observed
  //! (model_id, logit_index) of each row.
  std::vector<std::pair<std::string, std::size_t>> row_index;
};

//! Rows in input order; dense inputs contribute all-ones mask rows.
//! Errors: ProbeMismatch, ShapeMismatch, EmptyRow (names model and logit).
StackedMatrix stack_masked(std::span<const ResponseMatrix> hub);

//! For each row, exactly round(p * n_probes) observed columns (at least one)
//! drawn without replacement from a stream derived from (seed, row).
//! Errors: FractionOutOfRange unless 0 < p <= 1.
std::vector<std::uint8_t> sample_mask(std::size_t n_rows, std::size_t n_probes,
                                      double fraction, std::uint64_t seed);

//! Collaborative-probing simulation: each model observes one sampled probe
//! subset shared by all of its logits (model m uses the stream (seed, m)).
//! Inputs must be dense; returns masked copies.
std::vector<ResponseMatrix> apply_model_masks(std::span<const ResponseMatrix> hub,
                                              double fraction, std::uint64_t seed);

//! Low-rank factors: X ~ U^T V with U rank x rows, V rank x cols, column-major
//! per factor vector (factor t of row i at U[i * rank + t]).
struct FactorPair {
  std::size_t rank = 0;
  std::vector<double> U;
  std::vector<double> V;
};

struct CompletionResult {
  FactorPair factors;
  //! U^T V, rows x cols.
  std::vector<float> completed;
  //! Masked ridge objective: entry 0 is the initial value, then one entry per
  //! full iteration.
  std::vector<double> objective_trace;
  //! Objective after every half-step (initial value first).
  std::vector<double> half_step_trace;
  std::size_t iterations = 0;
  bool converged = false;
  //! Columns with no observation anywhere; their values are extrapolated.
  std::vector<std::size_t> flagged_columns;
};

//! Alternating ridge least squares over the observed entries. Each
//! half-step solves every row (then column) exactly, so the objective never
//! increases. Errors: RankTooLarge, EmptyRow, SingularSolve (lambda = 0),
//! ConfigInvalid.
CompletionResult als_complete(std::size_t rows, std::size_t cols,
                              std::span<const float> values,
                              std::span<const std::uint8_t> mask,
                              const CompletionConfig& cfg);
CompletionResult als_complete(const StackedMatrix& x, const CompletionConfig& cfg);

//! Splits a completed stack back into per-model matrices (completed = true,
//! mask cleared), matching the order and shapes of `originals`.
std::vector<ResponseMatrix> unstack_completed(std::span<const ResponseMatrix> originals,
                                              std::span<const float> completed);

//! RMS error over eval_mask entries. Errors: ShapeMismatch, EmptyEvalMask,
//! InvariantViolation when eval_mask overlaps train_mask.
double held_out_rmse(std::span<const float> completed, std::span<const float> truth,
                     std::span<const std::uint8_t> eval_mask,
                     std::span<const std::uint8_t> train_mask = {});

}  // namespace probelog
