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
#include "probelog/completion.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "probelog/error.hpp"
#include "probelog/parallel.hpp"
#include "probelog/random.hpp"

namespace probelog {

namespace {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Observed positions of a mask, by row (CSR) and by column (CSC).
struct Pattern {
  std::vector<std::vector<std::uint32_t>> by_row;
  std::vector<std::vector<std::uint32_t>> by_col;
};

Pattern build_pattern(std::size_t rows, std::size_t cols,
                      std::span<const std::uint8_t> mask) {
  Pattern p;
  p.by_row.resize(rows);
  p.by_col.resize(cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      if (mask.empty() || mask[i * cols + j]) {
        p.by_row[i].push_back(static_cast<std::uint32_t>(j));
        p.by_col[j].push_back(static_cast<std::uint32_t>(i));
      }
    }
  }
  return p;
}

double objective(const Matrix& U, const Matrix& V, std::span<const float> values,
                 std::size_t cols, const Pattern& p, double lambda) {
  const std::size_t rows = p.by_row.size();
  std::vector<double> per_row(rows, 0.0);
  parallel_for(rows, [&](std::size_t i) {
    double s = 0.0;
    for (auto j : p.by_row[i]) {
      const double r = U.col(static_cast<Eigen::Index>(i)).dot(V.col(j)) -
                       static_cast<double>(values[i * cols + j]);
      s += r * r;
    }
    per_row[i] = s;
  });
  double total = 0.0;
  for (double s : per_row) total += s;
  return total + lambda * (U.squaredNorm() + V.squaredNorm());
}

// Solves every column of `target` given `fixed`, using the observed lists.
// `row_major_values` selects whether lists index rows (solving U) or columns.
void half_step(Matrix& target, const Matrix& fixed,
               const std::vector<std::vector<std::uint32_t>>& lists,
               std::span<const float> values, std::size_t cols, bool solving_rows,
               double lambda) {
  const auto rank = target.rows();
  parallel_for(lists.size(), [&](std::size_t a) {
    const auto& obs = lists[a];
    if (obs.empty()) {
      target.col(static_cast<Eigen::Index>(a)).setZero();
      return;
    }
    Matrix sub(rank, static_cast<Eigen::Index>(obs.size()));
    Vector rhs(static_cast<Eigen::Index>(obs.size()));
    for (std::size_t t = 0; t < obs.size(); ++t) {
      sub.col(static_cast<Eigen::Index>(t)) = fixed.col(obs[t]);
      const std::size_t idx = solving_rows ? a * cols + obs[t] : obs[t] * cols + a;
      rhs(static_cast<Eigen::Index>(t)) = values[idx];
    }
    Matrix gram = Matrix::Zero(rank, rank);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(sub);
    gram.diagonal().array() += lambda;
    Eigen::LLT<Matrix, Eigen::Lower> llt(gram);
    if (llt.info() != Eigen::Success ||
        (lambda == 0.0 && llt.rcond() < 1e-12)) {
      throw Error(ErrorCode::kSingularSolve,
                  std::string(solving_rows ? "row " : "column ") + std::to_string(a) +
                      " has a singular normal system (" + std::to_string(obs.size()) +
                      " observations, rank " + std::to_string(rank) + ")");
    }
    target.col(static_cast<Eigen::Index>(a)) = llt.solve(sub * rhs);
  });
}

}  // namespace

StackedMatrix stack_masked(std::span<const ResponseMatrix> hub) {
  StackedMatrix x;
  if (hub.empty()) return x;
  x.probe_hash = hub.front().probe_hash;
  x.cols = hub.front().n_probes;
  for (const auto& rm : hub) {
    if (rm.probe_hash != x.probe_hash) {
      throw Error(ErrorCode::kProbeMismatch,
                  rm.model_id + ": probe hash " + to_hex(rm.probe_hash) +
                      " differs from " + to_hex(x.probe_hash));
    }
    if (rm.n_probes != x.cols) {
      throw Error(ErrorCode::kShapeMismatch,
                  rm.model_id + ": " + std::to_string(rm.n_probes) + " probes, expected " +
                      std::to_string(x.cols));
    }
    for (std::size_t i = 0; i < rm.n_logits; ++i) {
      bool any = false;
      for (std::size_t j = 0; j < rm.n_probes; ++j) {
        const bool obs = rm.observed(i, j);
        any = any || obs;
        x.mask.push_back(obs ? 1 : 0);
      }
      if (!any) {
        throw Error(ErrorCode::kEmptyRow,
                    "(" + rm.model_id + ", " + std::to_string(i) + ") has no observed probes");
      }
      const auto row = rm.row(i);
      x.values.insert(x.values.end(), row.begin(), row.end());
      x.row_index.emplace_back(rm.model_id, i);
    }
  }
  x.rows = x.row_index.size();
  return x;
}

std::vector<std::uint8_t> sample_mask(std::size_t n_rows, std::size_t n_probes,
                                      double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error(ErrorCode::kFractionOutOfRange,
                "fraction " + std::to_string(fraction) + " outside (0, 1]");
  }
  const auto count = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n_probes))));
  std::vector<std::uint8_t> mask(n_rows * n_probes, 0);
  for (std::size_t r = 0; r < n_rows; ++r) {
    if (count >= n_probes) {
      std::fill_n(mask.begin() + static_cast<std::ptrdiff_t>(r * n_probes), n_probes, 1);
      continue;
    }
    SplitMix64 rng(derive_seed(seed, r));
    for (auto j : sample_without_replacement(rng, n_probes, count)) {
      mask[r * n_probes + j] = 1;
    }
  }
  return mask;
}

std::vector<ResponseMatrix> apply_model_masks(std::span<const ResponseMatrix> hub,
                                              double fraction, std::uint64_t seed) {
  std::vector<ResponseMatrix> out;
  out.reserve(hub.size());
  for (std::size_t m = 0; m < hub.size(); ++m) {
    const auto& rm = hub[m];
    if (!rm.fully_observed()) {
      throw Error(ErrorCode::kMaskedInput, rm.model_id + ": already masked");
    }
    const auto probe_mask = sample_mask(1, rm.n_probes, fraction, derive_seed(seed, m));
    ResponseMatrix masked = rm;
    masked.mask.resize(rm.n_logits * rm.n_probes);
    for (std::size_t i = 0; i < rm.n_logits; ++i) {
      std::copy(probe_mask.begin(), probe_mask.end(),
                masked.mask.begin() + static_cast<std::ptrdiff_t>(i * rm.n_probes));
    }
    out.push_back(std::move(masked));
  }
  return out;
}

CompletionResult als_complete(std::size_t rows, std::size_t cols,
                              std::span<const float> values,
                              std::span<const std::uint8_t> mask,
                              const CompletionConfig& cfg) {
  if (values.size() != rows * cols || (!mask.empty() && mask.size() != values.size())) {
    throw Error(ErrorCode::kShapeMismatch, "completion input size mismatch");
  }
  if (cfg.rank == 0 || cfg.max_iters == 0 || !(cfg.lambda >= 0.0) || !(cfg.tol >= 0.0)) {
    throw Error(ErrorCode::kConfigInvalid,
                "completion needs rank >= 1, max_iters >= 1, lambda >= 0, tol >= 0");
  }
  if (cfg.rank > std::min(rows, cols)) {
    throw Error(ErrorCode::kRankTooLarge,
                "rank " + std::to_string(cfg.rank) + " exceeds min(" +
                    std::to_string(rows) + ", " + std::to_string(cols) + ")");
  }
  const Pattern pattern = build_pattern(rows, cols, mask);
  for (std::size_t i = 0; i < rows; ++i) {
    if (pattern.by_row[i].empty()) {
      throw Error(ErrorCode::kEmptyRow, "row " + std::to_string(i) + " has no observations");
    }
  }

  CompletionResult result;
  for (std::size_t j = 0; j < cols; ++j) {
    if (pattern.by_col[j].empty()) result.flagged_columns.push_back(j);
  }

  const auto r = static_cast<Eigen::Index>(cfg.rank);
  Matrix U(r, static_cast<Eigen::Index>(rows));
  Matrix V(r, static_cast<Eigen::Index>(cols));
  SplitMix64 rng(cfg.seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.rank));
  for (Eigen::Index c = 0; c < U.cols(); ++c) {
    for (Eigen::Index t = 0; t < r; ++t) U(t, c) = scale * rng.gaussian();
  }
  for (Eigen::Index c = 0; c < V.cols(); ++c) {
    for (Eigen::Index t = 0; t < r; ++t) V(t, c) = scale * rng.gaussian();
  }

  double prev = objective(U, V, values, cols, pattern, cfg.lambda);
  result.objective_trace.push_back(prev);
  result.half_step_trace.push_back(prev);
  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    half_step(U, V, pattern.by_row, values, cols, true, cfg.lambda);
    result.half_step_trace.push_back(objective(U, V, values, cols, pattern, cfg.lambda));
    half_step(V, U, pattern.by_col, values, cols, false, cfg.lambda);
    const double cur = objective(U, V, values, cols, pattern, cfg.lambda);
    result.half_step_trace.push_back(cur);
    result.objective_trace.push_back(cur);
    result.iterations = it + 1;
    const double denom = std::max(prev, std::numeric_limits<double>::min());
    if ((prev - cur) / denom < cfg.tol) {
      result.converged = true;
      break;
    }
    prev = cur;
  }

  result.completed.resize(rows * cols);
  parallel_for(rows, [&](std::size_t i) {
    for (std::size_t j = 0; j < cols; ++j) {
      result.completed[i * cols + j] = static_cast<float>(
          U.col(static_cast<Eigen::Index>(i)).dot(V.col(static_cast<Eigen::Index>(j))));
    }
  });
  result.factors.rank = cfg.rank;
  result.factors.U.assign(U.data(), U.data() + U.size());
  result.factors.V.assign(V.data(), V.data() + V.size());
  return result;
}

CompletionResult als_complete(const StackedMatrix& x, const CompletionConfig& cfg) {
  return als_complete(x.rows, x.cols, x.values, x.mask, cfg);
}

std::vector<ResponseMatrix> unstack_completed(std::span<const ResponseMatrix> originals,
                                              std::span<const float> completed) {
  std::vector<ResponseMatrix> out;
  out.reserve(originals.size());
  std::size_t offset = 0;
  for (const auto& rm : originals) {
    const std::size_t n = rm.n_logits * rm.n_probes;
    if (offset + n > completed.size()) {
      throw Error(ErrorCode::kShapeMismatch, "completed matrix is smaller than the hub");
    }
    ResponseMatrix c;
    c.model_id = rm.model_id;
    c.probe_hash = rm.probe_hash;
    c.n_logits = rm.n_logits;
    c.n_probes = rm.n_probes;
    c.completed = true;
    c.values.assign(completed.begin() + static_cast<std::ptrdiff_t>(offset),
                    completed.begin() + static_cast<std::ptrdiff_t>(offset + n));
    offset += n;
    out.push_back(std::move(c));
  }
  if (offset != completed.size()) {
    throw Error(ErrorCode::kShapeMismatch, "completed matrix is larger than the hub");
  }
  return out;
}

double held_out_rmse(std::span<const float> completed, std::span<const float> truth,
                     std::span<const std::uint8_t> eval_mask,
                     std::span<const std::uint8_t> train_mask) {
  if (completed.size() != truth.size() || eval_mask.size() != truth.size() ||
      (!train_mask.empty() && train_mask.size() != truth.size())) {
    throw Error(ErrorCode::kShapeMismatch, "held-out RMSE inputs differ in size");
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    if (!eval_mask[t]) continue;
    if (!train_mask.empty() && train_mask[t]) {
      throw Error(ErrorCode::kInvariantViolation,
                  "entry " + std::to_string(t) + " is in both train and eval masks");
    }
    const double d = static_cast<double>(completed[t]) - static_cast<double>(truth[t]);
    sum += d * d;
    ++count;
  }
  if (count == 0) throw Error(ErrorCode::kEmptyEvalMask, "evaluation mask is empty");
  return std::sqrt(sum / static_cast<double>(count));
}

}  // namespace probelog
