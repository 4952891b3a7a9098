// Copyright 2026 The sspk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SSPK_OPS_HPP_
#define SSPK_OPS_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "sspk/tape.hpp"
#include "sspk/tensor.hpp"

namespace sspk {

enum class Mode { kTrain, kInfer };

// Rolling normalization statistics for one batchnorm layer. Accumulated in
// double so millions of small updates do not drift; consumed in infer mode
// to make outputs independent of batch composition.
struct BatchNormState {
  explicit BatchNormState(int64_t dim)
      : running_mean(static_cast<size_t>(dim), 0.0),
        running_var(static_cast<size_t>(dim), 1.0) {}
  BatchNormState() = default;

  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = 0.1;
  int64_t dim() const { return static_cast<int64_t>(running_mean.size()); }
};

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kStatsPoolEps = 1e-10;

// y = x @ w + b.  x: [n, din], w: [din, dout], b: [dout].
Var affine(Tape& tape, Var x, Var w, Var b);

// Elementwise max(x, 0); the subgradient at exactly 0 is taken as 0.
Var relu(Tape& tape, Var x);

// Per-feature normalization over the rows of x ([n, d]). Train mode uses
// batch statistics (population variance, n >= 2 required) and folds them
// into `state`; infer mode reads `state` and leaves it untouched.
Var batchnorm(Tape& tape, Var x, Var gamma, Var beta, BatchNormState& state,
              Mode mode);

// Frame context splicing. x: [t, d] -> [t, d * offsets.size()], where output
// block k at frame i is row clamp(i + offsets[k], 0, t - 1) of x.
Var splice(Tape& tape, Var x, const std::vector<int>& offsets);

// Temporal statistics pooling. x: [t, d] -> [2d] vector of per-feature means
// followed by per-feature standard deviations sqrt(var + kStatsPoolEps).
Var stats_pool(Tape& tape, Var x);

// Mean cross-entropy of softmax(logits) against integer labels.
// logits: [n, k], labels.size() == n, each label in [0, k). Returns scalar.
Var softmax_ce(Tape& tape, Var logits, const std::vector<int64_t>& labels);

// (1 / t) * sum of squared differences between predicted ([t, d]) and the
// fixed target of the same shape. Returns scalar.
Var mse_frames(Tape& tape, Var predicted, const Tensor& target);

// -- structural ops ---------------------------------------------------------

// Repeats a [d] vector as every row of an [n, d] matrix.
Var broadcast_rows(Tape& tape, Var row, int64_t n);

// Column-wise concatenation of [n, a] and [n, b] into [n, a + b].
Var concat_cols(Tape& tape, Var a, Var b);

// Row-wise concatenation of [n_i, d] matrices into a [sum(n_i), d] matrix.
Var concat_rows(Tape& tape, std::span<const Var> parts);

// Copies `count` consecutive rows of an [n, d] matrix starting at `begin`.
Var slice_rows(Tape& tape, Var m, int64_t begin, int64_t count);

// Stacks k same-length [d] vectors into a [k, d] matrix.
Var stack_rows(Tape& tape, std::span<const Var> rows);

// Extracts one row of an [n, d] matrix as a [d] vector.
Var take_row(Tape& tape, Var m, int64_t row);

// Gathers the given rows of an [n, d] matrix into a [rows.size(), d] matrix.
// Duplicate indices are allowed; their gradients accumulate.
Var gather_rows(Tape& tape, Var m, std::vector<int64_t> rows);

// sum_i weights[i] * scalars[i], each input a [1] tensor. Returns scalar.
Var weighted_sum(Tape& tape, std::span<const Var> scalars,
                 std::span<const double> weights);

// Elementwise sum of two same-shape tensors.
Var add(Tape& tape, Var a, Var b);

// c * x.
Var scale(Tape& tape, Var x, double c);

}  // namespace sspk

#endif  // SSPK_OPS_HPP_
