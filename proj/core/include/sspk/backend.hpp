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
//
// Scoring backend: LDA projection, length normalization, and a
// two-covariance PLDA model fitted with EM, plus the text formats for trial
// lists and score files and the binary embedding table.

#ifndef SSPK_BACKEND_HPP_
#define SSPK_BACKEND_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace sspk {

// Row-major matrix of doubles for backend math. Kept deliberately dumb;
// heavy lifting happens on Eigen maps inside the implementation.
struct Mat {
  int64_t rows = 0;
  int64_t cols = 0;
  std::vector<double> data;

  Mat() = default;
  Mat(int64_t r, int64_t c) : rows(r), cols(c), data(static_cast<std::size_t>(r * c), 0.0) {}
  double* row_ptr(int64_t r) { return data.data() + r * cols; }
  const double* row_ptr(int64_t r) const { return data.data() + r * cols; }
};

// Linear discriminant projection. `projection` has shape in_dim x out_dim;
// applying it maps x to projection^T (x - mean). Columns are ordered by
// decreasing between-class eigenvalue and whiten the regularized
// within-class scatter. `between_eigs` keeps the eigenvalues so callers can
// spot a rank-deficient between-class scatter (near-zero trailing values
// when out_dim exceeds the class count minus one).
struct LdaProjection {
  std::vector<double> mean;
  Mat projection;
  std::vector<double> between_eigs;

  int64_t in_dim() const { return projection.rows; }
  int64_t out_dim() const { return projection.cols; }
};

// Fits LDA on labelled vectors. `rows` is n x d, `labels` holds one
// nonnegative class id per row. Requires at least two classes with at least
// two rows each. The within-class scatter is ridge-regularized with
// 1e-4 * trace / d before whitening; a zero within-class scatter is
// rejected.
LdaProjection fit_lda(const Mat& rows, const std::vector<int64_t>& labels,
                      int64_t out_dim);

std::vector<double> apply_lda(const LdaProjection& lda,
                              std::span<const double> x);

// Scales x to have norm sqrt(dim). A zero vector is rejected.
void length_norm(std::span<double> x);

// Two-covariance PLDA in the projected space. Scoring diagonalizes both
// covariances simultaneously: u = v^T (x - mean) has identity within-class
// covariance and diagonal between-class covariance `psi`.
struct PldaModel {
  std::vector<double> mean;
  Mat v;
  std::vector<double> psi;

  int64_t dim() const { return v.rows; }
};

// Per-iteration total log-likelihood of the training vectors, one entry per
// EM iteration, evaluated at the parameters entering that iteration.
struct PldaFitInfo {
  std::vector<double> loglik;
};

// Fits the two-covariance model by EM. Same preconditions as fit_lda. The
// likelihood sequence is non-decreasing; covariance collapse aborts with the
// iteration index in the message.
PldaModel fit_plda(const Mat& rows, const std::vector<int64_t>& labels,
                   int64_t iterations = 10, PldaFitInfo* info = nullptr);

// Log-likelihood ratio of "same speaker" versus "different speakers" for two
// vectors in the space the model was fitted in. Symmetric in its arguments.
double plda_score(const PldaModel& model, std::span<const double> enrol,
                  std::span<const double> test);

// Full backend: embeddings are mean-centered by the LDA mean, projected,
// length-normalized, then scored with PLDA.
struct BackendParams {
  LdaProjection lda;
  PldaModel plda;
};

BackendParams fit_backend(const Mat& rows, const std::vector<int64_t>& labels,
                          int64_t lda_dim, int64_t plda_iterations = 10,
                          PldaFitInfo* info = nullptr);

std::vector<double> backend_transform(const BackendParams& backend,
                                      std::span<const float> embedding);

double backend_score(const BackendParams& backend,
                     std::span<const float> enrol,
                     std::span<const float> test);

void write_backend(const std::string& path, const BackendParams& backend);
BackendParams read_backend(const std::string& path);

// Embedding table: one vector per utterance with an optional speaker label.
struct EmbeddingTable {
  int64_t dim = 0;
  std::vector<std::string> ids;
  std::vector<uint8_t> labelled;
  std::vector<int64_t> speakers;
  std::vector<float> vectors;

  int64_t count() const { return static_cast<int64_t>(ids.size()); }
  std::span<const float> row(int64_t i) const {
    return {vectors.data() + i * dim, static_cast<std::size_t>(dim)};
  }
  // Index of id, or -1.
  int64_t find(const std::string& id) const;
  void append(const std::string& id, bool is_labelled, int64_t speaker,
              std::span<const float> vec);
};

void write_embedding_table(const std::string& path, const EmbeddingTable& t);
EmbeddingTable read_embedding_table(const std::string& path);

// One verification trial. `target` is meaningful only in keyed lists;
// `line` is the 1-based source line, kept so later stages can report
// problems against the file the operator actually wrote.
struct Trial {
  std::string enrol;
  std::string test;
  bool target = false;
  int64_t line = 0;
};

// Text format: "<enrol-id> <test-id> target|nontarget", one per line.
std::vector<Trial> read_trial_list(const std::string& path);

struct ScoredTrial {
  std::string enrol;
  std::string test;
  double score = 0.0;
};

// Text format: "<enrol-id> <test-id> <score>", one per line.
void write_score_file(const std::string& path,
                      const std::vector<ScoredTrial>& scores);
std::vector<ScoredTrial> read_score_file(const std::string& path);

}  // namespace sspk

#endif  // SSPK_BACKEND_HPP_
