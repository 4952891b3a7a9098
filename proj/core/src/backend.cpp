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

#include "sspk/backend.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "sspk/error.hpp"
#include "sspk/io.hpp"

namespace sspk {
namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EVec = Eigen::VectorXd;
using ConstMap = Eigen::Map<const EMat>;

constexpr double kScatterRidge = 1e-4;
constexpr char kBackendMagic[4] = {'S', 'S', 'P', 'B'};
constexpr char kEmbedMagic[4] = {'S', 'E', 'M', 'B'};

struct ClassIndex {
  std::vector<int64_t> class_of_row;        // dense class id per row
  std::vector<std::vector<int64_t>> rows;   // rows per dense class
};

ClassIndex group_by_label(const Mat& rows, const std::vector<int64_t>& labels) {
  if (rows.rows <= 0 || rows.cols <= 0) {
    throw DataError("backend fit requires a nonempty embedding matrix");
  }
  if (static_cast<int64_t>(labels.size()) != rows.rows) {
    throw DataError("backend fit: label count does not match row count");
  }
  ClassIndex index;
  index.class_of_row.resize(labels.size());
  std::map<int64_t, int64_t> dense;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) {
      throw DataError("backend fit: row " + std::to_string(i) +
                      " has a negative speaker label");
    }
    auto [it, inserted] = dense.try_emplace(labels[i], static_cast<int64_t>(dense.size()));
    if (inserted) index.rows.emplace_back();
    index.class_of_row[i] = it->second;
    index.rows[it->second].push_back(static_cast<int64_t>(i));
  }
  if (index.rows.size() < 2) {
    throw DataError("backend fit requires at least 2 speakers, got " +
                    std::to_string(index.rows.size()));
  }
  for (std::size_t c = 0; c < index.rows.size(); ++c) {
    if (index.rows[c].size() < 2) {
      throw DataError("backend fit requires at least 2 embeddings per speaker");
    }
  }
  return index;
}

void check_finite(const EMat& m, const char* what) {
  if (!m.allFinite()) {
    throw NumericError(std::string(what) + " contains a non-finite value");
  }
}

// Lower-triangular Cholesky factor, or an error naming `what`.
Eigen::LLT<Eigen::MatrixXd> cholesky_or_throw(const EMat& m, const std::string& what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    throw NumericError(what + " is not positive definite");
  }
  return llt;
}

double logdet_from_llt(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

LdaProjection fit_lda(const Mat& rows, const std::vector<int64_t>& labels,
                      int64_t out_dim) {
  const ClassIndex index = group_by_label(rows, labels);
  const int64_t n = rows.rows;
  const int64_t d = rows.cols;
  if (out_dim < 1 || out_dim > d) {
    throw ConfigError("projection size must lie in [1, " + std::to_string(d) +
                      "], got " + std::to_string(out_dim));
  }

  ConstMap x(rows.data.data(), n, d);
  check_finite(x, "embedding matrix");
  const EVec mean = x.colwise().mean().transpose();

  const auto n_classes = static_cast<int64_t>(index.rows.size());
  EMat class_means(n_classes, d);
  EMat within = EMat::Zero(d, d);
  EMat between = EMat::Zero(d, d);
  for (int64_t c = 0; c < n_classes; ++c) {
    EVec mc = EVec::Zero(d);
    for (int64_t r : index.rows[c]) mc += x.row(r).transpose();
    mc /= static_cast<double>(index.rows[c].size());
    class_means.row(c) = mc.transpose();
    for (int64_t r : index.rows[c]) {
      const EVec dev = x.row(r).transpose() - mc;
      within.noalias() += dev * dev.transpose();
    }
    const EVec gap = mc - mean;
    between.noalias() += static_cast<double>(index.rows[c].size()) * gap * gap.transpose();
  }
  within /= static_cast<double>(n);
  between /= static_cast<double>(n);

  const double trace = within.trace();
  if (!(trace > 0.0)) {
    throw DataError("within-speaker scatter is zero; discriminant projection is undefined");
  }
  const double ridge = kScatterRidge * trace / static_cast<double>(d);
  within.diagonal().array() += ridge;

  auto llt = cholesky_or_throw(within, "regularized within-speaker scatter");
  // Whiten the between-class scatter: M = L^-1 B L^-T, symmetrized.
  EMat m = llt.matrixL().solve(between);
  m = llt.matrixL().solve(EMat(m.transpose()));
  m = (0.5 * (m + m.transpose())).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) {
    throw NumericError("eigendecomposition of the whitened between-speaker scatter failed");
  }

  LdaProjection lda;
  lda.mean.assign(mean.data(), mean.data() + d);
  lda.projection = Mat(d, out_dim);
  lda.between_eigs.resize(static_cast<std::size_t>(out_dim));
  Eigen::MatrixXd top(d, out_dim);
  for (int64_t k = 0; k < out_dim; ++k) {
    // Eigenvalues come back ascending; take them from the top.
    const int64_t src = d - 1 - k;
    top.col(k) = es.eigenvectors().col(src);
    lda.between_eigs[static_cast<std::size_t>(k)] = es.eigenvalues()(src);
  }
  const Eigen::MatrixXd proj = llt.matrixU().solve(top);
  Eigen::Map<EMat>(lda.projection.data.data(), d, out_dim) = proj;
  return lda;
}

std::vector<double> apply_lda(const LdaProjection& lda, std::span<const double> x) {
  const int64_t d = lda.in_dim();
  if (static_cast<int64_t>(x.size()) != d) {
    throw DataError("projection input has size " + std::to_string(x.size()) +
                    ", expected " + std::to_string(d));
  }
  const int64_t k = lda.out_dim();
  Eigen::Map<const EVec> xv(x.data(), d);
  Eigen::Map<const EVec> mv(lda.mean.data(), d);
  ConstMap p(lda.projection.data.data(), d, k);
  const EVec y = p.transpose() * (xv - mv);
  return std::vector<double>(y.data(), y.data() + k);
}

void length_norm(std::span<double> x) {
  double sq = 0.0;
  for (double v : x) sq += v * v;
  if (!(sq > 0.0) || !std::isfinite(sq)) {
    throw NumericError("length normalization of a zero or non-finite vector");
  }
  const double scale = std::sqrt(static_cast<double>(x.size()) / sq);
  for (double& v : x) v *= scale;
}

PldaModel fit_plda(const Mat& rows, const std::vector<int64_t>& labels,
                   int64_t iterations, PldaFitInfo* info) {
  const ClassIndex index = group_by_label(rows, labels);
  if (iterations < 1) throw ConfigError("PLDA needs at least one EM iteration");
  const int64_t n = rows.rows;
  const int64_t d = rows.cols;
  const auto n_classes = static_cast<int64_t>(index.rows.size());

  ConstMap x(rows.data.data(), n, d);
  check_finite(x, "embedding matrix");
  const EVec mean = x.colwise().mean().transpose();

  // Per-speaker sufficient statistics on centered data: count, mean, and the
  // total within-speaker scatter (unnormalized, shared across iterations).
  std::vector<double> counts(static_cast<std::size_t>(n_classes));
  EMat speaker_means(n_classes, d);
  EMat within_total = EMat::Zero(d, d);
  for (int64_t c = 0; c < n_classes; ++c) {
    EVec mc = EVec::Zero(d);
    for (int64_t r : index.rows[c]) mc += x.row(r).transpose() - mean;
    mc /= static_cast<double>(index.rows[c].size());
    speaker_means.row(c) = mc.transpose();
    counts[static_cast<std::size_t>(c)] = static_cast<double>(index.rows[c].size());
    for (int64_t r : index.rows[c]) {
      const EVec dev = x.row(r).transpose() - mean - mc;
      within_total.noalias() += dev * dev.transpose();
    }
  }

  EMat gamma_w = within_total / static_cast<double>(n);
  EMat gamma_b = EMat::Zero(d, d);
  for (int64_t c = 0; c < n_classes; ++c) {
    gamma_b.noalias() += speaker_means.row(c).transpose() * speaker_means.row(c);
  }
  gamma_b /= static_cast<double>(n_classes);
  // Keep the starting point positive definite even when the data has no
  // usable spread in some direction.
  const double ridge = kScatterRidge * (gamma_w.trace() + gamma_b.trace()) /
                       static_cast<double>(d);
  if (!(ridge > 0.0)) {
    throw DataError("PLDA training data has zero total scatter");
  }
  gamma_w.diagonal().array() += ridge;
  gamma_b.diagonal().array() += ridge;

  const double log2pi = std::log(2.0 * std::acos(-1.0));
  for (int64_t it = 0; it < iterations; ++it) {
    const std::string tag = "iteration " + std::to_string(it);
    if (!gamma_w.allFinite() || !gamma_b.allFinite()) {
      throw NumericError("PLDA covariance collapsed at " + tag);
    }
    Eigen::LLT<Eigen::MatrixXd> llt_w(gamma_w);
    Eigen::LLT<Eigen::MatrixXd> llt_b(gamma_b);
    if (llt_w.info() != Eigen::Success || llt_b.info() != Eigen::Success) {
      throw NumericError("PLDA covariance collapsed at " + tag);
    }
    const double logdet_w = logdet_from_llt(llt_w);
    const EMat w_inv = llt_w.solve(Eigen::MatrixXd::Identity(d, d));
    const EMat b_inv = llt_b.solve(Eigen::MatrixXd::Identity(d, d));

    // Total log-likelihood at the current parameters. The speaker-mean term
    // is a Gaussian in gamma_b + gamma_w / n_s; the residual within-speaker
    // term only needs the pooled scatter.
    double ll = -0.5 * (w_inv * within_total).trace();
    ll -= 0.5 * static_cast<double>(n - n_classes) * logdet_w;
    ll -= 0.5 * static_cast<double>(n) * static_cast<double>(d) * log2pi;
    for (int64_t c = 0; c < n_classes; ++c) {
      const double ns = counts[static_cast<std::size_t>(c)];
      const EMat cs = gamma_b + gamma_w / ns;
      auto llt_cs = cholesky_or_throw(cs, "PLDA speaker-mean covariance");
      const EVec ms = speaker_means.row(c).transpose();
      const EVec sol = llt_cs.solve(ms);
      ll -= 0.5 * (logdet_from_llt(llt_cs) + ms.dot(sol));
      ll -= 0.5 * static_cast<double>(d) * std::log(ns);
    }
    if (!std::isfinite(ll)) {
      throw NumericError("PLDA log-likelihood became non-finite at " + tag);
    }
    if (info != nullptr) info->loglik.push_back(ll);

    // E-step posteriors per speaker, then the closed-form M-step.
    EMat acc_b = EMat::Zero(d, d);
    EMat acc_w = EMat::Zero(d, d);
    for (int64_t c = 0; c < n_classes; ++c) {
      const double ns = counts[static_cast<std::size_t>(c)];
      const EMat prec = b_inv + ns * w_inv;
      auto llt_p = cholesky_or_throw(prec, "PLDA posterior precision");
      const EMat phi = llt_p.solve(Eigen::MatrixXd::Identity(d, d));
      const EVec ms = speaker_means.row(c).transpose();
      const EVec ws = phi * (ns * (w_inv * ms));
      acc_b.noalias() += phi + ws * ws.transpose();
      const EVec res = ms - ws;
      acc_w.noalias() += ns * phi + ns * res * res.transpose();
    }
    gamma_b = acc_b / static_cast<double>(n_classes);
    gamma_w = (within_total + acc_w) / static_cast<double>(n);
    gamma_b = (0.5 * (gamma_b + gamma_b.transpose())).eval();
    gamma_w = (0.5 * (gamma_w + gamma_w.transpose())).eval();
  }

  // Simultaneous diagonalization: v^T gamma_w v = I, v^T gamma_b v = psi.
  auto llt_w = cholesky_or_throw(gamma_w, "final PLDA within-speaker covariance");
  EMat m = llt_w.matrixL().solve(gamma_b);
  m = llt_w.matrixL().solve(EMat(m.transpose()));
  m = (0.5 * (m + m.transpose())).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) {
    throw NumericError("PLDA simultaneous diagonalization failed");
  }

  PldaModel model;
  model.mean.assign(mean.data(), mean.data() + d);
  model.v = Mat(d, d);
  model.psi.resize(static_cast<std::size_t>(d));
  Eigen::MatrixXd top(d, d);
  for (int64_t k = 0; k < d; ++k) {
    const int64_t src = d - 1 - k;
    top.col(k) = es.eigenvectors().col(src);
    model.psi[static_cast<std::size_t>(k)] = std::max(es.eigenvalues()(src), 0.0);
  }
  const Eigen::MatrixXd v = llt_w.matrixU().solve(top);
  Eigen::Map<EMat>(model.v.data.data(), d, d) = v;
  return model;
}

double plda_score(const PldaModel& model, std::span<const double> enrol,
                  std::span<const double> test) {
  const int64_t d = model.dim();
  if (static_cast<int64_t>(enrol.size()) != d ||
      static_cast<int64_t>(test.size()) != d) {
    throw DataError("PLDA scoring inputs must have size " + std::to_string(d));
  }
  ConstMap v(model.v.data.data(), d, d);
  Eigen::Map<const EVec> mv(model.mean.data(), d);
  Eigen::Map<const EVec> ev(enrol.data(), d);
  Eigen::Map<const EVec> tv(test.data(), d);
  const EVec u1 = v.transpose() * (ev - mv);
  const EVec u2 = v.transpose() * (tv - mv);

  // In the diagonalized space each dimension is an independent pair with
  // same-speaker covariance [[psi+1, psi], [psi, psi+1]] and
  // different-speaker covariance (psi+1) I.
  double llr = 0.0;
  for (int64_t i = 0; i < d; ++i) {
    const double psi = model.psi[static_cast<std::size_t>(i)];
    const double a = u1(i);
    const double b = u2(i);
    const double ss = a * a + b * b;
    const double same = -0.5 * std::log(2.0 * psi + 1.0) -
                        ((psi + 1.0) * ss - 2.0 * psi * a * b) / (2.0 * (2.0 * psi + 1.0));
    const double diff = -std::log(psi + 1.0) - ss / (2.0 * (psi + 1.0));
    llr += same - diff;
  }
  if (!std::isfinite(llr)) throw NumericError("PLDA score is non-finite");
  return llr;
}

BackendParams fit_backend(const Mat& rows, const std::vector<int64_t>& labels,
                          int64_t lda_dim, int64_t plda_iterations,
                          PldaFitInfo* info) {
  BackendParams backend;
  backend.lda = fit_lda(rows, labels, lda_dim);
  Mat projected(rows.rows, lda_dim);
  for (int64_t r = 0; r < rows.rows; ++r) {
    std::vector<double> y = apply_lda(
        backend.lda, {rows.row_ptr(r), static_cast<std::size_t>(rows.cols)});
    length_norm(y);
    std::copy(y.begin(), y.end(), projected.row_ptr(r));
  }
  backend.plda = fit_plda(projected, labels, plda_iterations, info);
  return backend;
}

std::vector<double> backend_transform(const BackendParams& backend,
                                      std::span<const float> embedding) {
  std::vector<double> x(embedding.begin(), embedding.end());
  std::vector<double> y = apply_lda(backend.lda, x);
  length_norm(y);
  return y;
}

double backend_score(const BackendParams& backend, std::span<const float> enrol,
                     std::span<const float> test) {
  const std::vector<double> e = backend_transform(backend, enrol);
  const std::vector<double> t = backend_transform(backend, test);
  return plda_score(backend.plda, e, t);
}

void write_backend(const std::string& path, const BackendParams& backend) {
  BinaryWriter w(path);
  w.write_bytes(kBackendMagic, 4);
  w.write_u32(1);
  const int64_t d = backend.lda.in_dim();
  const int64_t k = backend.lda.out_dim();
  w.write_i64(d);
  w.write_i64(k);
  w.write_f64_span(backend.lda.mean);
  w.write_f64_span(backend.lda.projection.data);
  w.write_f64_span(backend.lda.between_eigs);
  w.write_f64_span(backend.plda.mean);
  w.write_f64_span(backend.plda.v.data);
  w.write_f64_span(backend.plda.psi);
  w.close();
}

BackendParams read_backend(const std::string& path) {
  BinaryReader r(path);
  char magic[4];
  r.read_bytes(magic, 4);
  if (std::memcmp(magic, kBackendMagic, 4) != 0) {
    throw DataError(r.path() + " is not a backend parameter file");
  }
  const uint32_t version = r.read_u32();
  if (version != 1) {
    throw DataError(r.path() + ": unsupported backend version " + std::to_string(version));
  }
  const int64_t d = r.read_i64();
  const int64_t k = r.read_i64();
  if (d < 1 || k < 1 || k > d || d > (1 << 20)) {
    throw DataError(r.where() + ": invalid backend dimensions");
  }
  BackendParams backend;
  backend.lda.mean.resize(static_cast<std::size_t>(d));
  backend.lda.projection = Mat(d, k);
  backend.lda.between_eigs.resize(static_cast<std::size_t>(k));
  backend.plda.mean.resize(static_cast<std::size_t>(k));
  backend.plda.v = Mat(k, k);
  backend.plda.psi.resize(static_cast<std::size_t>(k));
  r.read_f64_span(backend.lda.mean);
  r.read_f64_span(backend.lda.projection.data);
  r.read_f64_span(backend.lda.between_eigs);
  r.read_f64_span(backend.plda.mean);
  r.read_f64_span(backend.plda.v.data);
  r.read_f64_span(backend.plda.psi);
  if (!r.at_eof()) {
    throw DataError(r.where() + ": trailing bytes after backend parameters");
  }
  return backend;
}

int64_t EmbeddingTable::find(const std::string& id) const {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == id) return static_cast<int64_t>(i);
  }
  return -1;
}

void EmbeddingTable::append(const std::string& id, bool is_labelled,
                            int64_t speaker, std::span<const float> vec) {
  if (dim == 0) dim = static_cast<int64_t>(vec.size());
  if (static_cast<int64_t>(vec.size()) != dim) {
    throw DataError("embedding for " + id + " has size " +
                    std::to_string(vec.size()) + ", expected " + std::to_string(dim));
  }
  ids.push_back(id);
  labelled.push_back(is_labelled ? 1 : 0);
  speakers.push_back(is_labelled ? speaker : -1);
  vectors.insert(vectors.end(), vec.begin(), vec.end());
}

void write_embedding_table(const std::string& path, const EmbeddingTable& t) {
  BinaryWriter w(path);
  w.write_bytes(kEmbedMagic, 4);
  w.write_u32(1);
  w.write_i64(t.dim);
  w.write_u64(static_cast<uint64_t>(t.count()));
  for (int64_t i = 0; i < t.count(); ++i) {
    w.write_string(t.ids[static_cast<std::size_t>(i)]);
    w.write_u8(t.labelled[static_cast<std::size_t>(i)]);
    w.write_i64(t.speakers[static_cast<std::size_t>(i)]);
    w.write_f32_span(t.row(i));
  }
  w.close();
}

EmbeddingTable read_embedding_table(const std::string& path) {
  BinaryReader r(path);
  char magic[4];
  r.read_bytes(magic, 4);
  if (std::memcmp(magic, kEmbedMagic, 4) != 0) {
    throw DataError(r.path() + " is not an embedding table");
  }
  const uint32_t version = r.read_u32();
  if (version != 1) {
    throw DataError(r.path() + ": unsupported embedding table version " +
                    std::to_string(version));
  }
  EmbeddingTable t;
  t.dim = r.read_i64();
  if (t.dim < 1 || t.dim > (1 << 20)) {
    throw DataError(r.where() + ": invalid embedding size " + std::to_string(t.dim));
  }
  const uint64_t count = r.read_u64();
  std::vector<float> buf(static_cast<std::size_t>(t.dim));
  for (uint64_t i = 0; i < count; ++i) {
    const std::string id = r.read_string();
    const uint8_t lab = r.read_u8();
    if (lab > 1) {
      throw DataError(r.where() + ": label flag must be 0 or 1");
    }
    const int64_t speaker = r.read_i64();
    r.read_f32_span(buf);
    t.append(id, lab != 0, speaker, buf);
  }
  if (!r.at_eof()) {
    throw DataError(r.where() + ": trailing bytes after embedding table");
  }
  return t;
}

std::vector<Trial> read_trial_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trial list " + path);
  std::vector<Trial> trials;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    Trial t;
    t.line = line_no;
    std::string key, extra;
    if (!(ss >> t.enrol >> t.test >> key) || (ss >> extra)) {
      throw DataError(path + " line " + std::to_string(line_no) +
                      ": expected \"<enrol> <test> target|nontarget\"");
    }
    if (key == "target") {
      t.target = true;
    } else if (key == "nontarget") {
      t.target = false;
    } else {
      throw DataError(path + " line " + std::to_string(line_no) +
                      ": key must be target or nontarget, got \"" + key + "\"");
    }
    trials.push_back(std::move(t));
  }
  if (trials.empty()) throw DataError("trial list " + path + " is empty");
  return trials;
}

void write_score_file(const std::string& path,
                      const std::vector<ScoredTrial>& scores) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open score file " + path + " for writing");
  for (const ScoredTrial& s : scores) {
    out << s.enrol << ' ' << s.test << ' ' << fmt_double(s.score) << '\n';
  }
  if (!out.good()) throw DataError("failed writing score file " + path);
}

std::vector<ScoredTrial> read_score_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open score file " + path);
  std::vector<ScoredTrial> scores;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    ScoredTrial s;
    std::string extra;
    if (!(ss >> s.enrol >> s.test >> s.score) || (ss >> extra)) {
      throw DataError(path + " line " + std::to_string(line_no) +
                      ": expected \"<enrol> <test> <score>\"");
    }
    scores.push_back(std::move(s));
  }
  if (scores.empty()) throw DataError("score file " + path + " is empty");
  return scores;
}

}  // namespace sspk
