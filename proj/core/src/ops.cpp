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

#include "sspk/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "sspk/error.hpp"

namespace sspk {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using MapConstMat = Eigen::Map<const RowMat>;
using MapConstVec = Eigen::Map<const Eigen::VectorXf>;

MapConstMat cmat(const Tensor& t) {
  return MapConstMat(t.data(), t.rows(), t.cols());
}
MapMat mmat(Tensor& t) { return MapMat(t.data(), t.rows(), t.cols()); }

void require_rank2(const Tensor& t, const char* op, const char* arg) {
  if (t.rank() != 2)
    throw DataError(std::string(op) + ": " + arg + " must be rank-2, got shape " +
                    t.shape_string());
}

void require_vector(const Tensor& t, const char* op, const char* arg) {
  if (t.rank() != 1)
    throw DataError(std::string(op) + ": " + arg + " must be rank-1, got shape " +
                    t.shape_string());
}

}  // namespace

Var affine(Tape& tape, Var x, Var w, Var b) {
  const Tensor& xv = tape.val(x);
  const Tensor& wv = tape.val(w);
  const Tensor& bv = tape.val(b);
  require_rank2(xv, "affine", "x");
  require_rank2(wv, "affine", "w");
  require_vector(bv, "affine", "b");
  if (bv.dim(0) != wv.cols())
    throw DataError("affine: bias length " + std::to_string(bv.dim(0)) +
                    " != weight columns " + std::to_string(wv.cols()));
  if (xv.cols() != wv.rows())
    throw DataError("affine: x columns " + std::to_string(xv.cols()) +
                    " != weight rows " + std::to_string(wv.rows()));

  Tensor out({xv.rows(), wv.cols()});
  mmat(out).noalias() = cmat(xv) * cmat(wv);
  mmat(out).rowwise() += MapConstVec(bv.data(), bv.size()).transpose();

  bool ng = tape.needs_grad(x) || tape.needs_grad(w) || tape.needs_grad(b);
  return tape.emit(std::move(out), ng, [x, w, b](Tape& t, Var self) {
    const Tensor& g = t.grad(self);
    if (t.needs_grad(x))
      mmat(t.grad(x)).noalias() += cmat(g) * cmat(t.val(w)).transpose();
    if (t.needs_grad(w))
      mmat(t.grad(w)).noalias() += cmat(t.val(x)).transpose() * cmat(g);
    if (t.needs_grad(b))
      mmat(t.grad(b)).noalias() += cmat(g).colwise().sum();
  });
}

Var relu(Tape& tape, Var x) {
  const Tensor& xv = tape.val(x);
  Tensor out(xv.shape());
  const float* in = xv.data();
  float* o = out.data();
  for (int64_t i = 0; i < xv.size(); ++i) o[i] = in[i] > 0.0f ? in[i] : 0.0f;

  return tape.emit(std::move(out), tape.needs_grad(x), [x](Tape& t, Var self) {
    const Tensor& g = t.grad(self);
    if (!t.needs_grad(x)) return;
    const float* in = t.val(x).data();
    const float* gp = g.data();
    float* gx = t.grad(x).data();
    for (int64_t i = 0; i < g.size(); ++i)
      if (in[i] > 0.0f) gx[i] += gp[i];
  });
}

Var batchnorm(Tape& tape, Var x, Var gamma, Var beta, BatchNormState& state,
              Mode mode) {
  const Tensor& xv = tape.val(x);
  const Tensor& gv = tape.val(gamma);
  const Tensor& bv = tape.val(beta);
  require_rank2(xv, "batchnorm", "x");
  require_vector(gv, "batchnorm", "gamma");
  require_vector(bv, "batchnorm", "beta");
  const int64_t n = xv.rows();
  const int64_t d = xv.cols();
  if (gv.dim(0) != d || bv.dim(0) != d || state.dim() != d)
    throw DataError("batchnorm: feature dim mismatch, x has " + std::to_string(d) +
                    " columns, gamma " + std::to_string(gv.dim(0)) + ", beta " +
                    std::to_string(bv.dim(0)) + ", state " +
                    std::to_string(state.dim()));

  const size_t dd = static_cast<size_t>(d);
  std::vector<double> mu(dd, 0.0);
  std::vector<double> inv(dd, 0.0);

  if (mode == Mode::kTrain) {
    if (n < 2)
      throw DataError("batchnorm: train mode needs at least 2 rows, got " +
                      std::to_string(n));
    std::vector<double> var(dd, 0.0);
    const float* in = xv.data();
    for (int64_t r = 0; r < n; ++r)
      for (int64_t c = 0; c < d; ++c) mu[static_cast<size_t>(c)] += in[r * d + c];
    for (size_t c = 0; c < dd; ++c) mu[c] /= static_cast<double>(n);
    for (int64_t r = 0; r < n; ++r)
      for (int64_t c = 0; c < d; ++c) {
        double diff = in[r * d + c] - mu[static_cast<size_t>(c)];
        var[static_cast<size_t>(c)] += diff * diff;
      }
    for (size_t c = 0; c < dd; ++c) {
      var[c] /= static_cast<double>(n);
      inv[c] = 1.0 / std::sqrt(var[c] + kBatchNormEps);
    }
    const double m = state.momentum;
    for (size_t c = 0; c < dd; ++c) {
      state.running_mean[c] = (1.0 - m) * state.running_mean[c] + m * mu[c];
      state.running_var[c] = (1.0 - m) * state.running_var[c] + m * var[c];
    }
  } else {
    if (n < 1) throw DataError("batchnorm: empty input");
    for (size_t c = 0; c < dd; ++c) {
      mu[c] = state.running_mean[c];
      inv[c] = 1.0 / std::sqrt(state.running_var[c] + kBatchNormEps);
    }
  }

  Tensor out({n, d});
  {
    const float* in = xv.data();
    const float* gm = gv.data();
    const float* bt = bv.data();
    float* o = out.data();
    for (int64_t r = 0; r < n; ++r)
      for (int64_t c = 0; c < d; ++c) {
        size_t sc = static_cast<size_t>(c);
        double xhat = (in[r * d + c] - mu[sc]) * inv[sc];
        o[r * d + c] = static_cast<float>(gm[c] * xhat + bt[c]);
      }
  }

  bool ng = tape.needs_grad(x) || tape.needs_grad(gamma) || tape.needs_grad(beta);
  bool train = mode == Mode::kTrain;
  return tape.emit(
      std::move(out), ng,
      [x, gamma, beta, mu = std::move(mu), inv = std::move(inv), n, d,
       train](Tape& t, Var self) {
        const Tensor& g = t.grad(self);
        const float* gp = g.data();
        const float* in = t.val(x).data();
        const float* gm = t.val(gamma).data();
        const size_t dd = static_cast<size_t>(d);

        std::vector<double> sum_g(dd, 0.0);
        std::vector<double> sum_gx(dd, 0.0);
        for (int64_t r = 0; r < n; ++r)
          for (int64_t c = 0; c < d; ++c) {
            size_t sc = static_cast<size_t>(c);
            double xhat = (in[r * d + c] - mu[sc]) * inv[sc];
            sum_g[sc] += gp[r * d + c];
            sum_gx[sc] += gp[r * d + c] * xhat;
          }

        if (t.needs_grad(gamma)) {
          float* gg = t.grad(gamma).data();
          for (size_t c = 0; c < dd; ++c) gg[c] += static_cast<float>(sum_gx[c]);
        }
        if (t.needs_grad(beta)) {
          float* gb = t.grad(beta).data();
          for (size_t c = 0; c < dd; ++c) gb[c] += static_cast<float>(sum_g[c]);
        }
        if (t.needs_grad(x)) {
          float* gx = t.grad(x).data();
          if (train) {
            // Batch statistics depend on x, so the mean and variance paths
            // contribute correction terms.
            const double dn = static_cast<double>(n);
            for (int64_t r = 0; r < n; ++r)
              for (int64_t c = 0; c < d; ++c) {
                size_t sc = static_cast<size_t>(c);
                double xhat = (in[r * d + c] - mu[sc]) * inv[sc];
                double v = gm[c] * inv[sc] *
                           (gp[r * d + c] - (sum_g[sc] + xhat * sum_gx[sc]) / dn);
                gx[r * d + c] += static_cast<float>(v);
              }
          } else {
            for (int64_t r = 0; r < n; ++r)
              for (int64_t c = 0; c < d; ++c) {
                size_t sc = static_cast<size_t>(c);
                gx[r * d + c] += static_cast<float>(gm[c] * inv[sc] * gp[r * d + c]);
              }
          }
        }
      });
}

Var splice(Tape& tape, Var x, const std::vector<int>& offsets) {
  const Tensor& xv = tape.val(x);
  require_rank2(xv, "splice", "x");
  if (offsets.empty()) throw DataError("splice: empty offset list");
  const int64_t tlen = xv.rows();
  const int64_t d = xv.cols();
  const int64_t k = static_cast<int64_t>(offsets.size());

  Tensor out({tlen, d * k});
  const float* in = xv.data();
  float* o = out.data();
  for (int64_t i = 0; i < tlen; ++i)
    for (int64_t j = 0; j < k; ++j) {
      int64_t src = std::clamp<int64_t>(i + offsets[static_cast<size_t>(j)], 0,
                                        tlen - 1);
      std::copy_n(in + src * d, d, o + i * (d * k) + j * d);
    }

  return tape.emit(std::move(out), tape.needs_grad(x),
                   [x, offsets, tlen, d, k](Tape& t, Var self) {
                     if (!t.needs_grad(x)) return;
                     const float* gp = t.grad(self).data();
                     float* gx = t.grad(x).data();
                     for (int64_t i = 0; i < tlen; ++i)
                       for (int64_t j = 0; j < k; ++j) {
                         int64_t src = std::clamp<int64_t>(
                             i + offsets[static_cast<size_t>(j)], 0, tlen - 1);
                         const float* gsrc = gp + i * (d * k) + j * d;
                         float* dst = gx + src * d;
                         for (int64_t c = 0; c < d; ++c) dst[c] += gsrc[c];
                       }
                   });
}

Var stats_pool(Tape& tape, Var x) {
  const Tensor& xv = tape.val(x);
  require_rank2(xv, "stats_pool", "x");
  const int64_t tlen = xv.rows();
  const int64_t d = xv.cols();
  if (tlen < 1) throw DataError("stats_pool: empty input");

  const size_t dd = static_cast<size_t>(d);
  std::vector<double> mu(dd, 0.0);
  std::vector<double> sd(dd, 0.0);
  const float* in = xv.data();
  for (int64_t r = 0; r < tlen; ++r)
    for (int64_t c = 0; c < d; ++c) mu[static_cast<size_t>(c)] += in[r * d + c];
  for (size_t c = 0; c < dd; ++c) mu[c] /= static_cast<double>(tlen);
  for (int64_t r = 0; r < tlen; ++r)
    for (int64_t c = 0; c < d; ++c) {
      double diff = in[r * d + c] - mu[static_cast<size_t>(c)];
      sd[static_cast<size_t>(c)] += diff * diff;
    }
  for (size_t c = 0; c < dd; ++c)
    sd[c] = std::sqrt(sd[c] / static_cast<double>(tlen) + kStatsPoolEps);

  Tensor out({2 * d});
  for (int64_t c = 0; c < d; ++c) {
    out[c] = static_cast<float>(mu[static_cast<size_t>(c)]);
    out[d + c] = static_cast<float>(sd[static_cast<size_t>(c)]);
  }

  return tape.emit(std::move(out), tape.needs_grad(x),
                   [x, mu = std::move(mu), sd = std::move(sd), tlen, d](Tape& t,
                                                                        Var self) {
                     if (!t.needs_grad(x)) return;
                     const float* gp = t.grad(self).data();
                     const float* in = t.val(x).data();
                     float* gx = t.grad(x).data();
                     const double dt = static_cast<double>(tlen);
                     for (int64_t r = 0; r < tlen; ++r)
                       for (int64_t c = 0; c < d; ++c) {
                         size_t sc = static_cast<size_t>(c);
                         double gmean = gp[c] / dt;
                         double gstd = gp[d + c] * (in[r * d + c] - mu[sc]) /
                                       (dt * sd[sc]);
                         gx[r * d + c] += static_cast<float>(gmean + gstd);
                       }
                   });
}

Var softmax_ce(Tape& tape, Var logits, const std::vector<int64_t>& labels) {
  const Tensor& lv = tape.val(logits);
  require_rank2(lv, "softmax_ce", "logits");
  const int64_t n = lv.rows();
  const int64_t k = lv.cols();
  if (static_cast<int64_t>(labels.size()) != n)
    throw DataError("softmax_ce: " + std::to_string(labels.size()) +
                    " labels for " + std::to_string(n) + " rows");
  for (int64_t r = 0; r < n; ++r)
    if (labels[static_cast<size_t>(r)] < 0 || labels[static_cast<size_t>(r)] >= k)
      throw DataError("softmax_ce: label " +
                      std::to_string(labels[static_cast<size_t>(r)]) +
                      " out of range [0, " + std::to_string(k) + ") at row " +
                      std::to_string(r));

  Tensor probs({n, k});
  double total = 0.0;
  const float* in = lv.data();
  float* p = probs.data();
  for (int64_t r = 0; r < n; ++r) {
    const float* row = in + r * k;
    float m = row[0];
    for (int64_t c = 1; c < k; ++c) m = std::max(m, row[c]);
    double z = 0.0;
    for (int64_t c = 0; c < k; ++c) z += std::exp(static_cast<double>(row[c] - m));
    double logz = std::log(z);
    for (int64_t c = 0; c < k; ++c)
      p[r * k + c] = static_cast<float>(
          std::exp(static_cast<double>(row[c] - m) - logz));
    total += logz + static_cast<double>(m) -
             static_cast<double>(row[labels[static_cast<size_t>(r)]]);
  }
  Tensor out = Tensor::scalar(static_cast<float>(total / static_cast<double>(n)));

  return tape.emit(std::move(out), tape.needs_grad(logits),
                   [logits, labels, probs = std::move(probs), n, k](Tape& t,
                                                                    Var self) {
                     if (!t.needs_grad(logits)) return;
                     const float g0 = t.grad(self)[0];
                     const float* p = probs.data();
                     float* gl = t.grad(logits).data();
                     const float invn = 1.0f / static_cast<float>(n);
                     for (int64_t r = 0; r < n; ++r)
                       for (int64_t c = 0; c < k; ++c) {
                         float delta =
                             c == labels[static_cast<size_t>(r)] ? 1.0f : 0.0f;
                         gl[r * k + c] += g0 * (p[r * k + c] - delta) * invn;
                       }
                   });
}

Var mse_frames(Tape& tape, Var predicted, const Tensor& target) {
  const Tensor& pv = tape.val(predicted);
  require_rank2(pv, "mse_frames", "predicted");
  if (!pv.same_shape(target))
    throw DataError("mse_frames: predicted shape " + pv.shape_string() +
                    " != target shape " + target.shape_string());
  const int64_t tlen = pv.rows();
  const int64_t d = pv.cols();

  double acc = 0.0;
  const float* pp = pv.data();
  const float* yy = target.data();
  for (int64_t i = 0; i < tlen * d; ++i) {
    double diff = static_cast<double>(pp[i]) - static_cast<double>(yy[i]);
    acc += diff * diff;
  }
  Tensor out = Tensor::scalar(static_cast<float>(acc / static_cast<double>(tlen)));

  // The closure keeps its own copy of the target: callers may free theirs.
  return tape.emit(std::move(out), tape.needs_grad(predicted),
                   [predicted, target, tlen, d](Tape& t, Var self) {
                     if (!t.needs_grad(predicted)) return;
                     const float g0 = t.grad(self)[0];
                     const float* pp = t.val(predicted).data();
                     const float* yy = target.data();
                     float* gp = t.grad(predicted).data();
                     const float s = 2.0f * g0 / static_cast<float>(tlen);
                     for (int64_t i = 0; i < tlen * d; ++i)
                       gp[i] += s * (pp[i] - yy[i]);
                   });
}

Var broadcast_rows(Tape& tape, Var row, int64_t n) {
  const Tensor& rv = tape.val(row);
  require_vector(rv, "broadcast_rows", "row");
  if (n < 1) throw DataError("broadcast_rows: row count must be positive");
  const int64_t d = rv.dim(0);

  Tensor out({n, d});
  for (int64_t r = 0; r < n; ++r) std::copy_n(rv.data(), d, out.data() + r * d);

  return tape.emit(std::move(out), tape.needs_grad(row),
                   [row, n, d](Tape& t, Var self) {
                     if (!t.needs_grad(row)) return;
                     const float* gp = t.grad(self).data();
                     float* gr = t.grad(row).data();
                     for (int64_t r = 0; r < n; ++r)
                       for (int64_t c = 0; c < d; ++c) gr[c] += gp[r * d + c];
                   });
}

Var concat_cols(Tape& tape, Var a, Var b) {
  const Tensor& av = tape.val(a);
  const Tensor& bv = tape.val(b);
  require_rank2(av, "concat_cols", "a");
  require_rank2(bv, "concat_cols", "b");
  if (av.rows() != bv.rows())
    throw DataError("concat_cols: row mismatch, " + std::to_string(av.rows()) +
                    " vs " + std::to_string(bv.rows()));
  const int64_t n = av.rows();
  const int64_t da = av.cols();
  const int64_t db = bv.cols();

  Tensor out({n, da + db});
  for (int64_t r = 0; r < n; ++r) {
    std::copy_n(av.data() + r * da, da, out.data() + r * (da + db));
    std::copy_n(bv.data() + r * db, db, out.data() + r * (da + db) + da);
  }

  bool ng = tape.needs_grad(a) || tape.needs_grad(b);
  return tape.emit(std::move(out), ng, [a, b, n, da, db](Tape& t, Var self) {
    const float* gp = t.grad(self).data();
    if (t.needs_grad(a)) {
      float* ga = t.grad(a).data();
      for (int64_t r = 0; r < n; ++r)
        for (int64_t c = 0; c < da; ++c) ga[r * da + c] += gp[r * (da + db) + c];
    }
    if (t.needs_grad(b)) {
      float* gb = t.grad(b).data();
      for (int64_t r = 0; r < n; ++r)
        for (int64_t c = 0; c < db; ++c)
          gb[r * db + c] += gp[r * (da + db) + da + c];
    }
  });
}

Var concat_rows(Tape& tape, std::span<const Var> parts) {
  if (parts.empty()) throw DataError("concat_rows: no parts");
  const Tensor& first = tape.val(parts[0]);
  require_rank2(first, "concat_rows", "parts[0]");
  const int64_t d = first.cols();

  int64_t n = 0;
  bool ng = false;
  for (size_t i = 0; i < parts.size(); ++i) {
    const Tensor& pv = tape.val(parts[i]);
    if (pv.rank() != 2 || pv.cols() != d)
      throw DataError("concat_rows: part " + std::to_string(i) + " has shape " +
                      pv.shape_string() + ", expected [*x" + std::to_string(d) +
                      "]");
    n += pv.rows();
    ng = ng || tape.needs_grad(parts[i]);
  }

  Tensor out({n, d});
  int64_t at = 0;
  for (size_t i = 0; i < parts.size(); ++i) {
    const Tensor& pv = tape.val(parts[i]);
    std::copy_n(pv.data(), pv.size(), out.data() + at * d);
    at += pv.rows();
  }

  std::vector<Var> owned(parts.begin(), parts.end());
  return tape.emit(std::move(out), ng,
                   [owned = std::move(owned), d](Tape& t, Var self) {
                     const float* gp = t.grad(self).data();
                     int64_t at = 0;
                     for (const Var part : owned) {
                       const int64_t rows = t.val(part).rows();
                       if (t.needs_grad(part)) {
                         float* gq = t.grad(part).data();
                         for (int64_t i = 0; i < rows * d; ++i)
                           gq[i] += gp[at * d + i];
                       }
                       at += rows;
                     }
                   });
}

Var slice_rows(Tape& tape, Var m, int64_t begin, int64_t count) {
  const Tensor& mv = tape.val(m);
  require_rank2(mv, "slice_rows", "m");
  if (begin < 0 || count < 1 || begin + count > mv.rows())
    throw DataError("slice_rows: range [" + std::to_string(begin) + ", " +
                    std::to_string(begin + count) + ") outside [0, " +
                    std::to_string(mv.rows()) + ")");
  const int64_t d = mv.cols();

  Tensor out({count, d});
  std::copy_n(mv.data() + begin * d, count * d, out.data());

  return tape.emit(std::move(out), tape.needs_grad(m),
                   [m, begin, count, d](Tape& t, Var self) {
                     if (!t.needs_grad(m)) return;
                     const float* gp = t.grad(self).data();
                     float* gm = t.grad(m).data();
                     for (int64_t i = 0; i < count * d; ++i)
                       gm[begin * d + i] += gp[i];
                   });
}

Var stack_rows(Tape& tape, std::span<const Var> rows) {
  if (rows.empty()) throw DataError("stack_rows: no rows");
  const Tensor& first = tape.val(rows[0]);
  require_vector(first, "stack_rows", "rows[0]");
  const int64_t d = first.dim(0);
  const int64_t n = static_cast<int64_t>(rows.size());

  Tensor out({n, d});
  bool ng = false;
  for (int64_t r = 0; r < n; ++r) {
    const Tensor& rv = tape.val(rows[static_cast<size_t>(r)]);
    if (rv.rank() != 1 || rv.dim(0) != d)
      throw DataError("stack_rows: row " + std::to_string(r) + " has shape " +
                      rv.shape_string() + ", expected [" + std::to_string(d) + "]");
    std::copy_n(rv.data(), d, out.data() + r * d);
    ng = ng || tape.needs_grad(rows[static_cast<size_t>(r)]);
  }

  std::vector<Var> owned(rows.begin(), rows.end());
  return tape.emit(std::move(out), ng,
                   [owned = std::move(owned), d](Tape& t, Var self) {
                     const float* gp = t.grad(self).data();
                     for (size_t r = 0; r < owned.size(); ++r) {
                       if (!t.needs_grad(owned[r])) continue;
                       float* gr = t.grad(owned[r]).data();
                       for (int64_t c = 0; c < d; ++c)
                         gr[c] += gp[static_cast<int64_t>(r) * d + c];
                     }
                   });
}

Var take_row(Tape& tape, Var m, int64_t row) {
  const Tensor& mv = tape.val(m);
  require_rank2(mv, "take_row", "m");
  if (row < 0 || row >= mv.rows())
    throw DataError("take_row: row " + std::to_string(row) + " out of range [0, " +
                    std::to_string(mv.rows()) + ")");
  const int64_t d = mv.cols();

  Tensor out({d});
  std::copy_n(mv.data() + row * d, d, out.data());

  return tape.emit(std::move(out), tape.needs_grad(m),
                   [m, row, d](Tape& t, Var self) {
                     if (!t.needs_grad(m)) return;
                     const float* gp = t.grad(self).data();
                     float* gm = t.grad(m).data();
                     for (int64_t c = 0; c < d; ++c) gm[row * d + c] += gp[c];
                   });
}

Var gather_rows(Tape& tape, Var m, std::vector<int64_t> rows) {
  const Tensor& mv = tape.val(m);
  require_rank2(mv, "gather_rows", "m");
  if (rows.empty()) throw DataError("gather_rows: empty row list");
  for (int64_t r : rows)
    if (r < 0 || r >= mv.rows())
      throw DataError("gather_rows: row " + std::to_string(r) +
                      " out of range [0, " + std::to_string(mv.rows()) + ")");
  const int64_t d = mv.cols();
  const int64_t k = static_cast<int64_t>(rows.size());

  Tensor out({k, d});
  for (int64_t i = 0; i < k; ++i)
    std::copy_n(mv.data() + rows[static_cast<size_t>(i)] * d, d,
                out.data() + i * d);

  return tape.emit(std::move(out), tape.needs_grad(m),
                   [m, rows = std::move(rows), d](Tape& t, Var self) {
                     if (!t.needs_grad(m)) return;
                     const float* gp = t.grad(self).data();
                     float* gm = t.grad(m).data();
                     for (size_t i = 0; i < rows.size(); ++i) {
                       float* dst = gm + rows[i] * d;
                       const float* src = gp + static_cast<int64_t>(i) * d;
                       for (int64_t c = 0; c < d; ++c) dst[c] += src[c];
                     }
                   });
}

Var weighted_sum(Tape& tape, std::span<const Var> scalars,
                 std::span<const double> weights) {
  if (scalars.empty() || scalars.size() != weights.size())
    throw DataError("weighted_sum: need matching non-empty scalars and weights");
  double acc = 0.0;
  bool ng = false;
  for (size_t i = 0; i < scalars.size(); ++i) {
    const Tensor& sv = tape.val(scalars[i]);
    if (sv.size() != 1)
      throw DataError("weighted_sum: input " + std::to_string(i) +
                      " is not scalar, shape " + sv.shape_string());
    acc += weights[i] * static_cast<double>(sv[0]);
    ng = ng || tape.needs_grad(scalars[i]);
  }

  std::vector<Var> owned(scalars.begin(), scalars.end());
  std::vector<double> w(weights.begin(), weights.end());
  return tape.emit(Tensor::scalar(static_cast<float>(acc)), ng,
                   [owned = std::move(owned), w = std::move(w)](Tape& t, Var self) {
                     const float g0 = t.grad(self)[0];
                     for (size_t i = 0; i < owned.size(); ++i)
                       if (t.needs_grad(owned[i]))
                         t.grad(owned[i])[0] += g0 * static_cast<float>(w[i]);
                   });
}

Var add(Tape& tape, Var a, Var b) {
  const Tensor& av = tape.val(a);
  const Tensor& bv = tape.val(b);
  if (!av.same_shape(bv))
    throw DataError("add: shape mismatch " + av.shape_string() + " vs " +
                    bv.shape_string());
  Tensor out(av.shape());
  const float* pa = av.data();
  const float* pb = bv.data();
  float* o = out.data();
  for (int64_t i = 0; i < av.size(); ++i) o[i] = pa[i] + pb[i];

  bool ng = tape.needs_grad(a) || tape.needs_grad(b);
  return tape.emit(std::move(out), ng, [a, b](Tape& t, Var self) {
    const Tensor& g = t.grad(self);
    const float* gp = g.data();
    if (t.needs_grad(a)) {
      float* ga = t.grad(a).data();
      for (int64_t i = 0; i < g.size(); ++i) ga[i] += gp[i];
    }
    if (t.needs_grad(b)) {
      float* gb = t.grad(b).data();
      for (int64_t i = 0; i < g.size(); ++i) gb[i] += gp[i];
    }
  });
}

Var scale(Tape& tape, Var x, double c) {
  const Tensor& xv = tape.val(x);
  Tensor out(xv.shape());
  const float* in = xv.data();
  float* o = out.data();
  const float cf = static_cast<float>(c);
  for (int64_t i = 0; i < xv.size(); ++i) o[i] = cf * in[i];

  return tape.emit(std::move(out), tape.needs_grad(x), [x, cf](Tape& t, Var self) {
    if (!t.needs_grad(x)) return;
    const Tensor& g = t.grad(self);
    const float* gp = g.data();
    float* gx = t.grad(x).data();
    for (int64_t i = 0; i < g.size(); ++i) gx[i] += cf * gp[i];
  });
}

}  // namespace sspk
