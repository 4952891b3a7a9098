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
// Double-precision reference for the full train-mode joint loss: an
// independent forward pass and hand-derived backward pass over the same
// parameters the production graph uses. Finite differences cannot certify
// gradients near batchnorm's small-variance cliffs, so tests compare the
// production gradients against this reference analytically instead.

#ifndef SSPK_TESTS_REFERENCE_MODEL_HPP_
#define SSPK_TESTS_REFERENCE_MODEL_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sspk/model.hpp"
#include "sspk/ops.hpp"
#include "sspk/tensor.hpp"

namespace sspk::testing {

struct DMat {
  int64_t rows = 0;
  int64_t cols = 0;
  std::vector<double> a;

  DMat() = default;
  DMat(int64_t r, int64_t c)
      : rows(r), cols(c), a(static_cast<size_t>(r * c), 0.0) {}
  double& at(int64_t r, int64_t c) { return a[static_cast<size_t>(r * cols + c)]; }
  double at(int64_t r, int64_t c) const {
    return a[static_cast<size_t>(r * cols + c)];
  }
};

struct RefGrads {
  double loss = 0.0;
  std::vector<std::vector<double>> by_param;  // parallel to Params order
};

class ReferenceRun {
 public:
  ReferenceRun(const Model& model, double mse_weight)
      : model_(model), cfg_(model.config()), mse_weight_(mse_weight) {
    grads_.by_param.resize(model.params().count());
    for (size_t i = 0; i < model.params().count(); ++i)
      grads_.by_param[i].assign(
          static_cast<size_t>(model.params().tensors[i].size()), 0.0);
  }

  // Train-mode joint loss over a batch: cross entropy over all rows plus
  // mse_weight times each segment's frame reconstruction error.
  RefGrads run(const std::vector<Tensor>& frames,
               const std::vector<std::vector<int32_t>>& phones,
               const std::vector<int64_t>& labels,
               const std::vector<Tensor>& targets) {
    const size_t b = frames.size();
    std::vector<int64_t> lengths(b);
    for (size_t s = 0; s < b; ++s) lengths[s] = frames[s].rows();

    // ---- encoder forward -------------------------------------------------
    DMat h = concat_frames(frames);
    EncLayer l1 = enc_layer_fwd(h, lengths, "enc/tdnn1", {-2, -1, 0, 1, 2});
    EncLayer l2 = enc_layer_fwd(l1.out, lengths, "enc/tdnn2", {-2, 0, 2});
    EncLayer l3 = enc_layer_fwd(l2.out, lengths, "enc/tdnn3", {-3, 0, 3});
    EncLayer l4 = enc_layer_fwd(l3.out, lengths, "enc/tdnn4", {});
    EncLayer l5 = enc_layer_fwd(l4.out, lengths, "enc/tdnn5", {});

    std::vector<PoolCache> pools(b);
    DMat pooled(static_cast<int64_t>(b), 2 * cfg_.pool_hidden);
    int64_t at = 0;
    for (size_t s = 0; s < b; ++s) {
      DMat seg = take_rows(l5.out, at, lengths[s]);
      std::vector<double> p = stats_pool_fwd(seg, &pools[s]);
      for (int64_t c = 0; c < pooled.cols; ++c)
        pooled.at(static_cast<int64_t>(s), c) = p[static_cast<size_t>(c)];
      at += lengths[s];
    }

    // ---- segment-level tail ----------------------------------------------
    BnCache cpool;
    DMat rn = bn_fwd(pooled, "enc/pool", &cpool);
    DMat emb = affine_fwd(rn, "enc/ff6");
    DMat a6 = relu_fwd(emb);
    BnCache c6;
    DMat n6 = bn_fwd(a6, "enc/ff6", &c6);
    DMat p7 = affine_fwd(n6, "enc/ff7");
    DMat a7 = relu_fwd(p7);
    BnCache c7;
    DMat n7 = bn_fwd(a7, "enc/ff7", &c7);
    DMat logits = affine_fwd(n7, "cls");

    DMat probs;
    grads_.loss = softmax_ce_fwd(logits, labels, &probs);

    // ---- decoder forward (per segment) -------------------------------------
    std::vector<DecCache> dec(b);
    for (size_t s = 0; s < b; ++s) {
      std::vector<double> e(static_cast<size_t>(cfg_.embed_dim));
      for (int64_t c = 0; c < cfg_.embed_dim; ++c)
        e[static_cast<size_t>(c)] = emb.at(static_cast<int64_t>(s), c);
      grads_.loss +=
          mse_weight_ * decode_fwd(phones[s], e, targets[s], &dec[s]);
    }

    // ---- backward ----------------------------------------------------------
    DMat d_emb(emb.rows, emb.cols);

    // Decoder paths first; they feed the embedding rows.
    for (size_t s = 0; s < b; ++s) {
      std::vector<double> de(static_cast<size_t>(cfg_.embed_dim), 0.0);
      decode_bwd(dec[s], targets[s], mse_weight_, &de);
      for (int64_t c = 0; c < cfg_.embed_dim; ++c)
        d_emb.at(static_cast<int64_t>(s), c) += de[static_cast<size_t>(c)];
    }

    // Classifier path.
    DMat d_logits = softmax_ce_bwd(probs, labels);
    DMat d_n7 = affine_bwd(n7, "cls", d_logits);
    DMat d_a7 = bn_bwd(c7, "enc/ff7", d_n7);
    DMat d_p7 = relu_bwd(p7, d_a7);
    DMat d_n6 = affine_bwd(n6, "enc/ff7", d_p7);
    DMat d_a6 = bn_bwd(c6, "enc/ff6", d_n6);
    DMat d_emb_tail = relu_bwd(emb, d_a6);
    for (size_t i = 0; i < d_emb.a.size(); ++i) d_emb.a[i] += d_emb_tail.a[i];

    DMat d_rn = affine_bwd(rn, "enc/ff6", d_emb);
    DMat d_pooled = bn_bwd(cpool, "enc/pool", d_rn);

    DMat d_h5(l5.out.rows, l5.out.cols);
    at = 0;
    for (size_t s = 0; s < b; ++s) {
      std::vector<double> dp(static_cast<size_t>(2 * cfg_.pool_hidden));
      for (int64_t c = 0; c < d_pooled.cols; ++c)
        dp[static_cast<size_t>(c)] = d_pooled.at(static_cast<int64_t>(s), c);
      stats_pool_bwd(pools[s], dp, &d_h5, at);
      at += lengths[s];
    }

    DMat d_h4 = enc_layer_bwd(l5, lengths, "enc/tdnn5", {}, d_h5);
    DMat d_h3 = enc_layer_bwd(l4, lengths, "enc/tdnn4", {}, d_h4);
    DMat d_h2 = enc_layer_bwd(l3, lengths, "enc/tdnn3", {-3, 0, 3}, d_h3);
    DMat d_h1 = enc_layer_bwd(l2, lengths, "enc/tdnn2", {-2, 0, 2}, d_h2);
    enc_layer_bwd(l1, lengths, "enc/tdnn1", {-2, -1, 0, 1, 2}, d_h1);

    return grads_;
  }

 private:
  struct BnCache {
    DMat x;  // layer input
    std::vector<double> mu, inv;
  };
  struct PoolCache {
    DMat x;
    std::vector<double> mu, sd;
  };
  struct EncLayer {
    DMat in;       // pre-splice input
    DMat spliced;  // affine input
    DMat pre;      // pre-activation
    BnCache bn;    // batchnorm input cache (post-relu)
    DMat out;
  };
  struct DecLayer {
    DMat input;  // [hidden-or-phones, embedding] concatenation
    DMat pre;
    BnCache bn;
    DMat out;
  };
  struct DecCache {
    std::vector<DecLayer> layers;  // l1..l4
    DMat l5_input;
    DMat pred;
  };

  // ---- parameter plumbing --------------------------------------------------
  const Tensor& param(const std::string& name) const {
    const Tensor* t = model_.params().find(name);
    if (t == nullptr) throw std::logic_error("reference: no parameter " + name);
    return *t;
  }
  std::vector<double>& grad(const std::string& name) {
    const int64_t i = model_.params().index_of(name);
    return grads_.by_param[static_cast<size_t>(i)];
  }

  // ---- primitive forwards and backwards -------------------------------------
  static DMat concat_frames(const std::vector<Tensor>& frames) {
    int64_t n = 0;
    for (const Tensor& f : frames) n += f.rows();
    DMat out(n, frames[0].cols());
    int64_t at = 0;
    for (const Tensor& f : frames) {
      for (int64_t r = 0; r < f.rows(); ++r)
        for (int64_t c = 0; c < f.cols(); ++c)
          out.at(at + r, c) = static_cast<double>(f.at(r, c));
      at += f.rows();
    }
    return out;
  }

  static DMat take_rows(const DMat& m, int64_t begin, int64_t count) {
    DMat out(count, m.cols);
    for (int64_t r = 0; r < count; ++r)
      for (int64_t c = 0; c < m.cols; ++c) out.at(r, c) = m.at(begin + r, c);
    return out;
  }

  static DMat splice_fwd(const DMat& x, const std::vector<int>& offsets) {
    const int64_t k = static_cast<int64_t>(offsets.size());
    DMat out(x.rows, x.cols * k);
    for (int64_t i = 0; i < x.rows; ++i)
      for (int64_t j = 0; j < k; ++j) {
        int64_t src = i + offsets[static_cast<size_t>(j)];
        src = src < 0 ? 0 : (src >= x.rows ? x.rows - 1 : src);
        for (int64_t c = 0; c < x.cols; ++c)
          out.at(i, j * x.cols + c) = x.at(src, c);
      }
    return out;
  }

  static void splice_bwd(const DMat& dy, const std::vector<int>& offsets,
                         DMat* dx) {
    const int64_t k = static_cast<int64_t>(offsets.size());
    const int64_t d = dx->cols;
    for (int64_t i = 0; i < dx->rows; ++i)
      for (int64_t j = 0; j < k; ++j) {
        int64_t src = i + offsets[static_cast<size_t>(j)];
        src = src < 0 ? 0 : (src >= dx->rows ? dx->rows - 1 : src);
        for (int64_t c = 0; c < d; ++c) dx->at(src, c) += dy.at(i, j * d + c);
      }
  }

  DMat affine_fwd(const DMat& x, const std::string& layer) const {
    const Tensor& w = param(layer + "/w");
    const Tensor& bias = param(layer + "/b");
    DMat out(x.rows, w.cols());
    for (int64_t r = 0; r < x.rows; ++r)
      for (int64_t c = 0; c < w.cols(); ++c) {
        double acc = static_cast<double>(bias[c]);
        for (int64_t k = 0; k < x.cols; ++k)
          acc += x.at(r, k) * static_cast<double>(w.at(k, c));
        out.at(r, c) = acc;
      }
    return out;
  }

  // Accumulates the weight gradients and returns the input gradient.
  DMat affine_bwd(const DMat& x, const std::string& layer, const DMat& dy) {
    const Tensor& w = param(layer + "/w");
    std::vector<double>& dw = grad(layer + "/w");
    std::vector<double>& db = grad(layer + "/b");
    for (int64_t r = 0; r < x.rows; ++r)
      for (int64_t c = 0; c < dy.cols; ++c) {
        const double g = dy.at(r, c);
        db[static_cast<size_t>(c)] += g;
        for (int64_t k = 0; k < x.cols; ++k)
          dw[static_cast<size_t>(k * dy.cols + c)] += x.at(r, k) * g;
      }
    DMat dx(x.rows, x.cols);
    for (int64_t r = 0; r < x.rows; ++r)
      for (int64_t k = 0; k < x.cols; ++k) {
        double acc = 0.0;
        for (int64_t c = 0; c < dy.cols; ++c)
          acc += dy.at(r, c) * static_cast<double>(w.at(k, c));
        dx.at(r, k) = acc;
      }
    return dx;
  }

  static DMat relu_fwd(const DMat& x) {
    DMat out(x.rows, x.cols);
    for (size_t i = 0; i < x.a.size(); ++i) out.a[i] = x.a[i] > 0.0 ? x.a[i] : 0.0;
    return out;
  }

  static DMat relu_bwd(const DMat& pre, const DMat& dy) {
    DMat dx(pre.rows, pre.cols);
    for (size_t i = 0; i < pre.a.size(); ++i)
      dx.a[i] = pre.a[i] > 0.0 ? dy.a[i] : 0.0;
    return dx;
  }

  DMat bn_fwd(const DMat& x, const std::string& layer, BnCache* cache) const {
    const Tensor& gamma = param(layer + "/bn/gamma");
    const Tensor& beta = param(layer + "/bn/beta");
    const int64_t n = x.rows;
    const int64_t d = x.cols;
    cache->x = x;
    cache->mu.assign(static_cast<size_t>(d), 0.0);
    cache->inv.assign(static_cast<size_t>(d), 0.0);
    for (int64_t c = 0; c < d; ++c) {
      double mu = 0.0;
      for (int64_t r = 0; r < n; ++r) mu += x.at(r, c);
      mu /= static_cast<double>(n);
      double var = 0.0;
      for (int64_t r = 0; r < n; ++r) {
        const double diff = x.at(r, c) - mu;
        var += diff * diff;
      }
      var /= static_cast<double>(n);
      cache->mu[static_cast<size_t>(c)] = mu;
      cache->inv[static_cast<size_t>(c)] = 1.0 / std::sqrt(var + kBatchNormEps);
    }
    DMat out(n, d);
    for (int64_t r = 0; r < n; ++r)
      for (int64_t c = 0; c < d; ++c)
        out.at(r, c) = static_cast<double>(gamma[c]) *
                           (x.at(r, c) - cache->mu[static_cast<size_t>(c)]) *
                           cache->inv[static_cast<size_t>(c)] +
                       static_cast<double>(beta[c]);
    return out;
  }

  // Derived through the dvar/dmu route: with s = sqrt(var + eps),
  //   dvar = sum_i dxhat_i (x_i - mu) * (-1/2) s^-3
  //   dmu  = sum_i dxhat_i * (-1/s)
  //   dx_i = dxhat_i / s + dvar * 2 (x_i - mu) / n + dmu / n.
  DMat bn_bwd(const BnCache& cache, const std::string& layer, const DMat& dy) {
    const Tensor& gamma = param(layer + "/bn/gamma");
    std::vector<double>& dgamma = grad(layer + "/bn/gamma");
    std::vector<double>& dbeta = grad(layer + "/bn/beta");
    const int64_t n = cache.x.rows;
    const int64_t d = cache.x.cols;
    DMat dx(n, d);
    for (int64_t c = 0; c < d; ++c) {
      const double mu = cache.mu[static_cast<size_t>(c)];
      const double inv = cache.inv[static_cast<size_t>(c)];
      const double g = static_cast<double>(gamma[c]);
      double dvar = 0.0, dmu = 0.0;
      for (int64_t r = 0; r < n; ++r) {
        const double dxhat = dy.at(r, c) * g;
        const double centered = cache.x.at(r, c) - mu;
        dvar += dxhat * centered * (-0.5) * inv * inv * inv;
        dmu += dxhat * (-inv);
        dgamma[static_cast<size_t>(c)] += dy.at(r, c) * centered * inv;
        dbeta[static_cast<size_t>(c)] += dy.at(r, c);
      }
      for (int64_t r = 0; r < n; ++r) {
        const double dxhat = dy.at(r, c) * g;
        const double centered = cache.x.at(r, c) - mu;
        dx.at(r, c) = dxhat * inv +
                      dvar * 2.0 * centered / static_cast<double>(n) +
                      dmu / static_cast<double>(n);
      }
    }
    return dx;
  }

  static std::vector<double> stats_pool_fwd(const DMat& x, PoolCache* cache) {
    const int64_t n = x.rows;
    const int64_t d = x.cols;
    cache->x = x;
    cache->mu.assign(static_cast<size_t>(d), 0.0);
    cache->sd.assign(static_cast<size_t>(d), 0.0);
    std::vector<double> out(static_cast<size_t>(2 * d));
    for (int64_t c = 0; c < d; ++c) {
      double mu = 0.0;
      for (int64_t r = 0; r < n; ++r) mu += x.at(r, c);
      mu /= static_cast<double>(n);
      double var = 0.0;
      for (int64_t r = 0; r < n; ++r) {
        const double diff = x.at(r, c) - mu;
        var += diff * diff;
      }
      const double sd = std::sqrt(var / static_cast<double>(n) + kStatsPoolEps);
      cache->mu[static_cast<size_t>(c)] = mu;
      cache->sd[static_cast<size_t>(c)] = sd;
      out[static_cast<size_t>(c)] = mu;
      out[static_cast<size_t>(d + c)] = sd;
    }
    return out;
  }

  static void stats_pool_bwd(const PoolCache& cache,
                             const std::vector<double>& dp, DMat* dx,
                             int64_t row_offset) {
    const int64_t n = cache.x.rows;
    const int64_t d = cache.x.cols;
    for (int64_t c = 0; c < d; ++c) {
      const double dmu = dp[static_cast<size_t>(c)];
      const double dsd = dp[static_cast<size_t>(d + c)];
      const double sd = cache.sd[static_cast<size_t>(c)];
      // d sd / d x_i = (x_i - mu) / (n * sd)
      for (int64_t r = 0; r < n; ++r) {
        const double centered = cache.x.at(r, c) - cache.mu[static_cast<size_t>(c)];
        dx->at(row_offset + r, c) +=
            dmu / static_cast<double>(n) +
            dsd * centered / (static_cast<double>(n) * sd);
      }
    }
  }

  double softmax_ce_fwd(const DMat& logits, const std::vector<int64_t>& labels,
                        DMat* probs) const {
    const int64_t n = logits.rows;
    const int64_t k = logits.cols;
    *probs = DMat(n, k);
    double total = 0.0;
    for (int64_t r = 0; r < n; ++r) {
      double m = logits.at(r, 0);
      for (int64_t c = 1; c < k; ++c) m = std::max(m, logits.at(r, c));
      double z = 0.0;
      for (int64_t c = 0; c < k; ++c) z += std::exp(logits.at(r, c) - m);
      const double logz = std::log(z);
      for (int64_t c = 0; c < k; ++c)
        probs->at(r, c) = std::exp(logits.at(r, c) - m - logz);
      total += logz + m - logits.at(r, labels[static_cast<size_t>(r)]);
    }
    return total / static_cast<double>(n);
  }

  static DMat softmax_ce_bwd(const DMat& probs,
                             const std::vector<int64_t>& labels) {
    DMat dz(probs.rows, probs.cols);
    for (int64_t r = 0; r < probs.rows; ++r)
      for (int64_t c = 0; c < probs.cols; ++c)
        dz.at(r, c) =
            (probs.at(r, c) -
             (c == labels[static_cast<size_t>(r)] ? 1.0 : 0.0)) /
            static_cast<double>(probs.rows);
    return dz;
  }

  DMat decode_input(const DMat& h, const std::vector<double>& emb) const {
    DMat out(h.rows, h.cols + cfg_.embed_dim);
    for (int64_t r = 0; r < h.rows; ++r) {
      for (int64_t c = 0; c < h.cols; ++c) out.at(r, c) = h.at(r, c);
      for (int64_t c = 0; c < cfg_.embed_dim; ++c)
        out.at(r, h.cols + c) = emb[static_cast<size_t>(c)];
    }
    return out;
  }

  double decode_fwd(const std::vector<int32_t>& phones,
                    const std::vector<double>& emb, const Tensor& target,
                    DecCache* cache) {
    const int64_t t = static_cast<int64_t>(phones.size());
    DMat oh(t, cfg_.phone_classes);
    for (int64_t i = 0; i < t; ++i)
      oh.at(i, phones[static_cast<size_t>(i)]) = 1.0;
    DMat cond = cfg_.ctx ? splice_fwd(oh, {-3, -2, -1, 0, 1, 2, 3}) : oh;

    cache->layers.resize(4);
    DMat h = cond;
    for (int layer = 1; layer <= 4; ++layer) {
      DecLayer& dl = cache->layers[static_cast<size_t>(layer - 1)];
      dl.input = decode_input(h, emb);
      dl.pre = affine_fwd(dl.input, "dec/l" + std::to_string(layer));
      DMat act = relu_fwd(dl.pre);
      dl.out = bn_fwd(act, "dec/l" + std::to_string(layer), &dl.bn);
      h = dl.out;
    }
    cache->l5_input = decode_input(h, emb);
    cache->pred = affine_fwd(cache->l5_input, "dec/l5");

    double acc = 0.0;
    for (int64_t r = 0; r < t; ++r)
      for (int64_t c = 0; c < cfg_.feat_dim; ++c) {
        const double diff =
            cache->pred.at(r, c) - static_cast<double>(target.at(r, c));
        acc += diff * diff;
      }
    return acc / static_cast<double>(t);
  }

  void decode_bwd(const DecCache& cache, const Tensor& target, double weight,
                  std::vector<double>* d_emb) {
    const int64_t t = cache.pred.rows;
    DMat d_pred(t, cfg_.feat_dim);
    for (int64_t r = 0; r < t; ++r)
      for (int64_t c = 0; c < cfg_.feat_dim; ++c)
        d_pred.at(r, c) =
            weight * 2.0 *
            (cache.pred.at(r, c) - static_cast<double>(target.at(r, c))) /
            static_cast<double>(t);

    DMat d_in = affine_bwd(cache.l5_input, "dec/l5", d_pred);
    DMat d_h = split_emb(d_in, d_emb);
    for (int layer = 4; layer >= 1; --layer) {
      const DecLayer& dl = cache.layers[static_cast<size_t>(layer - 1)];
      DMat d_act = bn_bwd(dl.bn, "dec/l" + std::to_string(layer), d_h);
      DMat d_pre = relu_bwd(dl.pre, d_act);
      DMat d_layer_in =
          affine_bwd(dl.input, "dec/l" + std::to_string(layer), d_pre);
      d_h = split_emb(d_layer_in, d_emb);
    }
    // The remaining d_h is the one-hot conditioning gradient; it has no
    // parameters upstream.
  }

  // Splits [h, emb] gradient columns; embedding columns sum over rows
  // (the embedding was broadcast to every row).
  DMat split_emb(const DMat& d_in, std::vector<double>* d_emb) const {
    const int64_t hcols = d_in.cols - cfg_.embed_dim;
    DMat d_h(d_in.rows, hcols);
    for (int64_t r = 0; r < d_in.rows; ++r) {
      for (int64_t c = 0; c < hcols; ++c) d_h.at(r, c) = d_in.at(r, c);
      for (int64_t c = 0; c < cfg_.embed_dim; ++c)
        (*d_emb)[static_cast<size_t>(c)] += d_in.at(r, hcols + c);
    }
    return d_h;
  }

  EncLayer enc_layer_fwd(const DMat& x, const std::vector<int64_t>& lengths,
                         const std::string& layer,
                         const std::vector<int>& offsets) {
    EncLayer out;
    out.in = x;
    if (offsets.empty()) {
      out.spliced = x;
    } else {
      out.spliced = DMat(x.rows, x.cols * static_cast<int64_t>(offsets.size()));
      int64_t at = 0;
      for (int64_t t : lengths) {
        DMat seg = splice_fwd(take_rows(x, at, t), offsets);
        for (int64_t r = 0; r < t; ++r)
          for (int64_t c = 0; c < seg.cols; ++c)
            out.spliced.at(at + r, c) = seg.at(r, c);
        at += t;
      }
    }
    out.pre = affine_fwd(out.spliced, layer);
    DMat act = relu_fwd(out.pre);
    out.out = bn_fwd(act, layer, &out.bn);
    return out;
  }

  DMat enc_layer_bwd(const EncLayer& fwd, const std::vector<int64_t>& lengths,
                     const std::string& layer, const std::vector<int>& offsets,
                     const DMat& d_out) {
    DMat d_act = bn_bwd(fwd.bn, layer, d_out);
    DMat d_pre = relu_bwd(fwd.pre, d_act);
    DMat d_spliced = affine_bwd(fwd.spliced, layer, d_pre);
    if (offsets.empty()) return d_spliced;
    DMat d_x(fwd.in.rows, fwd.in.cols);
    int64_t at = 0;
    for (int64_t t : lengths) {
      DMat d_seg = take_rows(d_spliced, at, t);
      DMat d_seg_x(t, fwd.in.cols);
      splice_bwd(d_seg, offsets, &d_seg_x);
      for (int64_t r = 0; r < t; ++r)
        for (int64_t c = 0; c < fwd.in.cols; ++c)
          d_x.at(at + r, c) += d_seg_x.at(r, c);
      at += t;
    }
    return d_x;
  }

  const Model& model_;
  ModelConfig cfg_;
  double mse_weight_;
  RefGrads grads_;
};

}  // namespace sspk::testing

#endif  // SSPK_TESTS_REFERENCE_MODEL_HPP_
