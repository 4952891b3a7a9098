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

#include "sspk/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "sspk/error.hpp"
#include "sspk/rng.hpp"

namespace sspk {

namespace {

const std::vector<int> kTdnn1Offsets = {-2, -1, 0, 1, 2};
const std::vector<int> kTdnn2Offsets = {-2, 0, 2};
const std::vector<int> kTdnn3Offsets = {-3, 0, 3};
const std::vector<int> kCtxOffsets = {-3, -2, -1, 0, 1, 2, 3};

Tensor one_hot(const std::vector<int32_t>& ids, int64_t classes) {
  Tensor out({static_cast<int64_t>(ids.size()), classes});
  float* p = out.data();
  for (size_t i = 0; i < ids.size(); ++i) {
    int32_t v = ids[i];
    if (v < 0 || v >= classes)
      throw DataError("phone label " + std::to_string(v) + " outside [0, " +
                      std::to_string(classes) + ")");
    p[static_cast<int64_t>(i) * classes + v] = 1.0f;
  }
  return out;
}

}  // namespace

Tensor& Params::add(const std::string& name, const std::vector<int64_t>& shape) {
  if (find(name)) throw ConfigError("duplicate parameter name: " + name);
  names.push_back(name);
  tensors.emplace_back(shape);
  return tensors.back();
}

int64_t Params::index_of(const std::string& name) const {
  for (size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int64_t>(i);
  return -1;
}

Tensor* Params::find(const std::string& name) {
  int64_t i = index_of(name);
  return i < 0 ? nullptr : &tensors[static_cast<size_t>(i)];
}

const Tensor* Params::find(const std::string& name) const {
  int64_t i = index_of(name);
  return i < 0 ? nullptr : &tensors[static_cast<size_t>(i)];
}

BatchNormState& BnStates::add(const std::string& name, int64_t dim) {
  names.push_back(name);
  states.emplace_back(dim);
  return states.back();
}

BatchNormState* BnStates::find(const std::string& name) {
  for (size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return &states[i];
  return nullptr;
}

Var ParamVars::var(const std::string& name) {
  int64_t i = params_->index_of(name);
  if (i < 0) throw NumericError("unknown parameter: " + name);
  Var& slot = vars_[static_cast<size_t>(i)];
  if (!slot.valid())
    slot = tape_->leaf(params_->tensors[static_cast<size_t>(i)], trainable_);
  return slot;
}

const Tensor* ParamVars::grad(size_t index) const {
  const Var v = vars_[index];
  if (!v.valid()) return nullptr;
  return tape_->grad_if(v);
}

Model::Model(const ModelConfig& config) : config_(config) {
  if (config.feat_dim < 1 || config.phone_classes < 1 ||
      config.tdnn_hidden < 1 || config.pool_hidden < 1 || config.embed_dim < 1)
    throw ConfigError("model: all dimensions must be >= 1");

  const int64_t f = config.feat_dim;
  const int64_t h = config.tdnn_hidden;
  const int64_t s = config.pool_hidden;
  const int64_t e = config.embed_dim;

  auto add_layer = [&](const std::string& name, int64_t in, int64_t out,
                       bool bn) {
    params_.add(name + "/w", {in, out});
    params_.add(name + "/b", {out});
    if (bn) {
      params_.add(name + "/bn/gamma", {out});
      params_.add(name + "/bn/beta", {out});
      bn_states_.add(name + "/bn", out);
    }
  };

  add_layer("enc/tdnn1", static_cast<int64_t>(kTdnn1Offsets.size()) * f, h, true);
  add_layer("enc/tdnn2", static_cast<int64_t>(kTdnn2Offsets.size()) * h, h, true);
  add_layer("enc/tdnn3", static_cast<int64_t>(kTdnn3Offsets.size()) * h, h, true);
  add_layer("enc/tdnn4", h, h, true);
  add_layer("enc/tdnn5", h, s, true);
  params_.add("enc/pool/bn/gamma", {2 * s});
  params_.add("enc/pool/bn/beta", {2 * s});
  bn_states_.add("enc/pool/bn", 2 * s);
  add_layer("enc/ff6", 2 * s, e, true);
  add_layer("enc/ff7", e, e, true);

  if (config.n_speakers > 0) add_layer("cls", e, config.n_speakers, false);

  const int64_t dh = config.decoder_hidden_dim();
  const int64_t dp = config.decoder_input_phone_dim();
  add_layer("dec/l1", dp + e, dh, true);
  add_layer("dec/l2", dh + e, dh, true);
  add_layer("dec/l3", dh + e, dh, true);
  add_layer("dec/l4", dh + e, dh, true);
  add_layer("dec/l5", dh + e, f, false);
}

void Model::init_params(uint64_t seed) {
  for (size_t i = 0; i < params_.count(); ++i) {
    const std::string& name = params_.names[i];
    Tensor& t = params_.tensors[i];
    Rng rng(derive_seed(seed, "init/" + name));
    if (name.ends_with("/w")) {
      double bound = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
      rng.fill_uniform({t.data(), static_cast<size_t>(t.size())},
                       static_cast<float>(-bound), static_cast<float>(bound));
    } else if (name.ends_with("gamma")) {
      t.fill(1.0f);
    } else {
      t.fill(0.0f);  // biases and beta
    }
  }
}

void Model::check_finite(Tape& tape, Var v, const std::string& where) const {
  if (!tape.val(v).all_finite())
    throw NumericError(where + ": non-finite activations");
}

Var Model::bn_block(Tape& tape, ParamVars& pv, Var x, const std::string& name,
                    Mode mode) {
  BatchNormState* state = bn_states_.find(name + "/bn");
  if (!state) throw NumericError("missing batchnorm state for layer " + name);
  return batchnorm(tape, x, pv.var(name + "/bn/gamma"),
                   pv.var(name + "/bn/beta"), *state, mode);
}

Var Model::tdnn_block(Tape& tape, ParamVars& pv, Var x,
                      const std::vector<int64_t>& lengths,
                      const std::string& name, const std::vector<int>& offsets,
                      Mode mode) {
  // Splicing reaches across time, so it must not mix frames of different
  // segments; everything after it is frame-wise and runs on the whole batch.
  Var spliced = x;
  if (!(offsets.size() == 1 && offsets[0] == 0)) {
    std::vector<Var> parts;
    parts.reserve(lengths.size());
    int64_t at = 0;
    for (int64_t t : lengths) {
      Var seg = lengths.size() == 1 ? x : slice_rows(tape, x, at, t);
      parts.push_back(splice(tape, seg, offsets));
      at += t;
    }
    spliced = parts.size() == 1 ? parts[0] : concat_rows(tape, parts);
  }
  Var pre = affine(tape, spliced, pv.var(name + "/w"), pv.var(name + "/b"));
  Var act = relu(tape, pre);
  Var out = bn_block(tape, pv, act, name, mode);
  check_finite(tape, out, name);
  return out;
}

Var Model::encode_segments_pooled(Tape& tape, ParamVars& pv,
                                  std::span<const Var> segments, Mode mode) {
  if (segments.empty()) throw DataError("encoder: no segments");
  std::vector<int64_t> lengths;
  lengths.reserve(segments.size());
  for (size_t i = 0; i < segments.size(); ++i) {
    const Tensor& fv = tape.val(segments[i]);
    if (fv.rank() != 2 || fv.cols() != config_.feat_dim)
      throw DataError("encoder input must be [frames, " +
                      std::to_string(config_.feat_dim) + "], got " +
                      fv.shape_string() + " for segment " + std::to_string(i));
    lengths.push_back(fv.rows());
  }

  Var h = segments.size() == 1 ? segments[0]
                               : concat_rows(tape, segments);
  h = tdnn_block(tape, pv, h, lengths, "enc/tdnn1", kTdnn1Offsets, mode);
  h = tdnn_block(tape, pv, h, lengths, "enc/tdnn2", kTdnn2Offsets, mode);
  h = tdnn_block(tape, pv, h, lengths, "enc/tdnn3", kTdnn3Offsets, mode);
  h = tdnn_block(tape, pv, h, lengths, "enc/tdnn4", {0}, mode);
  h = tdnn_block(tape, pv, h, lengths, "enc/tdnn5", {0}, mode);

  std::vector<Var> pooled;
  pooled.reserve(lengths.size());
  int64_t at = 0;
  for (int64_t t : lengths) {
    Var seg = lengths.size() == 1 ? h : slice_rows(tape, h, at, t);
    pooled.push_back(stats_pool(tape, seg));
    at += t;
  }
  Var rows = stack_rows(tape, pooled);
  check_finite(tape, rows, "enc/pool");
  return rows;
}

Model::Heads Model::encode_tail(Tape& tape, ParamVars& pv, Var pooled_rows,
                                Mode mode) {
  Var normed = bn_block(tape, pv, pooled_rows, "enc/pool", mode);

  Var emb = affine(tape, normed, pv.var("enc/ff6/w"), pv.var("enc/ff6/b"));
  check_finite(tape, emb, "enc/ff6");

  Var a6 = relu(tape, emb);
  Var n6 = bn_block(tape, pv, a6, "enc/ff6", mode);

  Var pre7 = affine(tape, n6, pv.var("enc/ff7/w"), pv.var("enc/ff7/b"));
  Var a7 = relu(tape, pre7);
  Var n7 = bn_block(tape, pv, a7, "enc/ff7", mode);
  check_finite(tape, n7, "enc/ff7");

  return Heads{emb, n7};
}

Var Model::classifier_logits(Tape& tape, ParamVars& pv, Var feats) {
  if (config_.n_speakers < 1)
    throw ConfigError("model has no classifier head (n_speakers == 0)");
  return affine(tape, feats, pv.var("cls/w"), pv.var("cls/b"));
}

Tensor Model::classifier_posterior(const Tensor& feats) {
  if (feats.rank() != 1 || feats.dim(0) != config_.embed_dim)
    throw DataError("classifier input must be [" +
                    std::to_string(config_.embed_dim) + "], got " +
                    feats.shape_string());
  Tape tape;
  ParamVars pv(tape, params_, false);
  std::vector<Var> one = {tape.constant(feats)};
  Var rows = stack_rows(tape, one);
  Var logits = classifier_logits(tape, pv, rows);
  const Tensor& lv = tape.val(logits);
  Tensor out({lv.cols()});
  const float* in = lv.data();
  double m = in[0];
  for (int64_t i = 1; i < lv.cols(); ++i) m = std::max<double>(m, in[i]);
  double z = 0.0;
  for (int64_t i = 0; i < lv.cols(); ++i)
    z += std::exp(static_cast<double>(in[i]) - m);
  for (int64_t i = 0; i < lv.cols(); ++i)
    out[i] = static_cast<float>(std::exp(static_cast<double>(in[i]) - m) / z);
  return out;
}

Var Model::decode_segment(Tape& tape, ParamVars& pv, Var embedding,
                          const std::vector<int32_t>& phones, Mode mode) {
  if (phones.empty()) throw DataError("decode_segment: empty phone sequence");
  const int64_t tau = static_cast<int64_t>(phones.size());

  Var phone_in = tape.constant(one_hot(phones, config_.phone_classes));
  if (config_.ctx) phone_in = splice(tape, phone_in, kCtxOffsets);
  Var emb_rows = broadcast_rows(tape, embedding, tau);

  Var h = phone_in;
  for (int layer = 1; layer <= 5; ++layer) {
    const std::string name = "dec/l" + std::to_string(layer);
    Var in = concat_cols(tape, h, emb_rows);
    Var pre = affine(tape, in, pv.var(name + "/w"), pv.var(name + "/b"));
    if (layer == 5) {
      check_finite(tape, pre, name);
      return pre;
    }
    Var act = relu(tape, pre);
    h = bn_block(tape, pv, act, name, mode);
    check_finite(tape, h, name);
  }
  throw NumericError("unreachable decoder exit");
}

Tensor Model::extract_embedding(const Tensor& normalized_frames) {
  Tape tape;
  ParamVars pv(tape, params_, false);
  std::vector<Var> one = {tape.constant(normalized_frames)};
  Var rows = encode_segments_pooled(tape, pv, one, Mode::kInfer);
  Heads heads = encode_tail(tape, pv, rows, Mode::kInfer);
  const Tensor& emb = tape.val(heads.embeddings);
  Tensor out({emb.cols()});
  std::copy_n(emb.data(), emb.cols(), out.data());
  return out;
}

bool Model::is_encoder_param(const std::string& name) {
  return name.rfind("enc/", 0) == 0;
}

}  // namespace sspk
