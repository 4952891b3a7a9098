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

#include "sspk/checkpoint.hpp"

#include <cstring>
#include <string>
#include <utility>
#include <vector>

#include "sspk/error.hpp"
#include "sspk/io.hpp"

namespace sspk {

namespace {

constexpr char kMagic[4] = {'S', 'S', 'P', 'C'};
constexpr uint32_t kVersion = 1;
constexpr uint32_t kMaxRank = 8;

void write_tensor(BinaryWriter& w, const Tensor& t) {
  w.write_u32(static_cast<uint32_t>(t.rank()));
  for (int64_t i = 0; i < t.rank(); ++i) w.write_i64(t.dim(i));
  w.write_f32_span({t.data(), static_cast<size_t>(t.size())});
}

Tensor read_tensor(BinaryReader& r) {
  uint32_t rank = r.read_u32();
  if (rank > kMaxRank)
    throw DataError("implausible tensor rank " + std::to_string(rank) + " in " +
                    r.where());
  std::vector<int64_t> shape(rank);
  for (uint32_t i = 0; i < rank; ++i) shape[i] = r.read_i64();
  Tensor t(shape);
  r.read_f32_span({t.data(), static_cast<size_t>(t.size())});
  return t;
}

void write_f64_vector(BinaryWriter& w, const std::vector<double>& v) {
  w.write_u64(v.size());
  w.write_f64_span(v);
}

std::vector<double> read_f64_vector(BinaryReader& r) {
  uint64_t n = r.read_u64();
  if (n > (1ull << 32))
    throw DataError("implausible vector length in " + r.where());
  std::vector<double> v(n);
  r.read_f64_span(v);
  return v;
}

void write_model_config(BinaryWriter& w, const ModelConfig& c) {
  w.write_i64(c.feat_dim);
  w.write_i64(c.phone_classes);
  w.write_i64(c.n_speakers);
  w.write_i64(c.tdnn_hidden);
  w.write_i64(c.pool_hidden);
  w.write_i64(c.embed_dim);
  w.write_i64(c.decoder_hidden);
  w.write_u8(c.ctx ? 1 : 0);
}

ModelConfig read_model_config(BinaryReader& r) {
  ModelConfig c;
  c.feat_dim = r.read_i64();
  c.phone_classes = r.read_i64();
  c.n_speakers = r.read_i64();
  c.tdnn_hidden = r.read_i64();
  c.pool_hidden = r.read_i64();
  c.embed_dim = r.read_i64();
  c.decoder_hidden = r.read_i64();
  c.ctx = r.read_u8() != 0;
  return c;
}

}  // namespace

Checkpoint make_checkpoint(const Model& model, const NormStats& norm,
                           const std::string& config_echo) {
  Checkpoint ckpt;
  ckpt.config_echo = config_echo;
  ckpt.model_config = model.config();
  ckpt.norm = norm;
  const Params& params = model.params();
  for (size_t i = 0; i < params.count(); ++i)
    ckpt.params.emplace_back(params.names[i], params.tensors[i]);
  const BnStates& bn = model.bn_states();
  for (size_t i = 0; i < bn.names.size(); ++i)
    ckpt.bn.emplace_back(bn.names[i], bn.states[i]);
  return ckpt;
}

Checkpoint strip_to_encoder(const Checkpoint& full) {
  Checkpoint out;
  out.config_echo = full.config_echo;
  out.model_config = full.model_config;
  out.norm = full.norm;
  for (const auto& [name, tensor] : full.params)
    if (Model::is_encoder_param(name)) out.params.emplace_back(name, tensor);
  for (const auto& [name, state] : full.bn)
    if (Model::is_encoder_param(name)) out.bn.emplace_back(name, state);
  out.has_trainer = false;
  return out;
}

void write_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  BinaryWriter w(path);
  w.write_bytes(kMagic, 4);
  w.write_u32(kVersion);
  w.write_u8(ckpt.has_trainer ? 1 : 0);
  w.write_string(ckpt.config_echo);
  write_model_config(w, ckpt.model_config);

  write_f64_vector(w, ckpt.norm.mean);
  write_f64_vector(w, ckpt.norm.var);

  w.write_u64(ckpt.params.size());
  for (const auto& [name, tensor] : ckpt.params) {
    w.write_string(name);
    write_tensor(w, tensor);
  }

  w.write_u64(ckpt.bn.size());
  for (const auto& [name, state] : ckpt.bn) {
    w.write_string(name);
    w.write_f64(state.momentum);
    write_f64_vector(w, state.running_mean);
    write_f64_vector(w, state.running_var);
  }

  if (ckpt.has_trainer) {
    const TrainerSnapshot& t = ckpt.trainer;
    w.write_i64(t.epoch);
    w.write_f64(t.lr);
    w.write_f64(t.best_val);
    w.write_i64(t.epochs_since_improvement);
    w.write_i64(t.halvings);
    w.write_i64(t.adam_steps);
    if (t.adam_m.size() != ckpt.params.size() ||
        t.adam_v.size() != ckpt.params.size())
      throw NumericError("checkpoint: optimizer moments do not match parameters");
    for (const Tensor& m : t.adam_m) write_tensor(w, m);
    for (const Tensor& v : t.adam_v) write_tensor(w, v);
    w.write_u64(t.rng_states.size());
    for (const auto& [name, state] : t.rng_states) {
      w.write_string(name);
      w.write_string(state);
    }
  }
  w.close();
}

Checkpoint read_checkpoint(const std::string& path) {
  BinaryReader r(path);
  char magic[4];
  r.read_bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("not a checkpoint (bad magic) in " + r.where());
  uint32_t version = r.read_u32();
  if (version != kVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(version) +
                    " in " + r.where());

  Checkpoint ckpt;
  ckpt.has_trainer = r.read_u8() != 0;
  ckpt.config_echo = r.read_string(1u << 24);
  ckpt.model_config = read_model_config(r);

  ckpt.norm.mean = read_f64_vector(r);
  ckpt.norm.var = read_f64_vector(r);

  uint64_t n_params = r.read_u64();
  if (n_params > (1u << 20))
    throw DataError("implausible parameter count in " + r.where());
  for (uint64_t i = 0; i < n_params; ++i) {
    std::string name = r.read_string();
    ckpt.params.emplace_back(std::move(name), read_tensor(r));
  }

  uint64_t n_bn = r.read_u64();
  if (n_bn > (1u << 20))
    throw DataError("implausible batchnorm state count in " + r.where());
  for (uint64_t i = 0; i < n_bn; ++i) {
    std::string name = r.read_string();
    BatchNormState state;
    state.momentum = r.read_f64();
    state.running_mean = read_f64_vector(r);
    state.running_var = read_f64_vector(r);
    if (state.running_mean.size() != state.running_var.size())
      throw DataError("batchnorm state '" + name + "' has mismatched sizes in " +
                      r.where());
    ckpt.bn.emplace_back(std::move(name), std::move(state));
  }

  if (ckpt.has_trainer) {
    TrainerSnapshot& t = ckpt.trainer;
    t.epoch = r.read_i64();
    t.lr = r.read_f64();
    t.best_val = r.read_f64();
    t.epochs_since_improvement = r.read_i64();
    t.halvings = r.read_i64();
    t.adam_steps = r.read_i64();
    t.adam_m.reserve(ckpt.params.size());
    t.adam_v.reserve(ckpt.params.size());
    for (size_t i = 0; i < ckpt.params.size(); ++i)
      t.adam_m.push_back(read_tensor(r));
    for (size_t i = 0; i < ckpt.params.size(); ++i)
      t.adam_v.push_back(read_tensor(r));
    uint64_t n_rng = r.read_u64();
    if (n_rng > 64) throw DataError("implausible rng state count in " + r.where());
    for (uint64_t i = 0; i < n_rng; ++i) {
      std::string name = r.read_string();
      std::string state = r.read_string(1u << 16);
      t.rng_states.emplace_back(std::move(name), std::move(state));
    }
  }
  if (!r.at_eof()) throw DataError("trailing bytes in " + r.where());
  return ckpt;
}

void load_into_model(const Checkpoint& ckpt, Model* model, bool require_full) {
  Params& params = model->params();
  std::vector<bool> seen(params.count(), false);
  for (const auto& [name, tensor] : ckpt.params) {
    int64_t idx = params.index_of(name);
    if (idx < 0)
      throw DataError("checkpoint parameter '" + name +
                      "' does not exist in this model configuration");
    Tensor& dst = params.tensors[static_cast<size_t>(idx)];
    if (!dst.same_shape(tensor))
      throw DataError("checkpoint parameter '" + name + "' has shape " +
                      tensor.shape_string() + ", model expects " +
                      dst.shape_string());
    dst = tensor;
    seen[static_cast<size_t>(idx)] = true;
  }
  if (require_full)
    for (size_t i = 0; i < params.count(); ++i)
      if (!seen[i])
        throw DataError("checkpoint is missing parameter '" + params.names[i] +
                        "' required for this operation");

  BnStates& bn = model->bn_states();
  for (const auto& [name, state] : ckpt.bn) {
    BatchNormState* dst = bn.find(name);
    if (!dst)
      throw DataError("checkpoint batchnorm state '" + name +
                      "' does not exist in this model configuration");
    if (dst->dim() != state.dim())
      throw DataError("checkpoint batchnorm state '" + name + "' has dim " +
                      std::to_string(state.dim()) + ", model expects " +
                      std::to_string(dst->dim()));
    *dst = state;
  }
}

}  // namespace sspk
