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

#ifndef SSPK_MODEL_HPP_
#define SSPK_MODEL_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sspk/ops.hpp"
#include "sspk/tape.hpp"
#include "sspk/tensor.hpp"

namespace sspk {

// Layer widths are configurable so tests and desk-scale runs can shrink the
// network while keeping its exact structure; defaults are the full-scale
// sizes. decoder_hidden == 0 means "equal to phone_classes".
struct ModelConfig {
  int64_t feat_dim = 30;
  int64_t phone_classes = 166;
  int64_t n_speakers = 0;  // 0 = no classifier head
  int64_t tdnn_hidden = 512;
  int64_t pool_hidden = 1500;
  int64_t embed_dim = 512;
  int64_t decoder_hidden = 0;
  bool ctx = false;  // widen decoder phone conditioning to +-3 frames

  int64_t decoder_hidden_dim() const {
    return decoder_hidden > 0 ? decoder_hidden : phone_classes;
  }
  int64_t decoder_input_phone_dim() const {
    return ctx ? 7 * phone_classes : phone_classes;
  }
};

// Flat named parameter registry; insertion order is the canonical parameter
// order used by the optimizer and the checkpoint format.
struct Params {
  std::vector<std::string> names;
  std::vector<Tensor> tensors;

  Tensor& add(const std::string& name, const std::vector<int64_t>& shape);
  int64_t index_of(const std::string& name) const;  // -1 when absent
  Tensor* find(const std::string& name);
  const Tensor* find(const std::string& name) const;
  size_t count() const { return tensors.size(); }
};

// Named rolling statistics, one entry per batchnorm layer.
struct BnStates {
  std::vector<std::string> names;
  std::vector<BatchNormState> states;

  BatchNormState& add(const std::string& name, int64_t dim);
  BatchNormState* find(const std::string& name);
};

// Per-tape binding of parameters to tape leaves. Every layer invocation in
// one forward pass must reuse the same leaf so gradients from all segments
// of a batch accumulate into a single buffer per parameter.
class ParamVars {
 public:
  ParamVars(Tape& tape, Params& params, bool trainable)
      : tape_(&tape), params_(&params), trainable_(trainable),
        vars_(params.count()) {}

  Var var(const std::string& name);

  // Gradient accumulated on this tape for parameter index i (order of
  // Params); null when the parameter was unused or untouched.
  const Tensor* grad(size_t index) const;

 private:
  Tape* tape_;
  Params* params_;
  bool trainable_;
  std::vector<Var> vars_;
};

// Speaker embedding network: a five-layer time-delay encoder with statistics
// pooling and two feed-forward layers, a phone-conditioned frame decoder, and
// an optional speaker classifier head. The embedding is the affine output of
// the first post-pooling feed-forward layer, before its ReLU.
class Model {
 public:
  explicit Model(const ModelConfig& config);

  // Fills every parameter from a per-parameter-name stream derived from
  // `seed`: weights Glorot-uniform, biases zero, batchnorm gamma 1 beta 0.
  void init_params(uint64_t seed);

  const ModelConfig& config() const { return config_; }
  Params& params() { return params_; }
  const Params& params() const { return params_; }
  BnStates& bn_states() { return bn_states_; }
  const BnStates& bn_states() const { return bn_states_; }

  // Frame-level trunk plus statistics pooling over a batch of segments
  // (each [tau_i, feat_dim]); returns stacked pooled rows
  // [segments, 2 * pool_hidden]. All segments pass through each layer
  // together, so train-mode batchnorm statistics cover every frame in the
  // batch; splicing and pooling stay per segment.
  Var encode_segments_pooled(Tape& tape, ParamVars& pv,
                             std::span<const Var> segments, Mode mode);

  struct Heads {
    Var embeddings;        // [b, embed_dim], pre-ReLU affine outputs
    Var classifier_feats;  // [b, embed_dim]
  };
  // Segment-level tail over stacked pooled rows ([b, 2 * pool_hidden]).
  Heads encode_tail(Tape& tape, ParamVars& pv, Var pooled_rows, Mode mode);

  // Logits over speakers from classifier features ([b, embed_dim]).
  Var classifier_logits(Tape& tape, ParamVars& pv, Var feats);

  // Softmax posterior over speakers for one feature vector [embed_dim].
  Tensor classifier_posterior(const Tensor& feats);

  // Reconstructs decode frames ([tau, feat_dim]) from one embedding and the
  // aligned phone labels.
  Var decode_segment(Tape& tape, ParamVars& pv, Var embedding,
                     const std::vector<int32_t>& phones, Mode mode);

  // Whole-utterance embedding in infer mode; batchnorm uses rolling
  // statistics, so the result is independent of any batching.
  Tensor extract_embedding(const Tensor& normalized_frames);

  static bool is_encoder_param(const std::string& name);

 private:
  Var tdnn_block(Tape& tape, ParamVars& pv, Var x,
                 const std::vector<int64_t>& lengths, const std::string& name,
                 const std::vector<int>& offsets, Mode mode);
  Var bn_block(Tape& tape, ParamVars& pv, Var x, const std::string& name,
               Mode mode);
  void check_finite(Tape& tape, Var v, const std::string& where) const;

  ModelConfig config_;
  Params params_;
  BnStates bn_states_;
};

}  // namespace sspk

#endif  // SSPK_MODEL_HPP_
