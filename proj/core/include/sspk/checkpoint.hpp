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

#ifndef SSPK_CHECKPOINT_HPP_
#define SSPK_CHECKPOINT_HPP_

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "sspk/corpus.hpp"
#include "sspk/model.hpp"
#include "sspk/tensor.hpp"

namespace sspk {

// Optimizer and schedule state needed to resume a run exactly where it
// stopped; moment tensors are ordered like the parameter registry.
struct TrainerSnapshot {
  int64_t epoch = 0;
  double lr = 0.0;
  double best_val = std::numeric_limits<double>::infinity();
  int64_t epochs_since_improvement = 0;
  int64_t halvings = 0;
  int64_t adam_steps = 0;
  std::vector<Tensor> adam_m;
  std::vector<Tensor> adam_v;
  std::vector<std::pair<std::string, std::string>> rng_states;
};

// Everything a run needs to continue or to extract embeddings. A runtime
// checkpoint may carry only the encoder subset of parameters and rolling
// statistics; such a file extracts embeddings but cannot resume training.
struct Checkpoint {
  std::string config_echo;  // raw configuration text, stored verbatim
  ModelConfig model_config;
  NormStats norm;
  std::vector<std::pair<std::string, Tensor>> params;
  std::vector<std::pair<std::string, BatchNormState>> bn;
  bool has_trainer = false;
  TrainerSnapshot trainer;
};

// Snapshot of a live model (parameters + rolling statistics, full set).
Checkpoint make_checkpoint(const Model& model, const NormStats& norm,
                           const std::string& config_echo);

// Drops decoder/classifier parameters, their statistics, and trainer state.
Checkpoint strip_to_encoder(const Checkpoint& full);

void write_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint read_checkpoint(const std::string& path);

// Copies checkpoint parameters and statistics into a model built from the
// checkpoint's config. With require_full, every model parameter must be
// present (training resume); otherwise the encoder subset suffices.
void load_into_model(const Checkpoint& ckpt, Model* model, bool require_full);

}  // namespace sspk

#endif  // SSPK_CHECKPOINT_HPP_
