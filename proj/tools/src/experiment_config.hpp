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

#ifndef SSPK_TOOLS_EXPERIMENT_CONFIG_HPP_
#define SSPK_TOOLS_EXPERIMENT_CONFIG_HPP_

#include <cstdint>
#include <string>

#include "sspk/model.hpp"
#include "sspk/synth.hpp"
#include "sspk/trainer.hpp"

namespace sspk {
namespace tools {

// Scoring backend knobs. lda_dim 0 picks embed_dim / 4 (at least 1) when the
// backend is fitted.
struct BackendConfig {
  int64_t lda_dim = 0;
  int64_t plda_iterations = 10;
  double p_target = 0.01;
  double c_miss = 1.0;
  double c_fa = 1.0;
};

// One experiment described as a JSON file with sections "synth", "model",
// "train", "backend" and a top-level "seed". Every field is optional and
// falls back to the defaults below; unknown keys are rejected by full path.
// The seed feeds both the generator and the trainer; the --seed flag
// overrides it. Mode and variants are command-line flags, not file fields,
// and the corpus dictates feature and phone dimensions, so neither appears
// here.
struct ExperimentConfig {
  uint64_t seed = 1;
  SynthSpec synth;
  ModelConfig model;
  TrainConfig train;
  BackendConfig backend;
  std::string raw;  // exact file bytes, echoed into run artifacts
};

// Desk-scale defaults: full-scale widths are impractical for a single-core
// run, so the tool shrinks the network while the structure stays fixed.
ExperimentConfig default_experiment_config();

// Parses and validates `path`. Throws ConfigError on unreadable files,
// malformed JSON, unknown keys, or wrongly typed values.
ExperimentConfig load_experiment_config(const std::string& path);

int64_t effective_lda_dim(const BackendConfig& backend, int64_t embed_dim);

}  // namespace tools
}  // namespace sspk

#endif  // SSPK_TOOLS_EXPERIMENT_CONFIG_HPP_
