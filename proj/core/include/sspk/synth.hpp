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

#ifndef SSPK_SYNTH_HPP_
#define SSPK_SYNTH_HPP_

#include <cstdint>

#include "sspk/corpus.hpp"

namespace sspk {

// Feature dimensionality of every corpus this generator produces.
inline constexpr int64_t kFeatDim = 30;

// Generator recipe. Each phone class gets a base mean and a projection that
// maps a per-speaker latent vector into feature space, so speaker identity
// enters the frames only through phone-dependent offsets. Phone labels form
// random runs with geometric lengths; frame means blend neighbouring runs
// with a triangular kernel of the configured radius, giving frames genuine
// temporal context beyond their own label.
struct SynthSpec {
  int64_t speakers = 8;
  int64_t utterances_per_speaker = 4;
  int64_t frames_min = 500;
  int64_t frames_max = 700;
  int64_t phone_classes = 24;
  int64_t speaker_dim = 8;
  double phone_mean_scale = 1.0;
  double speaker_offset_scale = 0.5;
  double noise_scale = 0.25;
  double aug_noise_scale = 0.1;
  double mean_run_length = 6.0;
  int64_t context_blend_radius = 2;
  double labelled_fraction = 1.0;
  uint64_t seed = 1;
};

// Throws ConfigError naming the first invalid field.
void validate_spec(const SynthSpec& spec);

// Deterministic in `spec` (including the seed); per-speaker and
// per-utterance substreams make the output independent of generation order.
Corpus synth_generate(const SynthSpec& spec);

}  // namespace sspk

#endif  // SSPK_SYNTH_HPP_
