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

#include "sspk/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "sspk/error.hpp"
#include "sspk/rng.hpp"

namespace sspk {

namespace {

std::string utt_id(int64_t speaker, int64_t utt) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "s%04lld_u%03lld",
                static_cast<long long>(speaker), static_cast<long long>(utt));
  return buf;
}

std::vector<int32_t> draw_phone_runs(Rng& rng, int64_t frames, int64_t classes,
                                     double mean_run_length) {
  std::vector<int32_t> phones;
  phones.reserve(static_cast<size_t>(frames));
  const double p = 1.0 / mean_run_length;
  while (static_cast<int64_t>(phones.size()) < frames) {
    int32_t phone = static_cast<int32_t>(rng.uniform_int(0, classes - 1));
    int64_t run = 1;
    if (p < 1.0)
      run += static_cast<int64_t>(
          std::floor(std::log(1.0 - rng.uniform()) / std::log(1.0 - p)));
    run = std::min<int64_t>(run, frames - static_cast<int64_t>(phones.size()));
    phones.insert(phones.end(), static_cast<size_t>(run), phone);
  }
  return phones;
}

}  // namespace

void validate_spec(const SynthSpec& spec) {
  if (spec.speakers < 1) throw ConfigError("synth: speakers must be >= 1");
  if (spec.utterances_per_speaker < 1)
    throw ConfigError("synth: utterances_per_speaker must be >= 1");
  if (spec.frames_min < 1) throw ConfigError("synth: frames_min must be >= 1");
  if (spec.frames_max < spec.frames_min)
    throw ConfigError("synth: frames_max must be >= frames_min");
  if (spec.phone_classes < 2)
    throw ConfigError("synth: phone_classes must be >= 2");
  if (spec.speaker_dim < 1) throw ConfigError("synth: speaker_dim must be >= 1");
  if (spec.phone_mean_scale < 0 || spec.speaker_offset_scale < 0 ||
      spec.noise_scale < 0 || spec.aug_noise_scale < 0)
    throw ConfigError("synth: scales must be non-negative");
  if (spec.mean_run_length < 1.0)
    throw ConfigError("synth: mean_run_length must be >= 1");
  if (spec.context_blend_radius < 0)
    throw ConfigError("synth: context_blend_radius must be >= 0");
  if (spec.labelled_fraction < 0.0 || spec.labelled_fraction > 1.0)
    throw ConfigError("synth: labelled_fraction must be within [0, 1]");
}

Corpus synth_generate(const SynthSpec& spec) {
  validate_spec(spec);
  const int64_t f = kFeatDim;
  const int64_t p_classes = spec.phone_classes;
  const int64_t v_dim = spec.speaker_dim;

  // Phone inventory: base means and speaker projections. The projection is
  // scaled so one latent unit moves each feature by about offset_scale.
  std::vector<float> phone_means(static_cast<size_t>(p_classes * f));
  std::vector<float> phone_proj(static_cast<size_t>(p_classes * f * v_dim));
  {
    Rng rng(derive_seed(spec.seed, "phone-inventory"));
    rng.fill_normal(phone_means, 0.0f, static_cast<float>(spec.phone_mean_scale));
    rng.fill_normal(phone_proj, 0.0f,
                    static_cast<float>(spec.speaker_offset_scale /
                                       std::sqrt(static_cast<double>(v_dim))));
  }

  const int64_t labelled_speakers = static_cast<int64_t>(
      std::llround(spec.labelled_fraction * static_cast<double>(spec.speakers)));

  Corpus corpus;
  corpus.feat_dim = f;
  corpus.phone_classes = p_classes;
  corpus.records.reserve(
      static_cast<size_t>(spec.speakers * spec.utterances_per_speaker));

  const int64_t radius = spec.context_blend_radius;
  std::vector<double> mean_buf(static_cast<size_t>(f));

  for (int64_t s = 0; s < spec.speakers; ++s) {
    std::vector<float> latent(static_cast<size_t>(v_dim));
    {
      Rng rng(derive_seed(spec.seed, "speaker/" + std::to_string(s)));
      rng.fill_normal(latent, 0.0f, 1.0f);
    }
    // Per-speaker phone offsets A_p * v_s, precomputed once.
    std::vector<float> offsets(static_cast<size_t>(p_classes * f), 0.0f);
    for (int64_t p = 0; p < p_classes; ++p)
      for (int64_t c = 0; c < f; ++c) {
        double acc = 0.0;
        const float* row = phone_proj.data() + (p * f + c) * v_dim;
        for (int64_t k = 0; k < v_dim; ++k) acc += row[k] * latent[k];
        offsets[static_cast<size_t>(p * f + c)] = static_cast<float>(acc);
      }

    for (int64_t u = 0; u < spec.utterances_per_speaker; ++u) {
      UtteranceRecord rec;
      rec.id = utt_id(s, u);
      rec.labelled = s < labelled_speakers;
      rec.speaker = rec.labelled ? s : -1;

      Rng rng(derive_seed(spec.seed, "utt/" + rec.id));
      int64_t frames = spec.frames_min;
      if (spec.frames_max > spec.frames_min)
        frames = rng.uniform_int(spec.frames_min, spec.frames_max);
      rec.phones = draw_phone_runs(rng, frames, p_classes, spec.mean_run_length);

      Tensor clean({frames, f});
      Tensor aug({frames, f});
      float* cl = clean.data();
      for (int64_t t = 0; t < frames; ++t) {
        std::fill(mean_buf.begin(), mean_buf.end(), 0.0);
        double wsum = 0.0;
        for (int64_t k = -radius; k <= radius; ++k) {
          int64_t src = std::clamp<int64_t>(t + k, 0, frames - 1);
          double w = static_cast<double>(radius + 1 - std::abs(k));
          const float* mu =
              phone_means.data() + rec.phones[static_cast<size_t>(src)] * f;
          for (int64_t c = 0; c < f; ++c) mean_buf[static_cast<size_t>(c)] += w * mu[c];
          wsum += w;
        }
        const float* off =
            offsets.data() + rec.phones[static_cast<size_t>(t)] * f;
        for (int64_t c = 0; c < f; ++c)
          cl[t * f + c] = static_cast<float>(
              mean_buf[static_cast<size_t>(c)] / wsum + off[c] +
              spec.noise_scale * rng.normal());
      }
      float* ag = aug.data();
      for (int64_t i = 0; i < frames * f; ++i)
        ag[i] = static_cast<float>(cl[i] + spec.aug_noise_scale * rng.normal());

      rec.clean = std::move(clean);
      rec.aug = std::move(aug);
      validate_record(rec, f, p_classes);
      corpus.records.push_back(std::move(rec));
    }
  }
  return corpus;
}

}  // namespace sspk
