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

#ifndef SSPK_SAMPLER_HPP_
#define SSPK_SAMPLER_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "sspk/corpus.hpp"
#include "sspk/rng.hpp"

namespace sspk {

inline constexpr int64_t kSegmentMin = 200;
inline constexpr int64_t kSegmentMax = 400;

// Pipeline variant switches. `cln` decodes toward the clean channel, `ctx`
// widens the decoder's phone conditioning window, `same` reuses the encoder
// window for decoding.
struct VariantFlags {
  bool cln = false;
  bool ctx = false;
  bool same = false;
};

// One training example: an encoder segment from the augmented channel and a
// decoder segment with aligned phone labels.
struct SegmentPair {
  std::string source_id;               // utterance the windows came from
  Tensor encode_frames;                // [tau_e, F]
  Tensor decode_frames;                // [tau_d, F]
  std::vector<int32_t> decode_phones;  // length tau_d
  bool supervised = false;
  int64_t speaker = -1;
};

struct TrainingBatch {
  std::vector<SegmentPair> pairs;
  int64_t supervised_count() const;
};

enum class BatchMode { kSupervised, kSemisupervised, kUnsupervised };

// Index pools over corpus records, restricted to segmentable utterances.
struct SamplePools {
  std::vector<int64_t> labelled;
  std::vector<int64_t> unlabelled;
  std::vector<int64_t> all;
  int64_t skipped_short = 0;
};

// Drops utterances shorter than kSegmentMin; `exclude` entries (e.g. the
// validation split) are omitted from every pool.
SamplePools build_pools(const Corpus& corpus, const std::vector<int64_t>& exclude);

bool record_eligible(const UtteranceRecord& rec);

// Segment lengths are uniform on [kSegmentMin, min(kSegmentMax, T)], offsets
// uniform over valid positions; encode and decode windows are independent
// unless `same`. Throws DataError for records shorter than kSegmentMin.
SegmentPair sample_pair(const UtteranceRecord& rec, const VariantFlags& variants,
                        Rng& rng);

// Draws `segments` pairs per delta class: supervised batches consume only
// rng_lab, unsupervised only rng_unl, semi-supervised both (labelled half
// first). Separate streams keep the labelled half's draws identical across
// batch modes. When every utterance is labelled, the unlabelled half of a
// semi-supervised batch falls back to the full pool with labels hidden.
TrainingBatch compose_batch(const Corpus& corpus, const SamplePools& pools,
                            BatchMode mode, const VariantFlags& variants,
                            int64_t segments, Rng& rng_lab, Rng& rng_unl);

}  // namespace sspk

#endif  // SSPK_SAMPLER_HPP_
