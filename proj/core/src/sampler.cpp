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

#include "sspk/sampler.hpp"

#include <algorithm>
#include <string>
#include <utility>

#include "sspk/error.hpp"

namespace sspk {

namespace {

Tensor slice_rows(const Tensor& src, int64_t offset, int64_t len) {
  const int64_t d = src.cols();
  Tensor out({len, d});
  std::copy_n(src.data() + offset * d, len * d, out.data());
  return out;
}

// Draws one window; lengths span [kSegmentMin, min(kSegmentMax, t)].
void draw_window(int64_t t, Rng& rng, int64_t* offset, int64_t* len) {
  const int64_t hi = std::min<int64_t>(kSegmentMax, t);
  *len = rng.uniform_int(kSegmentMin, hi);
  *offset = rng.uniform_int(0, t - *len);
}

int64_t draw_index(const std::vector<int64_t>& pool, Rng& rng) {
  return pool[static_cast<size_t>(
      rng.uniform_int(0, static_cast<int64_t>(pool.size()) - 1))];
}

}  // namespace

int64_t TrainingBatch::supervised_count() const {
  int64_t n = 0;
  for (const SegmentPair& p : pairs) n += p.supervised ? 1 : 0;
  return n;
}

bool record_eligible(const UtteranceRecord& rec) {
  return rec.frames() >= kSegmentMin;
}

SamplePools build_pools(const Corpus& corpus,
                        const std::vector<int64_t>& exclude) {
  SamplePools pools;
  for (int64_t i = 0; i < static_cast<int64_t>(corpus.records.size()); ++i) {
    if (std::find(exclude.begin(), exclude.end(), i) != exclude.end()) continue;
    const UtteranceRecord& rec = corpus.records[static_cast<size_t>(i)];
    if (!record_eligible(rec)) {
      ++pools.skipped_short;
      continue;
    }
    pools.all.push_back(i);
    if (rec.labelled)
      pools.labelled.push_back(i);
    else
      pools.unlabelled.push_back(i);
  }
  return pools;
}

SegmentPair sample_pair(const UtteranceRecord& rec, const VariantFlags& variants,
                        Rng& rng) {
  const int64_t t = rec.frames();
  if (t < kSegmentMin)
    throw DataError("utterance '" + rec.id + "' has " + std::to_string(t) +
                    " frames, below the minimum segment length " +
                    std::to_string(kSegmentMin));

  int64_t enc_off, enc_len;
  draw_window(t, rng, &enc_off, &enc_len);
  int64_t dec_off = enc_off, dec_len = enc_len;
  if (!variants.same) draw_window(t, rng, &dec_off, &dec_len);

  SegmentPair pair;
  pair.source_id = rec.id;
  pair.encode_frames = slice_rows(rec.aug, enc_off, enc_len);
  pair.decode_frames =
      slice_rows(variants.cln ? rec.clean : rec.aug, dec_off, dec_len);
  pair.decode_phones.assign(
      rec.phones.begin() + static_cast<size_t>(dec_off),
      rec.phones.begin() + static_cast<size_t>(dec_off + dec_len));
  pair.supervised = rec.labelled;
  pair.speaker = rec.speaker;
  return pair;
}

TrainingBatch compose_batch(const Corpus& corpus, const SamplePools& pools,
                            BatchMode mode, const VariantFlags& variants,
                            int64_t segments, Rng& rng_lab, Rng& rng_unl) {
  if (segments < 1) throw ConfigError("compose_batch: segments must be >= 1");
  TrainingBatch batch;

  auto draw_from = [&](const std::vector<int64_t>& pool, Rng& rng,
                       bool keep_label) {
    for (int64_t i = 0; i < segments; ++i) {
      const UtteranceRecord& rec =
          corpus.records[static_cast<size_t>(draw_index(pool, rng))];
      SegmentPair pair = sample_pair(rec, variants, rng);
      if (!keep_label) {
        pair.supervised = false;
        pair.speaker = -1;
      }
      batch.pairs.push_back(std::move(pair));
    }
  };

  switch (mode) {
    case BatchMode::kSupervised:
      if (pools.labelled.empty())
        throw DataError("no labelled utterances available for supervised batches");
      batch.pairs.reserve(static_cast<size_t>(segments));
      draw_from(pools.labelled, rng_lab, true);
      break;
    case BatchMode::kUnsupervised:
      if (pools.all.empty())
        throw DataError("no segmentable utterances available");
      batch.pairs.reserve(static_cast<size_t>(segments));
      draw_from(pools.all, rng_unl, false);
      break;
    case BatchMode::kSemisupervised: {
      if (pools.labelled.empty())
        throw DataError(
            "no labelled utterances available for semi-supervised batches");
      const std::vector<int64_t>& unl =
          pools.unlabelled.empty() ? pools.all : pools.unlabelled;
      if (unl.empty()) throw DataError("no segmentable utterances available");
      batch.pairs.reserve(static_cast<size_t>(2 * segments));
      draw_from(pools.labelled, rng_lab, true);
      draw_from(unl, rng_unl, false);
      break;
    }
  }
  return batch;
}

}  // namespace sspk
