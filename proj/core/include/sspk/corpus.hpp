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

#ifndef SSPK_CORPUS_HPP_
#define SSPK_CORPUS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "sspk/tensor.hpp"

namespace sspk {

// One utterance: a clean/augmented feature pair with framewise phone labels
// and an optional speaker label. Frame counts of all three sequences agree.
struct UtteranceRecord {
  std::string id;
  bool labelled = false;
  int64_t speaker = -1;
  Tensor clean;                 // [T, feat_dim]
  Tensor aug;                   // [T, feat_dim]
  std::vector<int32_t> phones;  // length T, values in [0, phone_classes)

  int64_t frames() const { return clean.rows(); }
};

struct Corpus {
  int64_t feat_dim = 0;
  int64_t phone_classes = 0;
  std::vector<UtteranceRecord> records;
};

// Per-dimension feature statistics over all augmented frames; population
// variance. Every variance must be strictly positive.
struct NormStats {
  std::vector<double> mean;
  std::vector<double> var;
};

// Throws DataError describing the first violated field constraint.
void validate_record(const UtteranceRecord& rec, int64_t feat_dim,
                     int64_t phone_classes);

NormStats compute_global_norm(const Corpus& corpus);

// (x - mean) / sqrt(var), applied per column.
Tensor normalize_frames(const Tensor& frames, const NormStats& stats);

void write_archive(const Corpus& corpus, const std::string& path);
Corpus read_archive(const std::string& path);

// Text sidecar: one line per utterance, "id label-or-dash frame-count".
void write_manifest(const Corpus& corpus, const std::string& path);

}  // namespace sspk

#endif  // SSPK_CORPUS_HPP_
