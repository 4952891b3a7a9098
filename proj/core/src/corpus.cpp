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

#include "sspk/corpus.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <utility>

#include "sspk/error.hpp"
#include "sspk/io.hpp"

namespace sspk {

namespace {

constexpr char kMagic[4] = {'S', 'S', 'P', 'K'};
constexpr uint32_t kVersion = 1;

}  // namespace

void validate_record(const UtteranceRecord& rec, int64_t feat_dim,
                     int64_t phone_classes) {
  const std::string tag = "utterance '" + rec.id + "': ";
  if (rec.id.empty()) throw DataError("utterance with empty id");
  if (rec.clean.rank() != 2 || rec.clean.cols() != feat_dim)
    throw DataError(tag + "clean features have shape " + rec.clean.shape_string() +
                    ", expected [T, " + std::to_string(feat_dim) + "]");
  if (!rec.aug.same_shape(rec.clean))
    throw DataError(tag + "augmented shape " + rec.aug.shape_string() +
                    " != clean shape " + rec.clean.shape_string());
  const int64_t t = rec.clean.rows();
  if (t < 1) throw DataError(tag + "no frames");
  if (static_cast<int64_t>(rec.phones.size()) != t)
    throw DataError(tag + std::to_string(rec.phones.size()) + " phone labels for " +
                    std::to_string(t) + " frames");
  for (int64_t i = 0; i < t; ++i) {
    int32_t p = rec.phones[static_cast<size_t>(i)];
    if (p < 0 || p >= phone_classes)
      throw DataError(tag + "phone " + std::to_string(p) + " at frame " +
                      std::to_string(i) + " outside [0, " +
                      std::to_string(phone_classes) + ")");
  }
  if (!rec.clean.all_finite() || !rec.aug.all_finite())
    throw DataError(tag + "non-finite feature values");
  if (rec.labelled && rec.speaker < 0)
    throw DataError(tag + "labelled without a valid speaker");
}

NormStats compute_global_norm(const Corpus& corpus) {
  if (corpus.records.empty()) throw DataError("cannot normalize an empty corpus");
  const int64_t f = corpus.feat_dim;
  NormStats stats;
  stats.mean.assign(static_cast<size_t>(f), 0.0);
  stats.var.assign(static_cast<size_t>(f), 0.0);

  int64_t total = 0;
  for (const UtteranceRecord& rec : corpus.records) {
    const float* p = rec.aug.data();
    const int64_t t = rec.frames();
    for (int64_t r = 0; r < t; ++r)
      for (int64_t c = 0; c < f; ++c)
        stats.mean[static_cast<size_t>(c)] += p[r * f + c];
    total += t;
  }
  for (int64_t c = 0; c < f; ++c) stats.mean[static_cast<size_t>(c)] /= total;

  for (const UtteranceRecord& rec : corpus.records) {
    const float* p = rec.aug.data();
    const int64_t t = rec.frames();
    for (int64_t r = 0; r < t; ++r)
      for (int64_t c = 0; c < f; ++c) {
        double d = p[r * f + c] - stats.mean[static_cast<size_t>(c)];
        stats.var[static_cast<size_t>(c)] += d * d;
      }
  }
  for (int64_t c = 0; c < f; ++c) {
    stats.var[static_cast<size_t>(c)] /= total;
    if (!(stats.var[static_cast<size_t>(c)] > 0.0))
      throw DataError("feature dimension " + std::to_string(c) +
                      " has zero variance; normalization undefined");
  }
  return stats;
}

Tensor normalize_frames(const Tensor& frames, const NormStats& stats) {
  if (frames.rank() != 2 ||
      frames.cols() != static_cast<int64_t>(stats.mean.size()))
    throw DataError("normalize_frames: shape " + frames.shape_string() +
                    " incompatible with " + std::to_string(stats.mean.size()) +
                    "-dim statistics");
  const int64_t t = frames.rows();
  const int64_t f = frames.cols();
  Tensor out({t, f});
  const float* in = frames.data();
  float* o = out.data();
  for (int64_t c = 0; c < f; ++c) {
    const double mean = stats.mean[static_cast<size_t>(c)];
    const double inv = 1.0 / std::sqrt(stats.var[static_cast<size_t>(c)]);
    for (int64_t r = 0; r < t; ++r)
      o[r * f + c] = static_cast<float>((in[r * f + c] - mean) * inv);
  }
  return out;
}

void write_archive(const Corpus& corpus, const std::string& path) {
  BinaryWriter w(path);
  w.write_bytes(kMagic, 4);
  w.write_u32(kVersion);
  w.write_u32(static_cast<uint32_t>(corpus.feat_dim));
  w.write_u32(static_cast<uint32_t>(corpus.phone_classes));
  w.write_u64(corpus.records.size());
  for (const UtteranceRecord& rec : corpus.records) {
    validate_record(rec, corpus.feat_dim, corpus.phone_classes);
    w.write_string(rec.id);
    w.write_u8(rec.labelled ? 1 : 0);
    w.write_i64(rec.speaker);
    w.write_u64(static_cast<uint64_t>(rec.frames()));
    w.write_f32_span({rec.clean.data(), static_cast<size_t>(rec.clean.size())});
    w.write_f32_span({rec.aug.data(), static_cast<size_t>(rec.aug.size())});
    w.write_i32_span({rec.phones.data(), rec.phones.size()});
  }
  w.close();
}

Corpus read_archive(const std::string& path) {
  BinaryReader r(path);
  char magic[4];
  r.read_bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("not a corpus archive (bad magic) in " + r.where());
  uint32_t version = r.read_u32();
  if (version != kVersion)
    throw DataError("unsupported archive version " + std::to_string(version) +
                    " in " + r.where());
  Corpus corpus;
  corpus.feat_dim = r.read_u32();
  corpus.phone_classes = r.read_u32();
  uint64_t count = r.read_u64();

  corpus.records.reserve(count);
  for (uint64_t i = 0; i < count; ++i) {
    try {
      UtteranceRecord rec;
      rec.id = r.read_string();
      rec.labelled = r.read_u8() != 0;
      rec.speaker = r.read_i64();
      uint64_t t = r.read_u64();
      if (t == 0 || t > (1ull << 32))
        throw DataError("implausible frame count " + std::to_string(t));
      size_t n = static_cast<size_t>(t) * static_cast<size_t>(corpus.feat_dim);
      Tensor clean({static_cast<int64_t>(t), corpus.feat_dim});
      Tensor aug({static_cast<int64_t>(t), corpus.feat_dim});
      r.read_f32_span({clean.data(), n});
      r.read_f32_span({aug.data(), n});
      rec.clean = std::move(clean);
      rec.aug = std::move(aug);
      rec.phones.resize(t);
      r.read_i32_span({rec.phones.data(), static_cast<size_t>(t)});
      validate_record(rec, corpus.feat_dim, corpus.phone_classes);
      corpus.records.push_back(std::move(rec));
    } catch (const DataError& e) {
      throw DataError("record " + std::to_string(i) + ": " + e.what());
    }
  }
  if (!r.at_eof())
    throw DataError("trailing bytes after last record in " + r.where());
  return corpus;
}

void write_manifest(const Corpus& corpus, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw DataError("cannot open manifest for writing: " + path);
  for (const UtteranceRecord& rec : corpus.records) {
    std::string label = rec.labelled ? std::to_string(rec.speaker) : "-";
    std::fprintf(f, "%s %s %lld\n", rec.id.c_str(), label.c_str(),
                 static_cast<long long>(rec.frames()));
  }
  if (std::fclose(f) != 0) throw DataError("failed writing manifest: " + path);
}

}  // namespace sspk
