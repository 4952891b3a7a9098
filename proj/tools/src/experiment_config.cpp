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

#include "experiment_config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include <json.hpp>

#include "sspk/error.hpp"

namespace sspk {
namespace tools {
namespace {

using nlohmann::json;

// Rejects any key of `obj` outside `allowed`, reporting it with its full
// path so a typo in a nested section is easy to locate.
void reject_unknown_keys(const json& obj, const std::string& path,
                         std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    const bool known = std::any_of(
        allowed.begin(), allowed.end(),
        [&](const char* k) { return item.key() == k; });
    if (!known)
      throw ConfigError("config: unknown key " +
                        (path.empty() ? item.key() : path + "." + item.key()));
  }
}

const json* section(const json& root, const char* name) {
  auto it = root.find(name);
  if (it == root.end()) return nullptr;
  if (!it->is_object())
    throw ConfigError(std::string("config: ") + name + " must be an object");
  return &*it;
}

void read_int(const json& obj, const std::string& path, const char* key,
              int64_t* out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!it->is_number_integer())
    throw ConfigError("config: " + path + "." + key + " must be an integer");
  *out = it->get<int64_t>();
}

void read_num(const json& obj, const std::string& path, const char* key,
              double* out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!it->is_number())
    throw ConfigError("config: " + path + "." + key + " must be a number");
  *out = it->get<double>();
}

void read_seed(const json& obj, const char* key, uint64_t* out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!it->is_number_unsigned())
    throw ConfigError(std::string("config: ") + key +
                      " must be a non-negative integer");
  *out = it->get<uint64_t>();
}

void parse_synth(const json& obj, SynthSpec* spec) {
  reject_unknown_keys(
      obj, "synth",
      {"speakers", "utterances_per_speaker", "frames_min", "frames_max",
       "phone_classes", "speaker_dim", "phone_mean_scale",
       "speaker_offset_scale", "noise_scale", "aug_noise_scale",
       "mean_run_length", "context_blend_radius", "labelled_fraction"});
  read_int(obj, "synth", "speakers", &spec->speakers);
  read_int(obj, "synth", "utterances_per_speaker",
           &spec->utterances_per_speaker);
  read_int(obj, "synth", "frames_min", &spec->frames_min);
  read_int(obj, "synth", "frames_max", &spec->frames_max);
  read_int(obj, "synth", "phone_classes", &spec->phone_classes);
  read_int(obj, "synth", "speaker_dim", &spec->speaker_dim);
  read_num(obj, "synth", "phone_mean_scale", &spec->phone_mean_scale);
  read_num(obj, "synth", "speaker_offset_scale", &spec->speaker_offset_scale);
  read_num(obj, "synth", "noise_scale", &spec->noise_scale);
  read_num(obj, "synth", "aug_noise_scale", &spec->aug_noise_scale);
  read_num(obj, "synth", "mean_run_length", &spec->mean_run_length);
  read_int(obj, "synth", "context_blend_radius", &spec->context_blend_radius);
  read_num(obj, "synth", "labelled_fraction", &spec->labelled_fraction);
}

// Only the widths are configurable; feature dim, phone classes, speaker
// count, and the ctx switch are fixed by the corpus and the variant flags at
// the point of use.
void parse_model(const json& obj, ModelConfig* model) {
  reject_unknown_keys(
      obj, "model",
      {"tdnn_hidden", "pool_hidden", "embed_dim", "decoder_hidden"});
  read_int(obj, "model", "tdnn_hidden", &model->tdnn_hidden);
  read_int(obj, "model", "pool_hidden", &model->pool_hidden);
  read_int(obj, "model", "embed_dim", &model->embed_dim);
  read_int(obj, "model", "decoder_hidden", &model->decoder_hidden);
}

void parse_train(const json& obj, TrainConfig* train) {
  reject_unknown_keys(
      obj, "train",
      {"alpha", "lr_init", "patience_epochs", "minibatches_per_epoch",
       "batch_segments", "max_epochs", "max_halvings", "val_fraction",
       "val_pairs"});
  read_num(obj, "train", "alpha", &train->alpha);
  read_num(obj, "train", "lr_init", &train->lr_init);
  read_int(obj, "train", "patience_epochs", &train->patience_epochs);
  read_int(obj, "train", "minibatches_per_epoch",
           &train->minibatches_per_epoch);
  read_int(obj, "train", "batch_segments", &train->batch_segments);
  read_int(obj, "train", "max_epochs", &train->max_epochs);
  read_int(obj, "train", "max_halvings", &train->max_halvings);
  read_num(obj, "train", "val_fraction", &train->val_fraction);
  read_int(obj, "train", "val_pairs", &train->val_pairs);
}

void parse_backend(const json& obj, BackendConfig* backend) {
  reject_unknown_keys(
      obj, "backend",
      {"lda_dim", "plda_iterations", "p_target", "c_miss", "c_fa"});
  read_int(obj, "backend", "lda_dim", &backend->lda_dim);
  read_int(obj, "backend", "plda_iterations", &backend->plda_iterations);
  read_num(obj, "backend", "p_target", &backend->p_target);
  read_num(obj, "backend", "c_miss", &backend->c_miss);
  read_num(obj, "backend", "c_fa", &backend->c_fa);
}

}  // namespace

ExperimentConfig default_experiment_config() {
  ExperimentConfig config;
  config.synth.speakers = 16;
  config.synth.utterances_per_speaker = 8;
  config.synth.frames_min = 400;
  config.synth.frames_max = 600;
  config.synth.phone_classes = 12;
  config.synth.speaker_dim = 6;
  config.model.tdnn_hidden = 64;
  config.model.pool_hidden = 128;
  config.model.embed_dim = 64;
  config.train.minibatches_per_epoch = 40;
  config.train.batch_segments = 8;
  config.train.max_epochs = 8;
  config.train.patience_epochs = 4;
  config.train.val_fraction = 0.1;
  config.train.val_pairs = 32;
  config.raw = "{}";
  return config;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();

  ExperimentConfig config = default_experiment_config();
  config.raw = buf.str();

  json root;
  try {
    root = json::parse(config.raw);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  if (!root.is_object())
    throw ConfigError("config: " + path + " must hold a JSON object");

  reject_unknown_keys(root, "", {"seed", "synth", "model", "train", "backend"});
  read_seed(root, "seed", &config.seed);
  if (const json* obj = section(root, "synth")) parse_synth(*obj, &config.synth);
  if (const json* obj = section(root, "model")) parse_model(*obj, &config.model);
  if (const json* obj = section(root, "train")) parse_train(*obj, &config.train);
  if (const json* obj = section(root, "backend"))
    parse_backend(*obj, &config.backend);

  if (config.backend.lda_dim < 0)
    throw ConfigError("config: backend.lda_dim must be non-negative");
  if (config.backend.plda_iterations < 1)
    throw ConfigError("config: backend.plda_iterations must be >= 1");
  return config;
}

int64_t effective_lda_dim(const BackendConfig& backend, int64_t embed_dim) {
  if (backend.lda_dim > 0) return backend.lda_dim;
  return std::max<int64_t>(1, embed_dim / 4);
}

}  // namespace tools
}  // namespace sspk
