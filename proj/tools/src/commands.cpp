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

#include "commands.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "sspk/backend.hpp"
#include "sspk/checkpoint.hpp"
#include "sspk/corpus.hpp"
#include "sspk/error.hpp"
#include "sspk/metrics.hpp"
#include "sspk/model.hpp"
#include "sspk/synth.hpp"

namespace sspk {
namespace tools {
namespace {

// Shortest representation that round-trips a double exactly; keeps logs and
// printed metrics bitwise reproducible.
std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string metric_line(const EpochMetrics& m) {
  return "epoch " + std::to_string(m.epoch) + " lr " + fmt_double(m.lr) +
         " ce " + fmt_double(m.train_ce) + " mse " + fmt_double(m.train_mse) +
         " val " + fmt_double(m.val_loss) +
         (m.improved ? " improved 1" : " improved 0");
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << text;
  if (!out.good()) throw DataError("failed writing " + path);
}

std::string mode_name(TrainMode mode) {
  switch (mode) {
    case TrainMode::kSpk:
      return "spk";
    case TrainMode::kSelf:
      return "self";
    case TrainMode::kSpkSelf:
      return "spk+self";
  }
  return "?";
}

// Number of classifier outputs a corpus supports: one per speaker id up to
// the largest labelled id, so labels index logits directly.
int64_t classifier_size(const Corpus& corpus) {
  int64_t max_id = -1;
  for (const UtteranceRecord& rec : corpus.records)
    if (rec.labelled) max_id = std::max(max_id, rec.speaker);
  return max_id + 1;
}

}  // namespace

void cmd_synth(const ExperimentConfig& config, const std::string& out_path) {
  SynthSpec spec = config.synth;
  spec.seed = config.seed;
  validate_spec(spec);

  Corpus corpus = synth_generate(spec);
  write_archive(corpus, out_path);
  write_manifest(corpus, out_path + ".manifest");

  int64_t frames = 0;
  for (const UtteranceRecord& rec : corpus.records) frames += rec.frames();
  std::cout << "speakers=" << spec.speakers
            << " utterances=" << corpus.records.size() << " frames=" << frames
            << "\n";
}

void cmd_train(const ExperimentConfig& config, TrainMode mode,
               const VariantFlags& variants, const std::string& corpus_path,
               const std::string& out_dir, const std::string& resume_path) {
  Corpus corpus = read_archive(corpus_path);

  const int64_t n_speakers = classifier_size(corpus);
  if (mode != TrainMode::kSelf && n_speakers < 1)
    throw ConfigError("mode " + mode_name(mode) +
                      " trains a speaker classifier, but every utterance in " +
                      corpus_path + " is unlabelled");

  TrainConfig tc = config.train;
  tc.mode = mode;
  tc.variants = variants;
  tc.seed = config.seed;

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create output directory " + out_dir);

  const bool resuming = !resume_path.empty();
  ModelConfig mc;
  Checkpoint start;
  if (resuming) {
    start = read_checkpoint(resume_path);
    if (!start.has_trainer)
      throw DataError("checkpoint " + resume_path +
                      " carries no trainer state; cannot resume");
    mc = start.model_config;
    if (mc.feat_dim != corpus.feat_dim ||
        mc.phone_classes != corpus.phone_classes)
      throw DataError("corpus dimensions (" +
                      std::to_string(corpus.feat_dim) + " features, " +
                      std::to_string(corpus.phone_classes) +
                      " phone classes) do not match checkpoint " +
                      resume_path);
    if (mc.ctx != variants.ctx)
      throw ConfigError(
          "variant ctx does not match the decoder layout stored in " +
          resume_path);
  } else {
    mc = config.model;
    mc.feat_dim = corpus.feat_dim;
    mc.phone_classes = corpus.phone_classes;
    mc.n_speakers = mode == TrainMode::kSelf ? 0 : n_speakers;
    mc.ctx = variants.ctx;
  }

  Model model(mc);
  Trainer trainer(&model, &corpus, tc);
  if (resuming) {
    load_into_model(start, &model, /*require_full=*/true);
    trainer.restore(start.trainer);
  } else {
    trainer.initialize();
  }

  write_text_file(out_dir + "/config.json", config.raw);
  std::ofstream log(out_dir + "/metrics.log",
                    resuming ? std::ios::app : std::ios::trunc);
  if (!log) throw DataError("cannot open " + out_dir + "/metrics.log");

  const std::string final_path = out_dir + "/final.ckpt";
  const std::string best_path = out_dir + "/best.ckpt";
  while (!trainer.should_stop()) {
    const EpochMetrics m = trainer.run_epoch();
    const std::string line = metric_line(m);
    log << line << "\n";
    log.flush();
    if (!log.good()) throw DataError("failed writing " + out_dir + "/metrics.log");
    std::cout << line << "\n";
    if (m.epoch == 1 && m.train_ce > 0 && m.train_mse > 0)
      std::cout << "calibration: first-epoch ce/mse ratio "
                << fmt_double(m.train_ce / m.train_mse)
                << " (alpha rescales the mse term)\n";

    Checkpoint ckpt = make_checkpoint(model, trainer.norm(), config.raw);
    ckpt.has_trainer = true;
    ckpt.trainer = trainer.make_snapshot();
    write_checkpoint(ckpt, final_path);
    if (m.improved) write_checkpoint(ckpt, best_path);
  }

  const Checkpoint last = read_checkpoint(final_path);
  write_checkpoint(strip_to_encoder(last), out_dir + "/encoder.ckpt");
  std::cout << "stopped after epoch " << trainer.epoch() << " lr "
            << fmt_double(trainer.lr()) << "\n";
}

void cmd_extract(const std::string& checkpoint_path,
                 const std::string& corpus_path, const std::string& out_path) {
  const Checkpoint ckpt = read_checkpoint(checkpoint_path);
  const Corpus corpus = read_archive(corpus_path);
  if (corpus.feat_dim != ckpt.model_config.feat_dim)
    throw DataError("corpus has " + std::to_string(corpus.feat_dim) +
                    " feature dimensions but checkpoint " + checkpoint_path +
                    " expects " + std::to_string(ckpt.model_config.feat_dim));

  Model model(ckpt.model_config);
  load_into_model(ckpt, &model, /*require_full=*/false);

  EmbeddingTable table;
  table.dim = ckpt.model_config.embed_dim;
  for (const UtteranceRecord& rec : corpus.records) {
    const Tensor emb =
        model.extract_embedding(normalize_frames(rec.aug, ckpt.norm));
    table.append(rec.id, rec.labelled, rec.speaker, emb.span());
  }
  write_embedding_table(out_path, table);
  std::cout << "embeddings=" << table.count() << " dim=" << table.dim << "\n";
}

void cmd_score(const ExperimentConfig& config,
               const std::string& embeddings_path,
               const std::string& train_path, const std::string& trials_path,
               const std::string& out_path, const std::string& backend_out) {
  const EmbeddingTable emb = read_embedding_table(embeddings_path);
  const EmbeddingTable train = read_embedding_table(train_path);
  if (train.dim != emb.dim)
    throw DataError("embedding dimensions differ: " + embeddings_path +
                    " has " + std::to_string(emb.dim) + ", " + train_path +
                    " has " + std::to_string(train.dim));

  Mat rows(0, train.dim);
  std::vector<int64_t> labels;
  for (int64_t i = 0; i < train.count(); ++i) {
    if (!train.labelled[static_cast<size_t>(i)]) continue;
    const auto vec = train.row(i);
    rows.data.insert(rows.data.end(), vec.begin(), vec.end());
    ++rows.rows;
    labels.push_back(train.speakers[static_cast<size_t>(i)]);
  }
  if (labels.empty())
    throw DataError("no labelled embeddings in " + train_path +
                    " to fit the backend on");

  const BackendParams backend =
      fit_backend(rows, labels, effective_lda_dim(config.backend, emb.dim),
                  config.backend.plda_iterations);
  if (!backend_out.empty()) write_backend(backend_out, backend);

  const std::vector<Trial> trials = read_trial_list(trials_path);
  std::vector<ScoredTrial> scored;
  scored.reserve(trials.size());
  for (const Trial& t : trials) {
    const int64_t ie = emb.find(t.enrol);
    const int64_t it = emb.find(t.test);
    if (ie < 0 || it < 0)
      throw DataError(trials_path + " line " + std::to_string(t.line) +
                      ": no embedding for utterance \"" +
                      (ie < 0 ? t.enrol : t.test) + "\"");
    scored.push_back(
        {t.enrol, t.test, backend_score(backend, emb.row(ie), emb.row(it))});
  }
  write_score_file(out_path, scored);
  std::cout << "scored=" << scored.size() << " trials\n";
}

void cmd_eval(const ExperimentConfig& config, const std::string& scores_path,
              const std::string& trials_path) {
  const std::vector<ScoredTrial> scores = read_score_file(scores_path);
  std::unordered_map<std::string, double> by_pair;
  by_pair.reserve(scores.size());
  for (const ScoredTrial& s : scores) {
    const auto [it, fresh] = by_pair.emplace(s.enrol + " " + s.test, s.score);
    if (!fresh)
      throw DataError(scores_path + " holds more than one score for pair " +
                      s.enrol + " " + s.test);
  }

  const std::vector<Trial> trials = read_trial_list(trials_path);
  std::vector<double> target_scores;
  std::vector<double> nontarget_scores;
  for (const Trial& t : trials) {
    const auto it = by_pair.find(t.enrol + " " + t.test);
    if (it == by_pair.end())
      throw DataError(trials_path + " line " + std::to_string(t.line) +
                      ": no score for pair " + t.enrol + " " + t.test);
    (t.target ? target_scores : nontarget_scores).push_back(it->second);
  }

  const double eer = eer_percent(target_scores, nontarget_scores);
  const double dcf =
      min_dcf(target_scores, nontarget_scores, config.backend.p_target,
              config.backend.c_miss, config.backend.c_fa);
  std::cout << "EER=" << fmt_double(eer) << "% minDCF=" << fmt_double(dcf)
            << "\n";
}

}  // namespace tools
}  // namespace sspk
