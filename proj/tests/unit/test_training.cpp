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

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "sspk/checkpoint.hpp"
#include "sspk/corpus.hpp"
#include "sspk/error.hpp"
#include "sspk/model.hpp"
#include "sspk/ops.hpp"
#include "sspk/rng.hpp"
#include "sspk/sampler.hpp"
#include "sspk/synth.hpp"
#include "sspk/tape.hpp"
#include "sspk/trainer.hpp"

using namespace sspk;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

bool tensors_equal(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.data(), b.data(), sizeof(float) * a.size()) == 0;
}

bool params_equal(const Model& a, const Model& b) {
  if (a.params().count() != b.params().count()) return false;
  for (std::size_t i = 0; i < a.params().count(); ++i)
    if (!tensors_equal(a.params().tensors[i], b.params().tensors[i]))
      return false;
  return true;
}

Tensor scalar(float v) {
  Tensor t({1});
  t[0] = v;
  return t;
}

// A corpus small enough for desk-scale training loops; fully labelled.
SynthSpec tiny_spec() {
  SynthSpec spec;
  spec.speakers = 6;
  spec.utterances_per_speaker = 3;
  spec.frames_min = 210;
  spec.frames_max = 250;
  spec.phone_classes = 5;
  spec.speaker_dim = 4;
  spec.seed = 5;
  return spec;
}

ModelConfig tiny_model(const SynthSpec& spec) {
  ModelConfig c;
  c.feat_dim = kFeatDim;
  c.phone_classes = spec.phone_classes;
  c.n_speakers = spec.speakers;
  c.tdnn_hidden = 8;
  c.pool_hidden = 8;
  c.embed_dim = 8;
  return c;
}

TrainConfig tiny_train() {
  TrainConfig c;
  c.mode = TrainMode::kSpkSelf;
  c.alpha = 0.5;
  c.lr_init = 2e-3;
  c.patience_epochs = 2;
  c.minibatches_per_epoch = 2;
  c.batch_segments = 2;
  c.max_epochs = 3;
  c.val_fraction = 0.1;
  c.val_pairs = 4;
  c.seed = 9;
  return c;
}

UtteranceRecord make_utterance(const std::string& id, bool labelled,
                               int64_t speaker, int64_t t, int64_t feat_dim,
                               int64_t phone_classes, uint64_t seed) {
  UtteranceRecord rec;
  rec.id = id;
  rec.labelled = labelled;
  rec.speaker = speaker;
  rec.clean = Tensor({t, feat_dim});
  rec.aug = Tensor({t, feat_dim});
  Rng rng(seed);
  rng.fill_normal(rec.clean.span(), 0.0f, 1.0f);
  rng.fill_normal(rec.aug.span(), 0.0f, 1.0f);
  rec.phones.resize(static_cast<size_t>(t));
  for (int64_t i = 0; i < t; ++i)
    rec.phones[static_cast<size_t>(i)] =
        static_cast<int32_t>(rng.uniform_int(0, phone_classes - 1));
  return rec;
}

}  // namespace

TEST_CASE("learning rate halves after patience epochs without improvement") {
  ScheduleState st;
  st.lr = 0.04;

  // Losses 5, 6, 6, 6 with patience 2: the halving lands when the counter
  // reaches 2, and the counter restarts afterwards.
  CHECK(schedule_update(&st, 5.0, 2));
  CHECK(st.lr == 0.04);
  CHECK(st.best == 5.0);

  CHECK_FALSE(schedule_update(&st, 6.0, 2));
  CHECK(st.lr == 0.04);
  CHECK(st.since_improvement == 1);

  CHECK_FALSE(schedule_update(&st, 6.0, 2));
  CHECK(st.lr == 0.02);
  CHECK(st.halvings == 1);
  CHECK(st.since_improvement == 0);

  CHECK_FALSE(schedule_update(&st, 6.0, 2));
  CHECK(st.lr == 0.02);
  CHECK(st.since_improvement == 1);

  // Ties never count as improvement.
  CHECK_FALSE(schedule_update(&st, 5.0, 2));
  CHECK(st.lr == 0.01);

  CHECK_THROWS_AS(schedule_update(&st, std::nan(""), 2), NumericError);
}

TEST_CASE("joint loss mixes the supervised and reconstruction terms") {
  Tape tape;
  const Var ce = tape.constant(scalar(2.0f));
  const std::vector<Var> mses = {tape.constant(scalar(1.0f)),
                                 tape.constant(scalar(3.0f))};

  // ce + alpha * mean(mse): 2 + 0.5 * 2 = 3.
  CHECK(tape.val(joint_loss(tape, ce, mses, 0.5))[0] == doctest::Approx(3.0));

  // Without supervision the term reduces to alpha * mean(mse).
  CHECK(tape.val(joint_loss(tape, Var{}, mses, 0.5))[0] == doctest::Approx(1.0));

  // A zero weight drops the reconstruction terms entirely.
  CHECK(tape.val(joint_loss(tape, ce, mses, 0.0))[0] == doctest::Approx(2.0));
  CHECK(tape.val(joint_loss(tape, ce, {}, 0.5))[0] == doctest::Approx(2.0));

  CHECK_THROWS_AS(joint_loss(tape, Var{}, mses, 0.0), NumericError);
  CHECK_THROWS_AS(joint_loss(tape, Var{}, {}, 1.0), NumericError);
}

TEST_CASE("train config validation rejects out-of-range fields") {
  CHECK_NOTHROW(validate_train_config(tiny_train()));

  auto broken = [](auto mutate) {
    TrainConfig c = tiny_train();
    mutate(c);
    return c;
  };
  CHECK_THROWS_AS(
      validate_train_config(broken([](TrainConfig& c) { c.alpha = -0.1; })),
      ConfigError);
  CHECK_THROWS_AS(validate_train_config(broken([](TrainConfig& c) {
                    c.mode = TrainMode::kSelf;
                    c.alpha = 0.0;
                  })),
                  ConfigError);
  CHECK_THROWS_AS(
      validate_train_config(broken([](TrainConfig& c) { c.lr_init = 0.0; })),
      ConfigError);
  CHECK_THROWS_AS(validate_train_config(
                      broken([](TrainConfig& c) { c.patience_epochs = 0; })),
                  ConfigError);
  CHECK_THROWS_AS(validate_train_config(broken([](TrainConfig& c) {
                    c.minibatches_per_epoch = 0;
                  })),
                  ConfigError);
  CHECK_THROWS_AS(validate_train_config(
                      broken([](TrainConfig& c) { c.batch_segments = 1; })),
                  ConfigError);
  CHECK_THROWS_AS(
      validate_train_config(broken([](TrainConfig& c) { c.max_epochs = 0; })),
      ConfigError);
  CHECK_THROWS_AS(
      validate_train_config(broken([](TrainConfig& c) { c.max_halvings = -1; })),
      ConfigError);
  CHECK_THROWS_AS(validate_train_config(
                      broken([](TrainConfig& c) { c.val_fraction = 0.0; })),
                  ConfigError);
  CHECK_THROWS_AS(validate_train_config(
                      broken([](TrainConfig& c) { c.val_fraction = 0.6; })),
                  ConfigError);
  CHECK_THROWS_AS(
      validate_train_config(broken([](TrainConfig& c) { c.val_pairs = 0; })),
      ConfigError);

  // Supervised modes need a classifier head on the model.
  const Corpus corpus = synth_generate(tiny_spec());
  ModelConfig headless = tiny_model(tiny_spec());
  headless.n_speakers = 0;
  Model model(headless);
  TrainConfig spk = tiny_train();
  spk.mode = TrainMode::kSpk;
  CHECK_THROWS_AS(Trainer(&model, &corpus, spk), ConfigError);
}

TEST_CASE("trainer preparation rejects unusable corpora") {
  const SynthSpec spec = tiny_spec();
  Model model(tiny_model(spec));

  // Too few utterances to carve out a validation split.
  Corpus one;
  one.feat_dim = kFeatDim;
  one.phone_classes = spec.phone_classes;
  one.records.push_back(make_utterance("u0", true, 0, 220, kFeatDim, 5, 31));
  Trainer t1(&model, &one, tiny_train());
  CHECK_THROWS_AS(t1.initialize(), DataError);

  // Everything outside the validation split is too short to segment.
  Corpus short_corpus;
  short_corpus.feat_dim = kFeatDim;
  short_corpus.phone_classes = spec.phone_classes;
  for (int i = 0; i < 5; ++i)
    short_corpus.records.push_back(make_utterance(
        "s" + std::to_string(i), true, i % 3, 50, kFeatDim, 5, 40 + i));
  Trainer t2(&model, &short_corpus, tiny_train());
  CHECK_THROWS_AS(t2.initialize(), DataError);

  // Supervised training without a single labelled utterance.
  Corpus unlabelled;
  unlabelled.feat_dim = kFeatDim;
  unlabelled.phone_classes = spec.phone_classes;
  for (int i = 0; i < 10; ++i)
    unlabelled.records.push_back(make_utterance(
        "n" + std::to_string(i), false, -1, 220, kFeatDim, 5, 60 + i));
  TrainConfig spk = tiny_train();
  spk.mode = TrainMode::kSpk;
  Trainer t3(&model, &unlabelled, spk);
  CHECK_THROWS_AS(t3.initialize(), DataError);
}

TEST_CASE("training runs are finite and bitwise reproducible") {
  const SynthSpec spec = tiny_spec();
  const Corpus corpus = synth_generate(spec);
  const TrainConfig config = tiny_train();

  auto run = [&](std::vector<EpochMetrics>* metrics) {
    Model model(tiny_model(spec));
    Trainer trainer(&model, &corpus, config);
    trainer.initialize();
    while (!trainer.should_stop()) metrics->push_back(trainer.run_epoch());
    return model;
  };

  std::vector<EpochMetrics> ma, mb;
  const Model a = run(&ma);
  const Model b = run(&mb);

  REQUIRE(ma.size() == 3);
  for (const EpochMetrics& m : ma) {
    CHECK(std::isfinite(m.train_ce));
    CHECK(std::isfinite(m.train_mse));
    CHECK(std::isfinite(m.val_loss));
    CHECK(m.train_mse > 0.0);
  }
  CHECK(ma[0].lr == config.lr_init);
  CHECK(ma[0].epoch == 1);
  CHECK(ma[0].improved);  // any finite loss beats the initial infinity

  REQUIRE(mb.size() == ma.size());
  for (std::size_t i = 0; i < ma.size(); ++i) {
    CHECK(ma[i].train_ce == mb[i].train_ce);
    CHECK(ma[i].train_mse == mb[i].train_mse);
    CHECK(ma[i].val_loss == mb[i].val_loss);
    CHECK(ma[i].lr == mb[i].lr);
  }
  CHECK(params_equal(a, b));
}

TEST_CASE("resuming from a checkpoint reproduces the uninterrupted run") {
  const SynthSpec spec = tiny_spec();
  const Corpus corpus = synth_generate(spec);

  ModelConfig mc = tiny_model(spec);
  mc.ctx = true;
  TrainConfig config = tiny_train();
  config.mode = TrainMode::kSelf;
  config.variants.ctx = true;
  config.variants.cln = true;

  // Three epochs in one go.
  Model straight(mc);
  std::vector<EpochMetrics> straight_metrics;
  {
    Trainer trainer(&straight, &corpus, config);
    trainer.initialize();
    for (int i = 0; i < 3; ++i) straight_metrics.push_back(trainer.run_epoch());
  }

  // Two epochs, a checkpoint round trip through disk, then one more.
  const std::string path = temp_path("sspk_resume_test.bin");
  {
    Model model(mc);
    Trainer trainer(&model, &corpus, config);
    trainer.initialize();
    trainer.run_epoch();
    trainer.run_epoch();
    Checkpoint ckpt = make_checkpoint(model, trainer.norm(), "{}");
    ckpt.has_trainer = true;
    ckpt.trainer = trainer.make_snapshot();
    write_checkpoint(ckpt, path);
  }
  Model resumed(mc);
  EpochMetrics third;
  {
    const Checkpoint ckpt = read_checkpoint(path);
    REQUIRE(ckpt.has_trainer);
    load_into_model(ckpt, &resumed, true);
    Trainer trainer(&resumed, &corpus, config);
    trainer.restore(ckpt.trainer);
    CHECK(trainer.epoch() == 2);
    third = trainer.run_epoch();
  }
  std::filesystem::remove(path);

  CHECK(third.epoch == straight_metrics[2].epoch);
  CHECK(third.train_ce == straight_metrics[2].train_ce);
  CHECK(third.train_mse == straight_metrics[2].train_mse);
  CHECK(third.val_loss == straight_metrics[2].val_loss);
  CHECK(params_equal(straight, resumed));
}

TEST_CASE("zero reconstruction weight reproduces the classifier-only run") {
  // On a fully labelled corpus, a joint run with alpha 0 must follow the
  // classifier-only trajectory bit for bit: the unlabelled batch half is
  // sampled from its own random stream and never touches the network.
  const SynthSpec spec = tiny_spec();
  const Corpus corpus = synth_generate(spec);

  auto run = [&](TrainMode mode, double alpha, std::vector<EpochMetrics>* out) {
    TrainConfig config = tiny_train();
    config.mode = mode;
    config.alpha = alpha;
    Model model(tiny_model(spec));
    Trainer trainer(&model, &corpus, config);
    trainer.initialize();
    for (int i = 0; i < 2; ++i) out->push_back(trainer.run_epoch());
    return model;
  };

  std::vector<EpochMetrics> spk_metrics, joint_metrics;
  const Model spk = run(TrainMode::kSpk, 0.7, &spk_metrics);  // weight forced to 0
  const Model joint = run(TrainMode::kSpkSelf, 0.0, &joint_metrics);

  CHECK(params_equal(spk, joint));
  REQUIRE(spk_metrics.size() == joint_metrics.size());
  for (std::size_t i = 0; i < spk_metrics.size(); ++i) {
    CHECK(spk_metrics[i].train_ce == joint_metrics[i].train_ce);
    CHECK(spk_metrics[i].train_mse == joint_metrics[i].train_mse);
    CHECK(spk_metrics[i].val_loss == joint_metrics[i].val_loss);
  }
}

TEST_CASE("cross entropy is computed over labelled segments only") {
  // Two labelled and two unlabelled segments: the supervised term gathers
  // the labelled rows, so the unlabelled content cannot move it. Inference
  // statistics make rows independent, giving a bitwise guarantee.
  ModelConfig mc;
  mc.feat_dim = 4;
  mc.phone_classes = 5;
  mc.n_speakers = 3;
  mc.tdnn_hidden = 6;
  mc.pool_hidden = 6;
  mc.embed_dim = 6;
  Model model(mc);
  model.init_params(3);

  auto frames = [&](uint64_t seed) {
    Tensor x({12, 4});
    Rng rng(seed);
    rng.fill_normal(x.span(), 0.0f, 1.0f);
    return x;
  };
  const std::vector<int64_t> lab_rows = {0, 1};
  const std::vector<int64_t> labels = {2, 0};

  auto ce_of = [&](const Tensor& unlabelled_a, const Tensor& unlabelled_b) {
    Tape tape;
    ParamVars pv(tape, model.params(), false);
    const std::vector<Var> segs = {
        tape.constant(frames(70)), tape.constant(frames(71)),
        tape.constant(unlabelled_a), tape.constant(unlabelled_b)};
    const Var rows = model.encode_segments_pooled(tape, pv, segs, Mode::kInfer);
    const Model::Heads heads = model.encode_tail(tape, pv, rows, Mode::kInfer);
    const Var feats =
        gather_rows(tape, heads.classifier_feats, std::vector<int64_t>(lab_rows));
    const Var ce = softmax_ce(tape, model.classifier_logits(tape, pv, feats), labels);
    return tape.val(ce)[0];
  };

  const double base = ce_of(frames(72), frames(73));
  const double swapped = ce_of(frames(90), frames(91));
  CHECK(base == swapped);
  CHECK(std::isfinite(base));
}

TEST_CASE("non-finite training losses raise numeric errors with context") {
  const SynthSpec spec = tiny_spec();
  const Corpus corpus = synth_generate(spec);
  TrainConfig config = tiny_train();
  config.mode = TrainMode::kSelf;

  // A poisoned batchnorm gain surfaces as the failing layer's activations.
  // (Weights ahead of a ReLU cannot carry the probe: NaN compares false,
  // so the activation clamps it to zero.)
  {
    Model model(tiny_model(spec));
    Trainer trainer(&model, &corpus, config);
    trainer.initialize();
    (*model.params().find("enc/tdnn1/bn/gamma"))[0] = std::nanf("");
    CHECK_THROWS_WITH_AS(trainer.run_epoch(),
                         doctest::Contains("enc/tdnn1"), NumericError);
  }

  // Finite activations whose squared error overflows surface through the
  // loss check, which names the epoch, the step, and the segments.
  {
    Model model(tiny_model(spec));
    Trainer trainer(&model, &corpus, config);
    trainer.initialize();
    Tensor& w = *model.params().find("dec/l5/w");
    for (int64_t i = 0; i < w.size(); ++i)
      w[i] = w[i] * 1e25f + (w[i] == 0.0f ? 1e25f : 0.0f);
    CHECK_THROWS_WITH_AS(trainer.run_epoch(),
                         doctest::Contains("non-finite loss"), NumericError);
  }
}
