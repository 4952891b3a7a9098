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

#include "sspk/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "sspk/error.hpp"
#include "sspk/ops.hpp"

namespace sspk {

void validate_train_config(const TrainConfig& config) {
  if (config.alpha < 0) throw ConfigError("train: alpha must be non-negative");
  if (config.mode == TrainMode::kSelf && config.alpha <= 0)
    throw ConfigError("train: Self mode needs alpha > 0");
  if (config.lr_init <= 0) throw ConfigError("train: lr_init must be positive");
  if (config.patience_epochs < 1)
    throw ConfigError("train: patience_epochs must be >= 1");
  if (config.minibatches_per_epoch < 1)
    throw ConfigError("train: minibatches_per_epoch must be >= 1");
  if (config.batch_segments < 2)
    throw ConfigError("train: batch_segments must be >= 2");
  if (config.max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
  if (config.max_halvings < 0)
    throw ConfigError("train: max_halvings must be >= 0");
  if (!(config.val_fraction > 0.0) || config.val_fraction > 0.5)
    throw ConfigError("train: val_fraction must be within (0, 0.5]");
  if (config.val_pairs < 1) throw ConfigError("train: val_pairs must be >= 1");
}

bool schedule_update(ScheduleState* state, double val_loss, int64_t patience) {
  if (!std::isfinite(val_loss))
    throw NumericError("schedule: non-finite validation loss");
  if (val_loss < state->best) {
    state->best = val_loss;
    state->since_improvement = 0;
    return true;
  }
  ++state->since_improvement;
  if (state->since_improvement >= patience) {
    state->lr *= 0.5;
    ++state->halvings;
    state->since_improvement = 0;
  }
  return false;
}

Var joint_loss(Tape& tape, Var ce, std::span<const Var> mse_terms, double alpha) {
  std::vector<Var> terms;
  std::vector<double> weights;
  if (ce.valid()) {
    terms.push_back(ce);
    weights.push_back(1.0);
  }
  if (alpha > 0 && !mse_terms.empty()) {
    const double w = alpha / static_cast<double>(mse_terms.size());
    for (Var m : mse_terms) {
      terms.push_back(m);
      weights.push_back(w);
    }
  }
  if (terms.empty())
    throw NumericError("joint loss has no terms (no supervision, alpha 0)");
  return weighted_sum(tape, terms, weights);
}

Trainer::Trainer(Model* model, const Corpus* corpus, const TrainConfig& config)
    : model_(model), corpus_(corpus), config_(config) {
  validate_train_config(config);
  effective_alpha_ = config.mode == TrainMode::kSpk ? 0.0 : config.alpha;
  switch (config.mode) {
    case TrainMode::kSpk:
      batch_mode_ = BatchMode::kSupervised;
      break;
    case TrainMode::kSelf:
      batch_mode_ = BatchMode::kUnsupervised;
      break;
    case TrainMode::kSpkSelf:
      batch_mode_ = BatchMode::kSemisupervised;
      break;
  }
  if (config.mode != TrainMode::kSelf && model_->config().n_speakers < 1)
    throw ConfigError("train: supervised modes need a classifier head");
}

void Trainer::prepare() {
  norm_ = compute_global_norm(*corpus_);

  const int64_t n = static_cast<int64_t>(corpus_->records.size());
  const int64_t n_val = std::max<int64_t>(
      1, static_cast<int64_t>(
             std::ceil(config_.val_fraction * static_cast<double>(n))));
  if (n_val >= n)
    throw DataError("corpus too small to hold out a validation split");

  std::vector<int64_t> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng(derive_seed(config_.seed, "val-split"));
  for (int64_t i = n - 1; i > 0; --i)
    std::swap(order[static_cast<size_t>(i)],
              order[static_cast<size_t>(split_rng.uniform_int(0, i))]);
  std::vector<int64_t> val_indices(order.begin(), order.begin() + n_val);

  pools_ = build_pools(*corpus_, val_indices);
  if (pools_.all.empty())
    throw DataError("no training utterances long enough to segment");
  if (config_.mode != TrainMode::kSelf && pools_.labelled.empty())
    throw DataError("supervised training needs labelled utterances");

  std::vector<int64_t> val_eligible;
  for (int64_t idx : val_indices)
    if (record_eligible(corpus_->records[static_cast<size_t>(idx)]))
      val_eligible.push_back(idx);
  if (val_eligible.empty())
    throw DataError("every validation utterance is too short to segment");

  val_pairs_.clear();
  Rng val_rng(derive_seed(config_.seed, "val-pairs"));
  for (int64_t i = 0; i < config_.val_pairs; ++i) {
    const UtteranceRecord& rec = corpus_->records[static_cast<size_t>(
        val_eligible[static_cast<size_t>(i) % val_eligible.size()])];
    val_pairs_.push_back(sample_pair(rec, config_.variants, val_rng));
  }
  if (config_.mode != TrainMode::kSelf) {
    bool any_labelled = false;
    for (const SegmentPair& p : val_pairs_) any_labelled |= p.supervised;
    if (!any_labelled)
      throw DataError(
          "validation split holds no labelled utterances; cannot track the "
          "supervised loss");
  }
}

void Trainer::initialize() {
  model_->init_params(config_.seed);
  prepare();

  std::vector<Tensor*> param_ptrs;
  for (Tensor& t : model_->params().tensors) param_ptrs.push_back(&t);
  adam_.init_like(param_ptrs);

  rng_lab_ = Rng(derive_seed(config_.seed, "batch/labelled"));
  rng_unl_ = Rng(derive_seed(config_.seed, "batch/unlabelled"));
  sched_ = ScheduleState{config_.lr_init};
  epoch_ = 0;
}

void Trainer::restore(const TrainerSnapshot& snap) {
  prepare();

  std::vector<Tensor*> param_ptrs;
  for (Tensor& t : model_->params().tensors) param_ptrs.push_back(&t);
  adam_.init_like(param_ptrs);
  if (snap.adam_m.size() != param_ptrs.size() ||
      snap.adam_v.size() != param_ptrs.size())
    throw DataError("snapshot optimizer moments do not match the model");
  adam_.moments_m() = snap.adam_m;
  adam_.moments_v() = snap.adam_v;
  adam_.set_steps(snap.adam_steps);

  bool got_lab = false, got_unl = false;
  for (const auto& [name, state] : snap.rng_states) {
    if (name == "batch/labelled") {
      rng_lab_.restore_state(state);
      got_lab = true;
    } else if (name == "batch/unlabelled") {
      rng_unl_.restore_state(state);
      got_unl = true;
    }
  }
  if (!got_lab || !got_unl)
    throw DataError("snapshot is missing sampler random streams");

  sched_.lr = snap.lr;
  sched_.best = snap.best_val;
  sched_.since_improvement = snap.epochs_since_improvement;
  sched_.halvings = snap.halvings;
  epoch_ = snap.epoch;
}

TrainerSnapshot Trainer::make_snapshot() const {
  TrainerSnapshot snap;
  snap.epoch = epoch_;
  snap.lr = sched_.lr;
  snap.best_val = sched_.best;
  snap.epochs_since_improvement = sched_.since_improvement;
  snap.halvings = sched_.halvings;
  snap.adam_steps = adam_.steps();
  snap.adam_m = adam_.moments_m();
  snap.adam_v = adam_.moments_v();
  snap.rng_states.emplace_back("batch/labelled", rng_lab_.state_string());
  snap.rng_states.emplace_back("batch/unlabelled", rng_unl_.state_string());
  return snap;
}

Trainer::StepOutcome Trainer::train_step(const TrainingBatch& batch,
                                         int64_t step_index) {
  Tape tape;
  ParamVars pv(tape, model_->params(), true);

  // With a zero reconstruction weight, unsupervised segments contribute no
  // loss term at all, so they are not run through the network either; this
  // keeps the trajectory identical to a classifier-only run.
  std::vector<const SegmentPair*> active;
  for (const SegmentPair& pair : batch.pairs) {
    if (config_.mode == TrainMode::kSpk && !pair.supervised)
      throw DataError("supervised-only batch contains an unlabelled segment");
    if (effective_alpha_ <= 0 && !pair.supervised) continue;
    active.push_back(&pair);
  }
  if (active.size() < 2)
    throw DataError("batch has fewer than 2 active segments");

  std::vector<Var> segments;
  segments.reserve(active.size());
  for (const SegmentPair* pair : active)
    segments.push_back(
        tape.constant(normalize_frames(pair->encode_frames, norm_)));
  Var rows = model_->encode_segments_pooled(tape, pv, segments, Mode::kTrain);
  Model::Heads heads = model_->encode_tail(tape, pv, rows, Mode::kTrain);

  Var ce{};
  if (config_.mode != TrainMode::kSelf) {
    std::vector<int64_t> lab_rows;
    std::vector<int64_t> labels;
    for (size_t i = 0; i < active.size(); ++i)
      if (active[i]->supervised) {
        lab_rows.push_back(static_cast<int64_t>(i));
        labels.push_back(active[i]->speaker);
      }
    Var feats = gather_rows(tape, heads.classifier_feats, std::move(lab_rows));
    Var logits = model_->classifier_logits(tape, pv, feats);
    ce = softmax_ce(tape, logits, labels);
  }

  std::vector<Var> mses;
  if (effective_alpha_ > 0) {
    mses.reserve(active.size());
    for (size_t i = 0; i < active.size(); ++i) {
      Var emb = take_row(tape, heads.embeddings, static_cast<int64_t>(i));
      Var predicted = model_->decode_segment(tape, pv, emb,
                                             active[i]->decode_phones,
                                             Mode::kTrain);
      mses.push_back(mse_frames(
          tape, predicted, normalize_frames(active[i]->decode_frames, norm_)));
    }
  }

  Var loss = joint_loss(tape, ce, mses, effective_alpha_);

  StepOutcome outcome;
  outcome.ce = ce.valid() ? tape.val(ce)[0] : 0.0;
  if (!mses.empty()) {
    double acc = 0.0;
    for (Var m : mses) acc += tape.val(m)[0];
    outcome.mse = acc / static_cast<double>(mses.size());
  }
  const double loss_value = tape.val(loss)[0];
  if (!std::isfinite(loss_value)) {
    std::string dump = "epoch " + std::to_string(epoch_) + " step " +
                       std::to_string(step_index) + ": non-finite loss (ce=" +
                       std::to_string(outcome.ce) + ", mse=" +
                       std::to_string(outcome.mse) + "); segments:";
    for (size_t i = 0; i < active.size() && i < 8; ++i)
      dump += " " + active[i]->source_id;
    if (active.size() > 8)
      dump += " (+" + std::to_string(active.size() - 8) + " more)";
    throw NumericError(dump);
  }

  tape.backward(loss);

  std::vector<Tensor*> param_ptrs;
  std::vector<const Tensor*> grads;
  Params& params = model_->params();
  param_ptrs.reserve(params.count());
  grads.reserve(params.count());
  for (size_t i = 0; i < params.count(); ++i) {
    param_ptrs.push_back(&params.tensors[i]);
    grads.push_back(pv.grad(i));
  }
  adam_.step(param_ptrs, grads, sched_.lr);
  return outcome;
}

double Trainer::validate() {
  Tape tape;
  ParamVars pv(tape, model_->params(), false);

  std::vector<const SegmentPair*> active;
  for (const SegmentPair& pair : val_pairs_) {
    if (effective_alpha_ <= 0 && !pair.supervised) continue;
    active.push_back(&pair);
  }
  if (active.empty()) throw DataError("validation set is empty");

  std::vector<Var> segments;
  segments.reserve(active.size());
  for (const SegmentPair* pair : active)
    segments.push_back(
        tape.constant(normalize_frames(pair->encode_frames, norm_)));
  Var rows = model_->encode_segments_pooled(tape, pv, segments, Mode::kInfer);
  Model::Heads heads = model_->encode_tail(tape, pv, rows, Mode::kInfer);

  Var ce{};
  if (config_.mode != TrainMode::kSelf) {
    std::vector<int64_t> lab_rows;
    std::vector<int64_t> labels;
    for (size_t i = 0; i < active.size(); ++i)
      if (active[i]->supervised) {
        lab_rows.push_back(static_cast<int64_t>(i));
        labels.push_back(active[i]->speaker);
      }
    Var feats = gather_rows(tape, heads.classifier_feats, std::move(lab_rows));
    Var logits = model_->classifier_logits(tape, pv, feats);
    ce = softmax_ce(tape, logits, labels);
  }

  std::vector<Var> mses;
  if (effective_alpha_ > 0) {
    mses.reserve(active.size());
    for (size_t i = 0; i < active.size(); ++i) {
      Var emb = take_row(tape, heads.embeddings, static_cast<int64_t>(i));
      Var predicted = model_->decode_segment(tape, pv, emb,
                                             active[i]->decode_phones,
                                             Mode::kInfer);
      mses.push_back(mse_frames(
          tape, predicted, normalize_frames(active[i]->decode_frames, norm_)));
    }
  }

  Var loss = joint_loss(tape, ce, mses, effective_alpha_);
  return tape.val(loss)[0];
}

EpochMetrics Trainer::run_epoch() {
  const double epoch_lr = sched_.lr;
  double ce_acc = 0.0, mse_acc = 0.0;
  for (int64_t step = 0; step < config_.minibatches_per_epoch; ++step) {
    TrainingBatch batch =
        compose_batch(*corpus_, pools_, batch_mode_, config_.variants,
                      config_.batch_segments, rng_lab_, rng_unl_);
    StepOutcome outcome = train_step(batch, step);
    ce_acc += outcome.ce;
    mse_acc += outcome.mse;
  }

  EpochMetrics metrics;
  metrics.lr = epoch_lr;
  metrics.train_ce = ce_acc / static_cast<double>(config_.minibatches_per_epoch);
  metrics.train_mse =
      mse_acc / static_cast<double>(config_.minibatches_per_epoch);
  metrics.val_loss = validate();
  metrics.improved =
      schedule_update(&sched_, metrics.val_loss, config_.patience_epochs);
  ++epoch_;
  metrics.epoch = epoch_;
  return metrics;
}

bool Trainer::should_stop() const {
  return epoch_ >= config_.max_epochs || sched_.halvings > config_.max_halvings;
}

}  // namespace sspk
