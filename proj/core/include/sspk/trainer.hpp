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

#ifndef SSPK_TRAINER_HPP_
#define SSPK_TRAINER_HPP_

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sspk/adam.hpp"
#include "sspk/checkpoint.hpp"
#include "sspk/corpus.hpp"
#include "sspk/model.hpp"
#include "sspk/rng.hpp"
#include "sspk/sampler.hpp"

namespace sspk {

// Spk trains the classifier head alone, Self the reconstruction path alone,
// SpkSelf both on semi-supervised batches.
enum class TrainMode { kSpk, kSelf, kSpkSelf };

struct TrainConfig {
  TrainMode mode = TrainMode::kSelf;
  VariantFlags variants;
  double alpha = 1.0;  // reconstruction weight; forced to 0 in Spk mode
  double lr_init = 1e-2;
  int64_t patience_epochs = 32;
  int64_t minibatches_per_epoch = 400;
  int64_t batch_segments = 150;  // per delta class
  int64_t max_epochs = 10;
  int64_t max_halvings = 7;  // stop once lr drops below lr_init * 2^-7
  double val_fraction = 0.02;
  int64_t val_pairs = 60;
  uint64_t seed = 1;
};

void validate_train_config(const TrainConfig& config);

struct EpochMetrics {
  int64_t epoch = 0;
  double lr = 0.0;
  double train_ce = 0.0;
  double train_mse = 0.0;
  double val_loss = 0.0;
  bool improved = false;
};

// Learning-rate schedule: halve after `patience` consecutive validations
// without strict improvement, then restart the count.
struct ScheduleState {
  double lr = 0.0;
  double best = std::numeric_limits<double>::infinity();
  int64_t since_improvement = 0;
  int64_t halvings = 0;
};

// Returns true when val_loss strictly improved on the best seen.
bool schedule_update(ScheduleState* state, double val_loss, int64_t patience);

// Combined training objective: the (already labelled-row-averaged) cross
// entropy term plus alpha times the mean of the per-segment reconstruction
// errors. Pass an invalid ce Var when the batch carries no supervised term.
Var joint_loss(Tape& tape, Var ce, std::span<const Var> mse_terms, double alpha);

// Owns the optimization loop: batch composition, loss assembly, optimizer
// steps, validation, and the learning-rate schedule. The labelled and
// unlabelled batch halves consume independent random streams, so a run that
// never draws unlabelled segments is unaffected by their stream existing.
class Trainer {
 public:
  Trainer(Model* model, const Corpus* corpus, const TrainConfig& config);

  void initialize();                          // fresh run
  void restore(const TrainerSnapshot& snap);  // model must be loaded already

  EpochMetrics run_epoch();
  bool should_stop() const;

  const NormStats& norm() const { return norm_; }
  int64_t epoch() const { return epoch_; }
  double lr() const { return sched_.lr; }
  TrainerSnapshot make_snapshot() const;

 private:
  struct StepOutcome {
    double ce = 0.0;
    double mse = 0.0;
  };
  StepOutcome train_step(const TrainingBatch& batch, int64_t step_index);
  double validate();
  void prepare();

  Model* model_;
  const Corpus* corpus_;
  TrainConfig config_;
  double effective_alpha_ = 0.0;
  BatchMode batch_mode_ = BatchMode::kUnsupervised;

  NormStats norm_;
  SamplePools pools_;
  std::vector<SegmentPair> val_pairs_;
  Adam adam_;
  Rng rng_lab_{0};
  Rng rng_unl_{0};
  ScheduleState sched_;
  int64_t epoch_ = 0;
};

}  // namespace sspk

#endif  // SSPK_TRAINER_HPP_
