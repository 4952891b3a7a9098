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
//
// The five pipeline stages behind the command-line subcommands. Each stage
// reads and writes files only; failures surface as the library's error
// types, which the entry point maps onto exit codes.

#ifndef SSPK_TOOLS_COMMANDS_HPP_
#define SSPK_TOOLS_COMMANDS_HPP_

#include <string>

#include "experiment_config.hpp"
#include "sspk/sampler.hpp"
#include "sspk/trainer.hpp"

namespace sspk {
namespace tools {

// Generates the corpus described by the config, writes the archive to
// `out_path` and a text manifest beside it, and prints a one-line summary.
void cmd_synth(const ExperimentConfig& config, const std::string& out_path);

// Runs the trainer over the archive at `corpus_path`. `out_dir` receives
// the verbatim config echo, an append-only metric log, the latest and best
// full checkpoints, and an encoder-only checkpoint for deployment. A
// non-empty `resume_path` continues the run stored in that checkpoint.
void cmd_train(const ExperimentConfig& config, TrainMode mode,
               const VariantFlags& variants, const std::string& corpus_path,
               const std::string& out_dir, const std::string& resume_path);

// Extracts one whole-utterance embedding per record into a table at
// `out_path`. Needs only the encoder subset of the checkpoint.
void cmd_extract(const std::string& checkpoint_path,
                 const std::string& corpus_path, const std::string& out_path);

// Fits the backend on the labelled rows of the table at `train_path`,
// scores every trial against embeddings from `embeddings_path`, and writes
// a score file. A non-empty `backend_out` persists the fitted backend.
void cmd_score(const ExperimentConfig& config,
               const std::string& embeddings_path,
               const std::string& train_path, const std::string& trials_path,
               const std::string& out_path, const std::string& backend_out);

// Joins a score file against a keyed trial list and prints
// "EER=<x>% minDCF=<y>".
void cmd_eval(const ExperimentConfig& config, const std::string& scores_path,
              const std::string& trials_path);

}  // namespace tools
}  // namespace sspk

#endif  // SSPK_TOOLS_COMMANDS_HPP_
