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
// Command-line entry point. Exit codes: 0 success, 1 usage or configuration
// error, 2 data error, 3 numeric failure.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "experiment_config.hpp"
#include "sspk/error.hpp"
#include "sspk/sampler.hpp"
#include "sspk/trainer.hpp"

namespace {

sspk::TrainMode parse_mode(const std::string& name) {
  if (name == "spk") return sspk::TrainMode::kSpk;
  if (name == "self") return sspk::TrainMode::kSelf;
  if (name == "spk+self") return sspk::TrainMode::kSpkSelf;
  throw sspk::ConfigError("unknown mode " + name);
}

sspk::VariantFlags parse_variants(const std::vector<std::string>& names) {
  sspk::VariantFlags flags;
  for (const std::string& name : names) {
    if (name == "cln")
      flags.cln = true;
    else if (name == "ctx")
      flags.ctx = true;
    else if (name == "same")
      flags.same = true;
    else
      throw sspk::ConfigError("unknown variant " + name);
  }
  return flags;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phone-conditioned speaker embedding pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  uint64_t seed = 0;
  std::string mode_name = "self";
  std::vector<std::string> variant_names;
  std::string out_path;
  std::string corpus_path;
  std::string checkpoint_path;
  std::string resume_path;
  std::string embeddings_path;
  std::string train_embeddings_path;
  std::string trials_path;
  std::string scores_path;
  std::string backend_out;

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  synth->add_option("--config", config_path, "experiment configuration file");
  CLI::Option* synth_seed =
      synth->add_option("--seed", seed, "override the configured seed");
  synth->add_option("--out", out_path, "archive path to write")->required();

  CLI::App* train = app.add_subcommand("train", "train a model on an archive");
  train->add_option("--config", config_path, "experiment configuration file");
  CLI::Option* train_seed =
      train->add_option("--seed", seed, "override the configured seed");
  train->add_option("--mode", mode_name, "training objective")
      ->check(CLI::IsMember({"spk", "self", "spk+self"}));
  train
      ->add_option("--variant", variant_names,
                   "pipeline variant, may repeat: cln, ctx, same")
      ->check(CLI::IsMember({"cln", "ctx", "same"}));
  train->add_option("--corpus", corpus_path, "corpus archive")->required();
  train->add_option("--out", out_path, "run directory for artifacts")
      ->required();
  train->add_option("--resume", resume_path,
                    "continue from this full checkpoint");

  CLI::App* extract =
      app.add_subcommand("extract", "extract one embedding per utterance");
  extract->add_option("--checkpoint", checkpoint_path, "model checkpoint")
      ->required();
  extract->add_option("--corpus", corpus_path, "corpus archive")->required();
  extract->add_option("--out", out_path, "embedding table to write")
      ->required();

  CLI::App* score =
      app.add_subcommand("score", "fit a backend and score a trial list");
  score->add_option("--config", config_path, "experiment configuration file");
  score->add_option("--embeddings", embeddings_path, "trial embedding table")
      ->required();
  score->add_option(
      "--train-embeddings", train_embeddings_path,
      "labelled table the backend is fitted on (default: --embeddings)");
  score->add_option("--trials", trials_path, "trial list")->required();
  score->add_option("--out", out_path, "score file to write")->required();
  score->add_option("--backend-out", backend_out,
                    "also persist the fitted backend here");

  CLI::App* eval =
      app.add_subcommand("eval", "evaluate a score file against a key");
  eval->add_option("--config", config_path, "experiment configuration file");
  eval->add_option("--scores", scores_path, "score file")->required();
  eval->add_option("--trials", trials_path, "keyed trial list")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    (void)app.exit(e);
    return 1;
  }

  try {
    sspk::tools::ExperimentConfig config =
        config_path.empty() ? sspk::tools::default_experiment_config()
                            : sspk::tools::load_experiment_config(config_path);
    if (!synth_seed->empty() || !train_seed->empty()) config.seed = seed;

    if (synth->parsed()) {
      sspk::tools::cmd_synth(config, out_path);
    } else if (train->parsed()) {
      sspk::tools::cmd_train(config, parse_mode(mode_name),
                             parse_variants(variant_names), corpus_path,
                             out_path, resume_path);
    } else if (extract->parsed()) {
      sspk::tools::cmd_extract(checkpoint_path, corpus_path, out_path);
    } else if (score->parsed()) {
      sspk::tools::cmd_score(config, embeddings_path,
                             train_embeddings_path.empty()
                                 ? embeddings_path
                                 : train_embeddings_path,
                             trials_path, out_path, backend_out);
    } else if (eval->parsed()) {
      sspk::tools::cmd_eval(config, scores_path, trials_path);
    }
    return 0;
  } catch (const sspk::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const sspk::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const sspk::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
