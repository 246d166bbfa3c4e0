// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "glean/ablation.hpp"
#include "glean/checkpoint.hpp"
#include "glean/dataset.hpp"
#include "glean/evalharness.hpp"
#include "glean/model.hpp"
#include "glean/trainer.hpp"

namespace glean {

struct DataSpec {
  std::string train_dir;  // empty: synthesize a procedural corpus
  std::string val_dir;    // empty: synthesize (disjoint seed)
  int synth_count = 500;
  int synth_val_count = 32;
  uint64_t synth_seed = 77;
};

struct PretrainSpec {
  int iters = 300;    // adversarial bank pretraining budget; 0 = skip
  std::string load;   // bank checkpoint path; overrides iters
};

struct ExperimentSpec {
  ModelConfig model;
  TrainConfig train;
  PairMode pair_mode = PairMode::kBicubic;
  DataSpec data;
  PretrainSpec pretrain;
  std::string out_dir = "run";
  int checkpoint_every = 0;  // periodic checkpoints; the final one always saves
  int log_every = 50;
  size_t eval_limit = 0;     // 0: the whole validation corpus

  void validate() const;
};

// JSON round-trip. Unknown keys are rejected so config typos cannot silently
// change an experiment. spec_to_json is the canonical config echo stored in
// checkpoints (resume compares it).
ExperimentSpec spec_from_json(const std::string& text);
std::string spec_to_json(const ExperimentSpec& s);
ExperimentSpec load_spec_file(const std::string& path);

// GLEAN_SEED, when set, overrides both train.seed and model.init_seed.
void apply_env_seed(ExperimentSpec* s);

Dataset prepare_train_data(const ExperimentSpec& s);
Dataset prepare_val_data(const ExperimentSpec& s);

struct TrainOutcome {
  std::vector<LossBreakdown> trace;
  std::string checkpoint_path;
  std::string bank_checkpoint_path;
  double val_psnr = 0.0;
  double val_cosine = 0.0;
  double baseline_psnr = 0.0;
};

// Full pipeline: corpus, bank pretraining (or load), freeze, GAN training,
// checkpoints, loss trace, held-out evaluation against the bicubic baseline.
TrainOutcome run_training(const ExperimentSpec& spec, const std::string& resume = "");

// Rebuilds the model a checkpoint was trained with (from its config echo).
ExperimentSpec spec_from_checkpoint(const Checkpoint& ck);
Model<float> model_from_checkpoint(const Checkpoint& ck);

EvalSummary run_eval(const std::string& ckpt_path, const std::string& val_dir,
                     size_t limit = 0);

// Restores a model and super-resolves (or colorizes) every image in in_dir,
// writing PNGs under out_dir. `want` restricts the checkpoint's task.
void run_infer(const std::string& ckpt_path, const std::string& in_dir,
               const std::string& out_dir, Task want);

AblationReport run_ablation_spec(const ExperimentSpec& spec);

}  // namespace glean
