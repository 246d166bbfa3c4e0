// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "glean/checkpoint.hpp"
#include "glean/model.hpp"
#include "glean/trainer.hpp"

namespace glean {

struct AblationLevel {
  int enc_feats_upto = -2;
  double psnr = 0.0;
  double cosine = 0.0;
};

struct AblationReport {
  std::vector<AblationLevel> levels;
  std::string table() const;
};

// Sweeps how much of the encoder pyramid the bank fuses: enc_feats_upto =
// -1 (latents only), 0, 1, ..., N (full pyramid). Every level starts from the
// same seed, loads the same pretrained bank (frozen), fine-tunes on the same
// deterministic pair stream, then reports corpus PSNR. `base.use_decoder` is
// honored; sweeping with the generator's own RGB head (use_decoder = false)
// isolates the fusion contribution from the decoder's skip path.
//
// Fine-tuning is supervised (alpha_gen forced to 0): adversarial noise at a
// small budget would swamp the fidelity ordering the sweep measures.
// PSNR comes from `val`; pass the training corpus itself for an in-sample
// sweep.
AblationReport run_ablation(const ModelConfig& base, const TrainConfig& tcfg,
                            const Dataset& train_data, const Dataset& val_data,
                            PairMode mode, const Checkpoint* bank_ckpt,
                            size_t eval_limit = 0);

}  // namespace glean
