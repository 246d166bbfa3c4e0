// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#include "glean/ablation.hpp"

#include <iomanip>
#include <iostream>
#include <sstream>

#include "glean/evalharness.hpp"

namespace glean {

std::string AblationReport::table() const {
  std::ostringstream os;
  os << "== encoder-feature ablation ==\n";
  os << std::left << std::setw(16) << "enc_feats_upto" << std::right
     << std::setw(10) << "psnr(db)" << std::setw(10) << "cosine" << "\n";
  os << std::fixed << std::setprecision(4);
  for (const auto& l : levels) {
    std::string label = l.enc_feats_upto == -1 ? "none" : std::to_string(l.enc_feats_upto);
    os << std::left << std::setw(16) << label << std::right << std::setw(10)
       << l.psnr << std::setw(10) << l.cosine << "\n";
  }
  return os.str();
}

AblationReport run_ablation(const ModelConfig& base, const TrainConfig& tcfg,
                            const Dataset& train_data, const Dataset& val_data,
                            PairMode mode, const Checkpoint* bank_ckpt,
                            size_t eval_limit) {
  GLEAN_REQUIRE(base.variant == Variant::kGlean,
                " the fusion sweep is defined for the GLEAN routing");
  AblationReport report;
  for (int level = -1; level <= base.n_levels(); ++level) {
    ModelConfig cfg = base;
    cfg.enc_feats_upto = level;
    cfg.alpha_gen = 0.0;
    Model<float> model(cfg);
    if (bank_ckpt) {
      const size_t copied = load_subtree(*bank_ckpt, model.params(), "bank");
      GLEAN_REQUIRE(copied > 0, " bank checkpoint donated no arrays");
      model.freeze_bank();
    }
    GanTrainer<float> trainer(&model, tcfg);
    PairSampler sampler(&train_data, mode, cfg.in_size, tcfg.seed);
    for (int t = 0; t < tcfg.total_iters; ++t) {
      const LossBreakdown lb = trainer.train_step(sampler.batch(t, tcfg.batch_size));
      if (t % 50 == 0)
        std::cerr << "ablation[" << level << "] iter " << t << " mse " << lb.mse
                  << "\n";
    }
    PairSampler vsampler(&val_data, mode, cfg.in_size, tcfg.seed);
    const EvalSummary s = eval_model(model, vsampler, eval_limit);
    report.levels.push_back({level, s.mean_psnr(), s.mean_cosine()});
    std::cerr << "ablation[" << level << "] psnr " << s.mean_psnr() << "\n";
  }
  return report;
}

}  // namespace glean
