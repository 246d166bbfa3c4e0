// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "glean/dataset.hpp"
#include "glean/discriminator.hpp"
#include "glean/model.hpp"
#include "glean/objectives.hpp"

namespace glean {

// Cosine annealing from lr0 down to lr_min across `total` steps.
inline double cosine_lr(int64_t t, int64_t total, double lr0, double lr_min) {
  GLEAN_REQUIRE(total > 0, " schedule needs total > 0");
  GLEAN_REQUIRE(t >= 0 && t <= total, " schedule step ", t, " outside [0,", total, "]");
  GLEAN_REQUIRE(lr0 >= lr_min && lr_min >= 0.0, " need lr0 >= lr_min >= 0");
  const double c = std::cos(3.14159265358979323846 * static_cast<double>(t) /
                            static_cast<double>(total));
  return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + c);
}

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam over a parameter registry. State exists for every registered tensor;
// frozen entries are skipped at step time, so freezing mid-run is safe.
template <class T>
class Adam {
 public:
  Adam() = default;
  Adam(ParamList<T> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (auto& p : params_) {
      m_.emplace_back(p.value->shape());
      v_.emplace_back(p.value->shape());
    }
  }

  void step(double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
      if (!*params_[i].trainable) continue;
      Tensor<T>& w = *params_[i].value;
      Tensor<T>& g = *params_[i].grad;
      Tensor<T>& m = m_[i];
      Tensor<T>& v = v_[i];
      for (size_t j = 0; j < w.numel(); ++j) {
        const double gj = static_cast<double>(g[j]);
        const double mj = cfg_.beta1 * static_cast<double>(m[j]) + (1.0 - cfg_.beta1) * gj;
        const double vj = cfg_.beta2 * static_cast<double>(v[j]) + (1.0 - cfg_.beta2) * gj * gj;
        m[j] = static_cast<T>(mj);
        v[j] = static_cast<T>(vj);
        w[j] -= static_cast<T>(lr * (mj / bc1) / (std::sqrt(vj / bc2) + cfg_.eps));
      }
    }
  }

  int64_t t() const { return t_; }
  void set_t(int64_t t) { t_ = t; }
  const ParamList<T>& params() const { return params_; }
  std::vector<Tensor<T>>& m_state() { return m_; }
  std::vector<Tensor<T>>& v_state() { return v_; }

 private:
  ParamList<T> params_;
  AdamConfig cfg_;
  std::vector<Tensor<T>> m_, v_;
  int64_t t_ = 0;
};

struct TrainConfig {
  int total_iters = 5000;
  int batch_size = 8;
  double lr0 = 1e-4;
  double lr_min = 1e-7;
  AdamConfig adam_g{0.9, 0.999, 1e-8};
  AdamConfig adam_d{0.0, 0.999, 1e-8};  // beta1 = 0 for the discriminator
  uint64_t seed = 0;
  uint64_t embedder_seed = 9157;
  int disc_base_channels = 8;
  int disc_max_channels = 64;

  void validate() const {
    GLEAN_REQUIRE(total_iters > 0 && batch_size > 0, " bad training budget");
    GLEAN_REQUIRE(lr0 >= lr_min && lr_min > 0.0, " bad learning-rate range");
  }
};

// Alternating GAN trainer: per iteration, one discriminator update on
// (generated-detached, real), then one generator update against the updated
// discriminator with L_mse + alpha_p L_percep + alpha_g L_gen.
template <class T>
class GanTrainer {
 public:
  GanTrainer(Model<T>* model, const TrainConfig& cfg)
      : model_(model), cfg_(cfg), rng_(mix_seed(cfg.seed, 0x7261696e, 1)) {
    cfg_.validate();
    DiscriminatorConfig dc;
    dc.in_size = model->config().out_size;
    dc.in_channels = 3;
    dc.base_channels = cfg.disc_base_channels;
    dc.max_channels = cfg.disc_max_channels;
    Rng drng(mix_seed(cfg.seed, 0x64697363, 2));
    disc_ = Discriminator<T>(dc, drng);
    disc_.collect("disc", dparams_);
    embed_ = FixedConvEmbedder<T>(3, 8, cfg.embedder_seed);
    adam_g_ = Adam<T>(model->params(), cfg.adam_g);
    adam_d_ = Adam<T>(dparams_, cfg.adam_d);
  }

  LossBreakdown train_step(const std::vector<TrainPair<T>>& batch) {
    GLEAN_REQUIRE(!batch.empty(), " empty batch");
    GLEAN_REQUIRE(step_ < cfg_.total_iters, " trainer already finished its schedule");
    const double lr = cosine_lr(step_, cfg_.total_iters, cfg_.lr0, cfg_.lr_min);
    const double ap = model_->config().alpha_percep;
    const double ag = model_->config().alpha_gen;
    const size_t B = batch.size();
    const double invB = 1.0 / static_cast<double>(B);

    std::vector<typename Model<T>::Trace> traces(B);
    std::vector<Tensor<T>> yhat(B);
    for (size_t i = 0; i < B; ++i)
      yhat[i] = model_->forward(batch[i].input, &traces[i]);

    // Discriminator step (fakes detached: only logit gradients flow into D).
    // With alpha_gen == 0 the run is purely supervised and D stays untouched.
    double dsum = 0.0;
    if (ag != 0.0) {
      for (auto& p : dparams_) p.grad->set_zero();
      for (size_t i = 0; i < B; ++i) {
        typename Discriminator<T>::Cache cf, cr;
        const double zf = disc_.forward(yhat[i], &cf)[0];
        const double zr = disc_.forward(batch[i].target, &cr)[0];
        const DiscLoss dl = disc_adversarial(zf, zr);
        dsum += dl.value;
        Tensor<T> gz({1});
        gz[0] = static_cast<T>(dl.dz_fake * invB);
        disc_.backward(cf, gz);
        gz[0] = static_cast<T>(dl.dz_real * invB);
        disc_.backward(cr, gz);
      }
      adam_d_.step(lr);
    }

    // Generator step against the updated discriminator.
    model_->zero_grads();
    double mse_sum = 0.0, percep_sum = 0.0, gen_sum = 0.0;
    for (size_t i = 0; i < B; ++i) {
      Tensor<T> gy = mse_loss_grad(yhat[i], batch[i].target, invB);
      mse_sum += mse_loss(yhat[i], batch[i].target);

      if (ap != 0.0) {
        auto ecache = embed_.make_cache();
        const Tensor<T> fh = embed_.forward(yhat[i], ecache.get());
        const Tensor<T> fr = embed_.forward(batch[i].target, nullptr);
        percep_sum += perceptual_loss(fh, fr);
        const Tensor<T> gfeat = mse_loss_grad(fh, fr, ap * invB);
        gy += embed_.backward_input(*ecache, gfeat);
      }

      if (ag != 0.0) {
        typename Discriminator<T>::Cache cg;
        const double z = disc_.forward(yhat[i], &cg)[0];
        const auto [val, dz] = gen_adversarial(z, model_->config().non_saturating_gen);
        gen_sum += val;
        Tensor<T> gzt({1});
        gzt[0] = static_cast<T>(dz * ag * invB);
        // This pass also dirties D's gradient accumulators; they are zeroed
        // at the top of the next discriminator step.
        gy += disc_.backward(cg, gzt);
      }

      model_->backward(traces[i], gy);
    }
    adam_g_.step(lr);
    ++step_;

    LossBreakdown b = LossBreakdown::combine(mse_sum * invB, percep_sum * invB,
                                             gen_sum * invB, ap, ag);
    b.disc = dsum * invB;
    GLEAN_REQUIRE(std::isfinite(b.total) && std::isfinite(b.disc),
                  " non-finite loss at step ", step_, " (mse=", b.mse, " percep=",
                  b.percep, " gen=", b.gen, " disc=", b.disc, ")");
    return b;
  }

  int64_t step() const { return step_; }
  void set_step(int64_t s) { step_ = s; }
  double lr_now() const {
    return cosine_lr(step_, cfg_.total_iters, cfg_.lr0, cfg_.lr_min);
  }
  const TrainConfig& config() const { return cfg_; }
  Model<T>& model() { return *model_; }
  Discriminator<T>& discriminator() { return disc_; }
  ParamList<T>& disc_params() { return dparams_; }
  Adam<T>& adam_g() { return adam_g_; }
  Adam<T>& adam_d() { return adam_d_; }
  Rng& rng() { return rng_; }
  const FixedConvEmbedder<T>& embedder() const { return embed_; }

 private:
  Model<T>* model_;
  TrainConfig cfg_;
  Rng rng_;
  Discriminator<T> disc_;
  ParamList<T> dparams_;
  FixedConvEmbedder<T> embed_;
  Adam<T> adam_g_, adam_d_;
  int64_t step_ = 0;
};

// Adversarial pretraining of a standalone bank (the "pre-trained GAN" the
// SR model later freezes). Styles are a single N(0,1) latent replicated to
// all k rows. Uses the non-saturating generator loss: the saturating form
// barely moves a cold generator.
template <class T>
class BankPretrainer {
 public:
  BankPretrainer(LatentBank<T>* bank, const TrainConfig& cfg)
      : bank_(bank), cfg_(cfg), rng_(mix_seed(cfg.seed, 0x70726574, 3)) {
    cfg_.validate();
    DiscriminatorConfig dc;
    dc.in_size = bank->config().out_size;
    dc.base_channels = cfg.disc_base_channels;
    dc.max_channels = cfg.disc_max_channels;
    Rng drng(mix_seed(cfg.seed, 0x64697363, 4));
    disc_ = Discriminator<T>(dc, drng);
    disc_.collect("disc", dparams_);
    bank_->collect("bank", gparams_);
    adam_g_ = Adam<T>(gparams_, cfg.adam_g);
    adam_d_ = Adam<T>(dparams_, cfg.adam_d);
  }

  Tensor<T> sample(Rng& rng) const {
    const BankConfig& bc = bank_->config();
    Tensor<T> lat({bc.k(), bc.d_latent});
    for (int j = 0; j < bc.d_latent; ++j) {
      const T z = static_cast<T>(rng.normal());
      for (int i = 0; i < bc.k(); ++i) lat(i, j) = z;
    }
    return lat;
  }

  // One D step then one G step on a batch of real out_size images.
  double train_step(const std::vector<Tensor<T>>& real) {
    GLEAN_REQUIRE(!real.empty(), " empty pretraining batch");
    const double lr = cosine_lr(std::min<int64_t>(step_, cfg_.total_iters),
                                cfg_.total_iters, cfg_.lr0, cfg_.lr_min);
    const size_t B = real.size();
    const double invB = 1.0 / static_cast<double>(B);

    std::vector<Tensor<T>> lat(B), fake(B);
    std::vector<typename LatentBank<T>::Cache> caches(B);
    std::vector<typename Conv2d<T>::Cache> rgbc(B);
    for (size_t i = 0; i < B; ++i) {
      lat[i] = sample(rng_);
      BankOut<T> out = bank_->forward({}, lat[i], &caches[i], nullptr);
      fake[i] = bank_->rgb(out.taps.back(), &rgbc[i]);
    }

    for (auto& p : dparams_) p.grad->set_zero();
    double dsum = 0.0;
    for (size_t i = 0; i < B; ++i) {
      typename Discriminator<T>::Cache cf, cr;
      const double zf = disc_.forward(fake[i], &cf)[0];
      const double zr = disc_.forward(real[i], &cr)[0];
      const DiscLoss dl = disc_adversarial(zf, zr);
      dsum += dl.value;
      Tensor<T> gz({1});
      gz[0] = static_cast<T>(dl.dz_fake * invB);
      disc_.backward(cf, gz);
      gz[0] = static_cast<T>(dl.dz_real * invB);
      disc_.backward(cr, gz);
    }
    adam_d_.step(lr);

    for (auto& p : gparams_) p.grad->set_zero();
    for (size_t i = 0; i < B; ++i) {
      typename Discriminator<T>::Cache cg;
      const double z = disc_.forward(fake[i], &cg)[0];
      const auto [val, dz] = gen_adversarial(z, /*non_saturating=*/true);
      (void)val;
      Tensor<T> gzt({1});
      gzt[0] = static_cast<T>(dz * invB);
      Tensor<T> gimg = disc_.backward(cg, gzt);
      Tensor<T> gtap = bank_->rgb_backward(rgbc[i], gimg);
      std::vector<Tensor<T>> gtaps(static_cast<size_t>(bank_->config().k()));
      gtaps.back() = std::move(gtap);
      bank_->backward(caches[i], std::move(gtaps), 0, nullptr);
    }
    adam_g_.step(lr);
    ++step_;
    GLEAN_REQUIRE(std::isfinite(dsum), " non-finite pretraining loss");
    return dsum * invB;
  }

  int64_t step() const { return step_; }
  Rng& rng() { return rng_; }

 private:
  LatentBank<T>* bank_;
  TrainConfig cfg_;
  Rng rng_;
  Discriminator<T> disc_;
  ParamList<T> dparams_, gparams_;
  Adam<T> adam_g_, adam_d_;
  int64_t step_ = 0;
};

}  // namespace glean
