// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#include "glean/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "gradcheck.hpp"

namespace {

using glean::Model;
using glean::ModelConfig;
using glean::Task;
using glean::Tensor;
using glean::Variant;

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.in_size = 8;
  cfg.out_size = 16;
  cfg.enc_base_channels = 6;
  cfg.n_rrdb_blocks = 1;
  cfg.rrdb_growth = 3;
  cfg.d_latent = 4;
  cfg.head_channels = 4;
  cfg.enc_max_channels = 12;
  cfg.fmap_base = 32;
  cfg.fmap_min = 4;
  cfg.fmap_max = 8;
  cfg.dec_width = 4;
  cfg.init_seed = 99;
  return cfg;
}

TEST(ModelConfig, DerivedAndValidated) {
  ModelConfig cfg;
  cfg.in_size = 32;
  cfg.out_size = 256;
  EXPECT_EQ(cfg.n_levels(), 3);
  EXPECT_EQ(cfg.k_latents(), 7);
  EXPECT_EQ(cfg.i0(), 3);
  EXPECT_NO_THROW(cfg.validate());

  cfg.in_size = 24;
  EXPECT_THROW(cfg.validate(), glean::contract_error);
  cfg.in_size = 32;
  cfg.out_size = 16;
  EXPECT_THROW(cfg.validate(), glean::contract_error);
  cfg.out_size = 256;
  cfg.task = Task::kColorization;
  EXPECT_THROW(cfg.validate(), glean::contract_error);  // out != in
  cfg.task = Task::kSR;
  cfg.enc_feats_upto = 4;  // above N = 3
  EXPECT_THROW(cfg.validate(), glean::contract_error);
  cfg.enc_feats_upto = -2;
  cfg.alpha_gen = -0.1;
  EXPECT_THROW(cfg.validate(), glean::contract_error);
}

TEST(ModelConfig, DecoderTapScheduleSkipsSubInputResolutions) {
  ModelConfig cfg = tiny_config();  // in 8, out 16: k = 3
  auto dc = cfg.decoder_config();
  ASSERT_EQ(dc.tap_channels.size(), 3u);
  EXPECT_EQ(dc.tap_channels[0], 0);                      // res 4 below input
  EXPECT_EQ(dc.tap_channels[1], cfg.width_at_res(8));    // stage input
  EXPECT_EQ(dc.tap_channels[2], cfg.width_at_res(16));   // emission input

  cfg.bank_taps_upto = 1;
  dc = cfg.decoder_config();
  EXPECT_EQ(dc.tap_channels[2], 0);  // ablated away

  cfg.bank_taps_upto = -1;
  dc = cfg.decoder_config();
  for (int c : dc.tap_channels) EXPECT_EQ(c, 0);
}

TEST(Model, GleanForwardShapesAndTrace) {
  ModelConfig cfg = tiny_config();
  Model<float> model(cfg);
  Tensor<float> x = gradcheck::randn({8, 8, 3}, 1, 0.2).cast<float>();
  Model<float>::Trace tr;
  Tensor<float> y = model.forward(x, &tr);
  EXPECT_EQ(y.shape(), (std::vector<int>{16, 16, 3}));
  EXPECT_TRUE(tr.bank_ran);
  ASSERT_EQ(tr.bank_out.taps.size(), 3u);
  EXPECT_EQ(tr.bank_out.taps[0].dim(0), 4);
  EXPECT_EQ(tr.bank_out.taps[2].dim(0), 16);
  ASSERT_EQ(tr.enc_out.f.size(), 2u);  // f_0, f_1
  EXPECT_EQ(tr.enc_out.latents.shape(), (std::vector<int>{3, 4}));

  Tensor<float> bad({8, 8, 1});
  EXPECT_THROW(model.forward(bad, nullptr), glean::contract_error);
}

TEST(Model, LightForwardSkipsLowBlocks) {
  ModelConfig cfg = tiny_config();
  cfg.variant = Variant::kLight;
  Model<float> model(cfg);
  Tensor<float> x = gradcheck::randn({8, 8, 3}, 2, 0.2).cast<float>();
  Model<float>::Trace tr;
  glean::Meter m;
  Tensor<float> y = model.forward(x, &tr, &m);
  EXPECT_EQ(y.shape(), (std::vector<int>{16, 16, 3}));
  // i0 = 1: block 0 never runs.
  EXPECT_EQ(m.bank_blocks_invoked, (std::vector<int>{1, 2}));
  EXPECT_TRUE(tr.bank_out.taps[0].empty());

  // Only the trunk is built encoder-side; no latent head.
  EXPECT_TRUE(tr.enc_out.latents.empty());
  for (const auto& p : model.params())
    EXPECT_EQ(p.name.find("enc.head"), std::string::npos) << p.name;
}

TEST(Model, UpscaleFactorsProduceSquareOutputs) {
  for (int out : {16, 32, 64}) {
    ModelConfig cfg = tiny_config();
    cfg.out_size = out;
    Model<float> model(cfg);
    Tensor<float> x({8, 8, 3});
    Tensor<float> y = model.forward(x, nullptr);
    EXPECT_EQ(y.shape(), (std::vector<int>{out, out, 3}));
  }
}

TEST(Model, ColorizationPreservesLuminanceExactly) {
  ModelConfig cfg = tiny_config();
  cfg.task = Task::kColorization;
  cfg.out_size = cfg.in_size;
  cfg.color_widths = {4, 4, 3, 2};
  Model<float> model(cfg);
  Tensor<float> x({8, 8, 3});
  glean::Rng rng(3);
  for (size_t i = 0; i < x.numel(); ++i) x[i] = float(rng.uniform());
  Tensor<float> y = model.forward(x, nullptr);
  ASSERT_EQ(y.shape(), (std::vector<int>{8, 8, 3}));
  for (int yy = 0; yy < 8; ++yy)
    for (int xx = 0; xx < 8; ++xx)
      ASSERT_EQ(y(yy, xx, 0), x(yy, xx, 0));  // bit-exact pass-through
}

TEST(Model, InputGradcheckGlean) {
  ModelConfig cfg = tiny_config();
  Model<double> model(cfg);
  Tensor<double> x = gradcheck::randn({8, 8, 3}, 4, 0.3);
  Model<double>::Trace tr;
  Tensor<double> y = model.forward(x, &tr);
  gradcheck::Projection proj(y.shape());
  model.zero_grads();
  Tensor<double> gx = model.backward(tr, proj.w);
  auto loss = [&] { return proj(model.forward(x, nullptr)); };
  // The end-to-end analytic input gradient must track finite differences.
  EXPECT_LT(gradcheck::max_rel_err(loss, x, gx), 1e-3);
}

TEST(Model, InputGradcheckLight) {
  ModelConfig cfg = tiny_config();
  cfg.variant = Variant::kLight;
  Model<double> model(cfg);
  Tensor<double> x = gradcheck::randn({8, 8, 3}, 5, 0.3);
  Model<double>::Trace tr;
  Tensor<double> y = model.forward(x, &tr);
  gradcheck::Projection proj(y.shape());
  model.zero_grads();
  Tensor<double> gx = model.backward(tr, proj.w);
  auto loss = [&] { return proj(model.forward(x, nullptr)); };
  EXPECT_LT(gradcheck::max_rel_err(loss, x, gx), 1e-3);
}

TEST(Model, InputGradcheckColorization) {
  ModelConfig cfg = tiny_config();
  cfg.task = Task::kColorization;
  cfg.out_size = cfg.in_size;
  cfg.color_widths = {4, 4, 3, 2};
  Model<double> model(cfg);
  Tensor<double> x = gradcheck::randn({8, 8, 3}, 6, 0.2);
  for (size_t i = 0; i < x.numel(); ++i) x[i] += 0.5;  // keep Lab-ish range
  Model<double>::Trace tr;
  Tensor<double> y = model.forward(x, &tr);
  gradcheck::Projection proj(y.shape());
  model.zero_grads();
  Tensor<double> gx = model.backward(tr, proj.w);
  auto loss = [&] { return proj(model.forward(x, nullptr)); };
  EXPECT_LT(gradcheck::max_rel_err(loss, x, gx), 1e-3);
  // Chroma input channels are ignored by the network, so their gradient is
  // exactly zero (the input's ab never reaches the output).
  for (int yy = 0; yy < 8; ++yy)
    for (int xx = 0; xx < 8; ++xx) {
      ASSERT_EQ(gx(yy, xx, 1), 0.0);
      ASSERT_EQ(gx(yy, xx, 2), 0.0);
    }
}

TEST(Model, FreezeBankZeroesCoreGradients) {
  ModelConfig cfg = tiny_config();
  Model<double> model(cfg);
  auto frozen = model.freeze_bank();
  EXPECT_FALSE(frozen.empty());

  Tensor<double> x = gradcheck::randn({8, 8, 3}, 7, 0.3);
  Model<double>::Trace tr;
  Tensor<double> y = model.forward(x, &tr);
  model.zero_grads();
  model.backward(tr, gradcheck::randn(y.shape(), 8));

  for (const auto& p : model.params()) {
    double mag = 0.0;
    for (size_t i = 0; i < p.grad->numel(); ++i) mag += std::abs((*p.grad)[i]);
    const bool is_frozen =
        std::find(frozen.begin(), frozen.end(), p.name) != frozen.end();
    EXPECT_EQ(*p.trainable, !is_frozen) << p.name;
    if (is_frozen) {
      EXPECT_EQ(mag, 0.0) << p.name;
    } else if (p.name.rfind("enc.", 0) == 0 ||
               p.name.find(".fusion") != std::string::npos) {
      EXPECT_GT(mag, 0.0) << p.name;
    }
  }
}

TEST(Model, ComplexityPartitionsAreExhaustive) {
  ModelConfig cfg = tiny_config();
  Model<float> model(cfg);
  auto r = glean::complexity(model);
  EXPECT_EQ(r.params_total,
            r.params_encoder + r.params_generator + r.params_decoder);
  EXPECT_EQ(r.params_total, glean::param_count(model.params()));
  EXPECT_EQ(r.macs_total, r.macs_encoder + r.macs_generator + r.macs_decoder);
  EXPECT_GT(r.macs_fusion, 0u);
  EXPECT_LE(r.macs_fusion, r.macs_generator);
}

TEST(Model, FusionAblationRemovesMacsNotParams) {
  ModelConfig base = tiny_config();
  Model<float> with(base);
  ModelConfig off = base;
  off.enc_feats_upto = -1;
  Model<float> without(off);
  auto rw = glean::complexity(with);
  auto ro = glean::complexity(without);
  EXPECT_EQ(rw.params_total, ro.params_total);  // weights still exist
  EXPECT_EQ(ro.macs_fusion, 0u);
  EXPECT_LT(ro.macs_total, rw.macs_total);
}

TEST(Model, BanklessDecoderRunsWithoutBankMacs) {
  ModelConfig cfg = tiny_config();
  cfg.bank_taps_upto = -1;
  Model<float> model(cfg);
  glean::Meter m;
  Tensor<float> y = model.forward(Tensor<float>({8, 8, 3}), nullptr, &m);
  EXPECT_EQ(y.shape(), (std::vector<int>{16, 16, 3}));
  EXPECT_EQ(m.total_under("bank"), 0u);
  EXPECT_TRUE(m.bank_blocks_invoked.empty());
}

TEST(Model, BankOnlyOutputWhenDecoderDisabled) {
  ModelConfig cfg = tiny_config();
  cfg.use_decoder = false;
  Model<double> model(cfg);
  Tensor<double> x = gradcheck::randn({8, 8, 3}, 9, 0.3);
  Model<double>::Trace tr;
  Tensor<double> y = model.forward(x, &tr);
  EXPECT_EQ(y.shape(), (std::vector<int>{16, 16, 3}));
  glean::Meter m;
  model.forward(x, nullptr, &m);
  EXPECT_EQ(m.total_under("decoder"), 0u);

  // Gradient still reaches the input through toRGB and the bank.
  gradcheck::Projection proj(y.shape());
  model.zero_grads();
  Tensor<double> gx = model.backward(tr, proj.w);
  auto loss = [&] { return proj(model.forward(x, nullptr)); };
  EXPECT_LT(gradcheck::max_rel_err(loss, x, gx), 1e-3);
}

TEST(Model, InitSeedReproducesParams) {
  ModelConfig cfg = tiny_config();
  Model<float> a(cfg), b(cfg);
  ASSERT_EQ(a.params().size(), b.params().size());
  for (size_t i = 0; i < a.params().size(); ++i) {
    const auto& pa = *a.params()[i].value;
    const auto& pb = *b.params()[i].value;
    ASSERT_EQ(pa.shape(), pb.shape());
    for (size_t j = 0; j < pa.numel(); ++j) ASSERT_EQ(pa[j], pb[j]);
  }
  cfg.init_seed = 100;
  Model<float> c(cfg);
  bool differ = false;
  for (size_t j = 0; j < a.params()[0].value->numel(); ++j)
    differ |= (*a.params()[0].value)[j] != (*c.params()[0].value)[j];
  EXPECT_TRUE(differ);
}

}  // namespace
