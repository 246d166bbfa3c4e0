// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#include "glean/decoder.hpp"

#include <gtest/gtest.h>

#include "gradcheck.hpp"

namespace {

using glean::Decoder;
using glean::DecoderConfig;
using glean::Rng;
using glean::Tensor;

TEST(DecoderConfig, StageCountAndValidation) {
  DecoderConfig cfg;
  cfg.in_size = 16;
  cfg.out_size = 128;
  EXPECT_EQ(cfg.n_stages(), 3);
  EXPECT_EQ(cfg.block_of_res(4), 0);
  EXPECT_EQ(cfg.block_of_res(128), 5);
  EXPECT_NO_THROW(cfg.validate());

  cfg.out_size = 8;
  EXPECT_THROW(cfg.validate(), glean::contract_error);  // cannot shrink

  DecoderConfig col;
  col.in_size = col.out_size = 16;
  col.colorization = true;
  EXPECT_NO_THROW(col.validate());
  col.out_size = 32;
  EXPECT_THROW(col.validate(), glean::contract_error);
  col.out_size = 16;
  col.color_widths = {64, 64, 32, 3};
  EXPECT_THROW(col.validate(), glean::contract_error);
}

TEST(Decoder, DoublesResolutionPerStage) {
  DecoderConfig cfg;
  cfg.in_size = 16;
  cfg.out_size = 128;
  cfg.f0_channels = 8;
  cfg.width = 4;
  cfg.tap_channels = {0, 0, 5, 5, 5, 5};  // blocks 2..5 feed the decoder
  Rng rng(1);
  Decoder<float> dec(cfg, rng);

  Tensor<float> f0({16, 16, 8});
  std::vector<Tensor<float>> taps(6);
  for (int b = 2; b <= 5; ++b) {
    const int res = 4 << b;
    taps[size_t(b)] = Tensor<float>({res, res, 5});
  }
  Tensor<float> y = dec.forward(f0, taps, nullptr, nullptr);
  EXPECT_EQ(y.shape(), (std::vector<int>{128, 128, 3}));

  // Dry run propagates the same shape and counts work once per conv.
  glean::Meter m;
  m.dry_run = true;
  Tensor<float> y2 = dec.forward(f0, taps, nullptr, &m);
  EXPECT_EQ(y2.shape(), y.shape());
  EXPECT_GT(m.total_under("decoder"), 0u);
}

TEST(Decoder, MissingOrMismatchedTapThrows) {
  DecoderConfig cfg;
  cfg.in_size = 8;
  cfg.out_size = 16;
  cfg.f0_channels = 4;
  cfg.width = 4;
  cfg.tap_channels = {0, 3, 3};
  Rng rng(2);
  Decoder<float> dec(cfg, rng);
  Tensor<float> f0({8, 8, 4});

  std::vector<Tensor<float>> none(3);
  EXPECT_THROW(dec.forward(f0, none, nullptr, nullptr), glean::contract_error);

  std::vector<Tensor<float>> wrong(3);
  wrong[1] = Tensor<float>({8, 8, 2});  // expected 3 channels
  wrong[2] = Tensor<float>({16, 16, 3});
  EXPECT_THROW(dec.forward(f0, wrong, nullptr, nullptr), glean::contract_error);
}

TEST(Decoder, ZeroTapChannelsRunStandalone) {
  // With every tap width zeroed the decoder is a plain upsampler and must not
  // touch the taps vector at all.
  DecoderConfig cfg;
  cfg.in_size = 8;
  cfg.out_size = 32;
  cfg.f0_channels = 4;
  cfg.width = 4;
  cfg.tap_channels = {};
  Rng rng(3);
  Decoder<float> dec(cfg, rng);
  Tensor<float> f0({8, 8, 4});
  Tensor<float> y = dec.forward(f0, {}, nullptr, nullptr);
  EXPECT_EQ(y.shape(), (std::vector<int>{32, 32, 3}));
}

TEST(Decoder, GradcheckSuperResolutionPath) {
  DecoderConfig cfg;
  cfg.in_size = 4;
  cfg.out_size = 8;
  cfg.f0_channels = 2;
  cfg.width = 3;
  cfg.tap_channels = {2, 2};
  Rng rng(4);
  Decoder<double> dec(cfg, rng);

  Tensor<double> f0 = gradcheck::randn({4, 4, 2}, 40, 0.5);
  std::vector<Tensor<double>> taps(2);
  taps[0] = gradcheck::randn({4, 4, 2}, 41, 0.5);
  taps[1] = gradcheck::randn({8, 8, 2}, 42, 0.5);

  Decoder<double>::Cache cache;
  Tensor<double> y = dec.forward(f0, taps, &cache, nullptr);
  ASSERT_EQ(y.shape(), (std::vector<int>{8, 8, 3}));
  gradcheck::Projection proj(y.shape());

  glean::ParamList<double> params;
  dec.collect("dec", params);
  for (auto& p : params) p.grad->set_zero();
  auto grads = dec.backward(cache, proj.w);

  auto loss = [&] { return proj(dec.forward(f0, taps, nullptr, nullptr)); };
  EXPECT_LT(gradcheck::max_rel_err(loss, f0, grads.gf0), 1e-4);
  ASSERT_EQ(grads.gtaps.size(), 2u);
  EXPECT_LT(gradcheck::max_rel_err(loss, taps[0], grads.gtaps[0]), 1e-4);
  EXPECT_LT(gradcheck::max_rel_err(loss, taps[1], grads.gtaps[1]), 1e-4);
  for (auto& p : params)
    EXPECT_LT(gradcheck::max_rel_err(loss, *p.value, *p.grad), 1e-4) << p.name;
}

TEST(Decoder, GradcheckColorizationPath) {
  DecoderConfig cfg;
  cfg.in_size = 8;
  cfg.out_size = 8;
  cfg.f0_channels = 3;
  cfg.colorization = true;
  cfg.color_widths = {4, 4, 3, 2};
  cfg.tap_channels = {0, 2};  // tap at the working resolution, block 1
  Rng rng(5);
  Decoder<double> dec(cfg, rng);

  Tensor<double> f0 = gradcheck::randn({8, 8, 3}, 50, 0.5);
  std::vector<Tensor<double>> taps(2);
  taps[1] = gradcheck::randn({8, 8, 2}, 51, 0.5);

  Decoder<double>::Cache cache;
  Tensor<double> y = dec.forward(f0, taps, &cache, nullptr);
  // Two output channels: predicted chroma at the input resolution.
  ASSERT_EQ(y.shape(), (std::vector<int>{8, 8, 2}));
  gradcheck::Projection proj(y.shape());

  glean::ParamList<double> params;
  dec.collect("dec", params);
  for (auto& p : params) p.grad->set_zero();
  auto grads = dec.backward(cache, proj.w);

  auto loss = [&] { return proj(dec.forward(f0, taps, nullptr, nullptr)); };
  EXPECT_LT(gradcheck::max_rel_err(loss, f0, grads.gf0), 1e-4);
  EXPECT_LT(gradcheck::max_rel_err(loss, taps[1], grads.gtaps[1]), 1e-4);
  for (auto& p : params)
    EXPECT_LT(gradcheck::max_rel_err(loss, *p.value, *p.grad), 1e-4) << p.name;
}

}  // namespace
