// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "glean/bank.hpp"
#include "glean/decoder.hpp"
#include "glean/encoder.hpp"

namespace glean {

enum class Task { kSR, kColorization };
enum class Variant { kGlean, kLight };

// Everything needed to build an encoder-bank-decoder model. finalize()
// derives the pyramid depth N = log2(in/4), the latent count
// k = log2(out) - 1, and the LightGLEAN entry block i0 = log2(in) - 2.
struct ModelConfig {
  Task task = Task::kSR;
  Variant variant = Variant::kGlean;
  int in_size = 16;
  int out_size = 128;

  // Encoder.
  int enc_base_channels = 32;
  int n_rrdb_blocks = 4;
  int rrdb_growth = 8;
  int d_latent = 64;
  int head_channels = 64;
  int enc_max_channels = 256;

  // Bank feature-map schedule: width(res) = clamp(fmap_base/res, min, max).
  int fmap_base = 512;
  int fmap_min = 8;
  int fmap_max = 64;

  // Decoder.
  int dec_width = 12;
  std::vector<int> color_widths = {64, 64, 32, 2};

  // Objective weights (used by the trainer; carried here so a checkpoint's
  // config echo fully describes the experiment).
  double alpha_percep = 0.01;
  double alpha_gen = 0.01;
  bool non_saturating_gen = false;

  // Ablation toggles: -2 = everything, -1 = nothing, else highest index kept.
  bool use_decoder = true;
  int enc_feats_upto = -2;
  int bank_taps_upto = -2;

  uint64_t init_seed = 1234;

  int n_levels() const { return ilog2_exact(in_size) - 2; }
  int k_latents() const { return ilog2_exact(out_size) - 1; }
  int i0() const { return ilog2_exact(in_size) - 2; }
  int width_at_res(int res) const {
    return std::clamp(fmap_base / res, fmap_min, fmap_max);
  }

  void validate() const {
    GLEAN_REQUIRE(in_size >= 4 && (in_size & (in_size - 1)) == 0,
                  " in_size must be a power of two >= 4, got ", in_size);
    GLEAN_REQUIRE(out_size >= 8 && (out_size & (out_size - 1)) == 0,
                  " out_size must be a power of two >= 8, got ", out_size);
    GLEAN_REQUIRE(out_size >= in_size, " out_size must be >= in_size");
    if (task == Task::kColorization)
      GLEAN_REQUIRE(out_size == in_size, " colorization requires out_size == in_size");
    GLEAN_REQUIRE(enc_feats_upto >= -2 && enc_feats_upto <= n_levels(),
                  " enc_feats_upto out of range [-2, ", n_levels(), "]");
    GLEAN_REQUIRE(bank_taps_upto >= -2 && bank_taps_upto <= k_latents() - 1,
                  " bank_taps_upto out of range");
    GLEAN_REQUIRE(alpha_percep >= 0 && alpha_gen >= 0, " loss weights must be >= 0");
  }

  EncoderConfig encoder_config() const {
    EncoderConfig e;
    e.in_channels = task == Task::kColorization ? 1 : 3;
    e.in_size = in_size;
    e.base_channels = enc_base_channels;
    e.n_rrdb_blocks = n_rrdb_blocks;
    e.growth = rrdb_growth;
    e.n_levels = n_levels();
    e.d_latent = d_latent;
    e.k_latents = k_latents();
    e.head_channels = head_channels;
    e.max_channels = enc_max_channels;
    e.build_chain = variant == Variant::kGlean;
    return e;
  }

  BankConfig bank_config() const {
    BankConfig b;
    b.in_size = in_size;
    b.out_size = out_size;
    b.d_latent = d_latent;
    b.fmap_base = fmap_base;
    b.fmap_min = fmap_min;
    b.fmap_max = fmap_max;
    b.light = variant == Variant::kLight;
    b.n_levels = n_levels();
    b.enc_feats_upto = enc_feats_upto;
    const EncoderConfig e = encoder_config();
    b.enc_channels.clear();
    for (int i = 0; i <= n_levels(); ++i) b.enc_channels.push_back(e.channels_at(i));
    if (b.light) b.enc_channels = {enc_base_channels};
    return b;
  }

  DecoderConfig decoder_config() const {
    DecoderConfig d;
    d.in_size = in_size;
    d.out_size = out_size;
    d.f0_channels = enc_base_channels;
    d.width = dec_width;
    d.colorization = task == Task::kColorization;
    d.color_widths = color_widths;
    const int k = k_latents();
    const int first = variant == Variant::kLight ? i0() : 0;
    const int cap = bank_taps_upto == -2 ? k - 1 : bank_taps_upto;
    d.tap_channels.assign(static_cast<size_t>(k), 0);
    for (int i = first; i < k; ++i) {
      // The decoder only sees taps at its stage input resolutions
      // (in_size..out_size); with_tap keys the lookup by resolution.
      const int res = 4 << i;
      if (res < in_size || i > cap) continue;
      d.tap_channels[static_cast<size_t>(i)] = width_at_res(res);
    }
    return d;
  }
};

// A full super-resolution (or colorization) generator.
template <class T>
class Model {
 public:
  Model() = default;
  explicit Model(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(cfg.init_seed);
    encoder_ = Encoder<T>(cfg.encoder_config(), rng);
    bank_ = LatentBank<T>(cfg.bank_config(), rng);
    if (cfg.use_decoder) decoder_ = Decoder<T>(cfg.decoder_config(), rng);
    collect_params();
  }

  struct Trace {
    typename Encoder<T>::Cache enc;
    EncoderOut<T> enc_out;
    typename LatentBank<T>::Cache bank;
    BankOut<T> bank_out;
    typename Decoder<T>::Cache dec;
    typename Conv2d<T>::Cache torgb;
    Tensor<T> input;
    bool bank_ran = false;
  };

  // x: (in, in, 3) for SR; (in, in, 3) Lab-encoded for colorization (channel
  // 0 is the luminance the encoder consumes). Output is raw (linear): SR
  // emits RGB, colorization re-attaches the input L over the predicted ab.
  Tensor<T> forward(const Tensor<T>& x, Trace* trace, Meter* m = nullptr) const {
    GLEAN_REQUIRE(x.rank() == 3 && x.dim(0) == cfg_.in_size && x.dim(1) == cfg_.in_size,
                  " model expects ", cfg_.in_size, "x", cfg_.in_size, " input, got ",
                  x.shape_str());
    GLEAN_REQUIRE(x.dim(2) == 3, " model input must have 3 channels");
    Trace local;
    Trace& tr = trace ? *trace : local;
    tr.input = x;

    const Tensor<T> enc_in =
        cfg_.task == Task::kColorization ? slice_channels(x, 0, 1) : x;
    tr.enc_out = encoder_.forward(enc_in, trace ? &tr.enc : nullptr, m);

    std::vector<Tensor<T>> pyramid;
    if (cfg_.variant == Variant::kLight) {
      pyramid.push_back(tr.enc_out.f[0]);
    } else {
      pyramid = tr.enc_out.f;
    }

    tr.bank_ran = bank_feeds_anything();
    if (tr.bank_ran)
      tr.bank_out = bank_.forward(pyramid, tr.enc_out.latents,
                                  trace ? &tr.bank : nullptr, m);

    Tensor<T> raw;
    if (cfg_.use_decoder) {
      raw = decoder_.forward(tr.enc_out.f[0], tr.bank_out.taps,
                             trace ? &tr.dec : nullptr, m);
    } else {
      GLEAN_REQUIRE(tr.bank_ran, " bankless model needs the decoder");
      raw = bank_.rgb(tr.bank_out.taps.back(), trace ? &tr.torgb : nullptr, m);
    }

    if (cfg_.task == Task::kColorization) {
      Tensor<T> l = slice_channels(x, 0, 1);
      return concat_channels(l, raw);
    }
    return raw;
  }

  // gy matches the forward output. Accumulates parameter gradients and
  // returns the gradient w.r.t. the model input.
  Tensor<T> backward(Trace& tr, const Tensor<T>& gy) {
    Tensor<T> gout = gy;
    if (cfg_.task == Task::kColorization)
      gout = slice_channels(gy, 1, 2);  // the L channel is pass-through input

    const int k = cfg_.k_latents();
    std::vector<Tensor<T>> gtaps(static_cast<size_t>(k));
    Tensor<T> gf0_dec;
    if (cfg_.use_decoder) {
      auto dg = decoder_.backward(tr.dec, gout);
      gtaps = std::move(dg.gtaps);
      gtaps.resize(static_cast<size_t>(k));
      gf0_dec = std::move(dg.gf0);
    } else {
      gtaps[static_cast<size_t>(k - 1)] = bank_.rgb_backward(tr.torgb, gout);
    }

    const size_t pyr_len = cfg_.variant == Variant::kLight
                               ? 1
                               : tr.enc_out.f.size();
    std::vector<Tensor<T>> gf(tr.enc_out.f.size());
    Tensor<T> glat;
    if (tr.bank_ran) {
      std::vector<Tensor<T>> gpyr =
          bank_.backward(tr.bank, std::move(gtaps), pyr_len, &glat);
      for (size_t i = 0; i < gpyr.size(); ++i) {
        if (gpyr[i].empty()) continue;
        if (gf[i].empty()) gf[i] = std::move(gpyr[i]);
        else gf[i] += gpyr[i];
      }
    }
    if (!gf0_dec.empty()) {
      if (gf[0].empty()) gf[0] = std::move(gf0_dec);
      else gf[0] += gf0_dec;
    }
    if (cfg_.variant == Variant::kLight) glat = Tensor<T>();
    Tensor<T> gx = encoder_.backward(tr.enc, std::move(gf), glat);
    if (cfg_.task == Task::kColorization) {
      // The encoder consumed the L channel only; re-attach the pass-through
      // gradient of the L channel (identity path to the output's channel 0).
      Tensor<T> full({gx.dim(0), gx.dim(1), 3});
      for (int y = 0; y < gx.dim(0); ++y)
        for (int x = 0; x < gx.dim(1); ++x) {
          full(y, x, 0) = gx(y, x, 0) + gy(y, x, 0);
          full(y, x, 1) = T(0);
          full(y, x, 2) = T(0);
        }
      return full;
    }
    return gx;
  }

  ParamList<T>& params() { return params_; }
  const ParamList<T>& params() const { return params_; }

  void zero_grads() {
    for (auto& p : params_) p.grad->set_zero();
  }

  std::vector<std::string> freeze_bank() { return bank_.freeze("bank"); }

  const ModelConfig& config() const { return cfg_; }
  Encoder<T>& encoder() { return encoder_; }
  LatentBank<T>& bank() { return bank_; }
  Decoder<T>& decoder() { return decoder_; }

 private:
  bool bank_feeds_anything() const {
    if (!cfg_.use_decoder) return true;
    const auto dc = cfg_.decoder_config();
    for (int c : dc.tap_channels)
      if (c > 0) return true;
    return false;
  }

  void collect_params() {
    params_.clear();
    encoder_.collect("enc", params_);
    bank_.collect("bank", params_);
    if (cfg_.use_decoder) decoder_.collect("dec", params_);
  }

  ModelConfig cfg_;
  Encoder<T> encoder_;
  LatentBank<T> bank_;
  Decoder<T> decoder_;
  ParamList<T> params_;
};

// Parameter and MAC budget, bucketed into the three architectural roles.
// MACs come from a dry-run instrumented forward (exact wiring, no math);
// params from the registry.
struct ComplexityReport {
  uint64_t params_total = 0, params_encoder = 0, params_generator = 0,
           params_decoder = 0;
  uint64_t macs_total = 0, macs_encoder = 0, macs_generator = 0,
           macs_decoder = 0, macs_fusion = 0;
};

template <class T>
ComplexityReport complexity(const Model<T>& model) {
  ComplexityReport r;
  for (const auto& p : model.params()) {
    const size_t n = p.value->numel();
    r.params_total += n;
    if (p.name.rfind("enc.", 0) == 0) r.params_encoder += n;
    else if (p.name.rfind("bank.", 0) == 0) r.params_generator += n;
    else if (p.name.rfind("dec.", 0) == 0) r.params_decoder += n;
  }
  Meter m;
  m.dry_run = true;
  const int s = model.config().in_size;
  Tensor<T> zero({s, s, 3});
  model.forward(zero, nullptr, &m);
  r.macs_total = m.total();
  r.macs_encoder = m.total_under("encoder");
  r.macs_generator = m.total_under("bank");
  r.macs_decoder = m.total_under("decoder");
  r.macs_fusion = m.total_under("bank.fusion");
  return r;
}

}  // namespace glean
