// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "glean/bank.hpp"
#include "glean/image.hpp"
#include "glean/nn/layers.hpp"

namespace glean {

// Progressive decoder: d_0 = conv(f_0); each stage concatenates the bank tap
// at its input resolution, runs a 3x3 conv into 4x width channels and
// pixel-shuffles 2x, doubling the resolution; a final 3x3 conv (linear
// activation) consumes the out_size tap and emits the image. Colorization
// swaps the progressive stack for four plain convs (out_size == in_size).
struct DecoderConfig {
  int in_size = 16;
  int out_size = 128;
  int f0_channels = 32;
  int width = 16;
  // tap_channels[i] = channel count of bank tap i as consumed by the decoder;
  // 0 marks taps that are absent (LightGLEAN below i0) or ablated away.
  std::vector<int> tap_channels;
  bool colorization = false;
  std::vector<int> color_widths = {64, 64, 32, 2};

  int n_stages() const { return ilog2_exact(out_size) - ilog2_exact(in_size); }
  int block_of_res(int res) const { return ilog2_exact(res) - 2; }

  void validate() const {
    GLEAN_REQUIRE(out_size >= in_size, " decoder cannot shrink");
    GLEAN_REQUIRE(width > 0 && f0_channels > 0, " decoder widths must be positive");
    if (colorization) {
      GLEAN_REQUIRE(out_size == in_size, " colorization requires out == in");
      GLEAN_REQUIRE(color_widths.size() == 4 && color_widths.back() == 2,
                    " colorization head is four convs ending in 2 channels");
    }
  }
};

template <class T>
class Decoder {
 public:
  Decoder() = default;
  Decoder(const DecoderConfig& cfg, Rng& rng) : cfg_(cfg) {
    cfg_.validate();
    if (cfg.colorization) {
      int cin = cfg.f0_channels + tap_ch(cfg.block_of_res(cfg.out_size));
      for (size_t i = 0; i < cfg.color_widths.size(); ++i) {
        const int cout = cfg.color_widths[i];
        const bool last = i + 1 == cfg.color_widths.size();
        color_.emplace_back(cin, cout, 3, 1, true, rng, last ? 0.2 : 1.0);
        cin = cout;
      }
      return;
    }
    d0_ = Conv2d<T>(cfg.f0_channels, cfg.width, 3, 1, true, rng);
    int res = cfg.in_size;
    for (int j = 0; j < cfg.n_stages(); ++j) {
      const int cin = cfg.width + tap_ch(cfg.block_of_res(res));
      stages_.emplace_back(cin, 4 * cfg.width, 3, 1, true, rng);
      res *= 2;
    }
    const int ecin = cfg.width + tap_ch(cfg.block_of_res(cfg.out_size));
    emission_ = Conv2d<T>(ecin, 3, 3, 1, true, rng, 0.2);
  }

  struct Cache {
    typename Conv2d<T>::Cache d0;
    Tensor<T> d0_act;
    std::vector<typename Conv2d<T>::Cache> stage;
    std::vector<Tensor<T>> stage_act;  // post-shuffle post-leaky
    typename Conv2d<T>::Cache emission;
    std::vector<typename Conv2d<T>::Cache> color;
    std::vector<Tensor<T>> color_act;
  };

  // taps indexed by bank block; entries with configured channel 0 are ignored.
  Tensor<T> forward(const Tensor<T>& f0, const std::vector<Tensor<T>>& taps,
                    Cache* cache, Meter* m) const {
    MeterScope scope(m, "decoder");
    const bool dry = m && m->dry_run;
    if (cfg_.colorization) return forward_color(f0, taps, cache, m);

    if (cache) {
      cache->stage.resize(stages_.size());
      cache->stage_act.resize(stages_.size());
    }
    Tensor<T> d = d0_.forward(f0, cache ? &cache->d0 : nullptr, m);
    if (!dry) d = leaky_relu(d);
    if (cache) cache->d0_act = d;

    int res = cfg_.in_size;
    for (size_t j = 0; j < stages_.size(); ++j) {
      Tensor<T> in = with_tap(d, taps, res);
      Tensor<T> c = stages_[j].forward(in, cache ? &cache->stage[j] : nullptr, m);
      Tensor<T> s = pixel_shuffle(c, 2);
      if (!dry) s = leaky_relu(s);
      if (cache) cache->stage_act[j] = s;
      d = std::move(s);
      res *= 2;
    }
    Tensor<T> in = with_tap(d, taps, cfg_.out_size);
    return emission_.forward(in, cache ? &cache->emission : nullptr, m);
  }

  struct Grads {
    Tensor<T> gf0;
    std::vector<Tensor<T>> gtaps;  // indexed by bank block, empty if unused
  };

  Grads backward(const Cache& cache, const Tensor<T>& gy) {
    Grads out;
    out.gtaps.resize(cfg_.tap_channels.size());
    if (cfg_.colorization) {
      backward_color(cache, gy, &out);
      return out;
    }
    Tensor<T> g = emission_.backward(cache.emission, gy);
    Tensor<T> gd = take_tap_grad(g, cfg_.out_size, &out);

    int res = cfg_.out_size;
    for (int j = static_cast<int>(stages_.size()) - 1; j >= 0; --j) {
      res /= 2;
      Tensor<T> gs = leaky_relu_backward(cache.stage_act[static_cast<size_t>(j)], gd);
      Tensor<T> gc = pixel_unshuffle(gs, 2);
      Tensor<T> gin = stages_[static_cast<size_t>(j)].backward(
          cache.stage[static_cast<size_t>(j)], gc);
      gd = take_tap_grad(gin, res, &out);
    }
    Tensor<T> gact = leaky_relu_backward(cache.d0_act, gd);
    out.gf0 = d0_.backward(cache.d0, gact);
    return out;
  }

  void collect(const std::string& prefix, ParamList<T>& out) {
    if (cfg_.colorization) {
      for (size_t i = 0; i < color_.size(); ++i)
        color_[i].collect(prefix + ".color" + std::to_string(i), out);
      return;
    }
    d0_.collect(prefix + ".d0", out);
    for (size_t j = 0; j < stages_.size(); ++j)
      stages_[j].collect(prefix + ".stage" + std::to_string(j), out);
    emission_.collect(prefix + ".emission", out);
  }

  const DecoderConfig& config() const { return cfg_; }

 private:
  int tap_ch(int block) const {
    if (block < 0 || block >= static_cast<int>(cfg_.tap_channels.size())) return 0;
    return cfg_.tap_channels[static_cast<size_t>(block)];
  }

  Tensor<T> with_tap(const Tensor<T>& d, const std::vector<Tensor<T>>& taps,
                     int res) const {
    const int b = cfg_.block_of_res(res);
    if (tap_ch(b) == 0) return d;
    GLEAN_REQUIRE(b < static_cast<int>(taps.size()) && !taps[static_cast<size_t>(b)].empty(),
                  " decoder expected bank tap ", b, " at res ", res);
    const Tensor<T>& t = taps[static_cast<size_t>(b)];
    GLEAN_REQUIRE(t.dim(2) == tap_ch(b), " tap ", b, " channel mismatch");
    return concat_channels(d, t);
  }

  // Splits a concat gradient into the carried part and the tap part.
  Tensor<T> take_tap_grad(const Tensor<T>& gin, int res, Grads* out) const {
    const int b = cfg_.block_of_res(res);
    if (tap_ch(b) == 0) return gin;
    Tensor<T> gd, gt;
    split_channels(gin, gin.dim(2) - tap_ch(b), &gd, &gt);
    Tensor<T>& sink = out->gtaps[static_cast<size_t>(b)];
    if (sink.empty()) sink = std::move(gt);
    else sink += gt;
    return gd;
  }

  Tensor<T> forward_color(const Tensor<T>& f0, const std::vector<Tensor<T>>& taps,
                          Cache* cache, Meter* m) const {
    const bool dry = m && m->dry_run;
    if (cache) {
      cache->color.resize(color_.size());
      cache->color_act.resize(color_.size());
    }
    Tensor<T> h = with_tap(f0, taps, cfg_.out_size);
    for (size_t i = 0; i < color_.size(); ++i) {
      h = color_[i].forward(h, cache ? &cache->color[i] : nullptr, m);
      const bool last = i + 1 == color_.size();
      if (!last && !dry) h = leaky_relu(h);
      if (cache) cache->color_act[i] = h;
    }
    return h;
  }

  void backward_color(const Cache& cache, const Tensor<T>& gy, Grads* out) {
    Tensor<T> g = gy;
    for (int i = static_cast<int>(color_.size()) - 1; i >= 0; --i) {
      if (i + 1 != static_cast<int>(color_.size()))
        g = leaky_relu_backward(cache.color_act[static_cast<size_t>(i)], g);
      g = color_[static_cast<size_t>(i)].backward(cache.color[static_cast<size_t>(i)], g);
    }
    out->gf0 = take_tap_grad(g, cfg_.out_size, out);
  }

  DecoderConfig cfg_;
  Conv2d<T> d0_, emission_;
  std::vector<Conv2d<T>> stages_;
  std::vector<Conv2d<T>> color_;
};

}  // namespace glean
