// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "glean/nn/layers.hpp"

namespace glean {

// Patch-free logit discriminator: from-RGB conv, stride-2 pyramid to 4x4,
// one refining conv, then a fully connected layer to a single logit.
struct DiscriminatorConfig {
  int in_size = 128;
  int in_channels = 3;
  int base_channels = 8;
  int max_channels = 64;

  void validate() const {
    GLEAN_REQUIRE(in_size >= 4 && (in_size & (in_size - 1)) == 0,
                  " discriminator in_size must be a power of two >= 4");
    GLEAN_REQUIRE(base_channels > 0 && max_channels >= base_channels,
                  " bad discriminator widths");
  }
};

template <class T>
class Discriminator {
 public:
  Discriminator() = default;
  Discriminator(const DiscriminatorConfig& cfg, Rng& rng) : cfg_(cfg) {
    cfg_.validate();
    from_rgb_ = Conv2d<T>(cfg.in_channels, cfg.base_channels, 3, 1, true, rng);
    int ch = cfg.base_channels;
    int res = cfg.in_size;
    while (res > 4) {
      const int next = std::min(ch * 2, cfg.max_channels);
      down_.emplace_back(ch, next, 3, 2, true, rng);
      ch = next;
      res /= 2;
    }
    final_conv_ = Conv2d<T>(ch, ch, 3, 1, true, rng);
    fc_ = Linear<T>(4 * 4 * ch, 1, rng);
  }

  struct Cache {
    typename Conv2d<T>::Cache from_rgb;
    Tensor<T> from_rgb_act;
    std::vector<typename Conv2d<T>::Cache> down;
    std::vector<Tensor<T>> down_act;
    typename Conv2d<T>::Cache final_conv;
    Tensor<T> final_act;
    typename Linear<T>::Cache fc;
  };

  // Returns the raw logit (scalar tensor).
  Tensor<T> forward(const Tensor<T>& x, Cache* cache, Meter* m = nullptr) const {
    MeterScope scope(m, "discriminator");
    if (cache) {
      cache->down.resize(down_.size());
      cache->down_act.resize(down_.size());
    }
    Tensor<T> h = leaky_relu(from_rgb_.forward(x, cache ? &cache->from_rgb : nullptr, m));
    if (cache) cache->from_rgb_act = h;
    for (size_t i = 0; i < down_.size(); ++i) {
      h = leaky_relu(down_[i].forward(h, cache ? &cache->down[i] : nullptr, m));
      if (cache) cache->down_act[i] = h;
    }
    h = leaky_relu(final_conv_.forward(h, cache ? &cache->final_conv : nullptr, m));
    if (cache) cache->final_act = h;
    Tensor<T> flat = h;
    flat.reshape({static_cast<int>(h.numel())});
    return fc_.forward(flat, cache ? &cache->fc : nullptr, m);
  }

  // dlogit: gradient on the scalar logit. Returns the input-image gradient;
  // parameter gradients accumulate only while trainable.
  Tensor<T> backward(const Cache& cache, const Tensor<T>& dlogit) {
    Tensor<T> g = fc_.backward(cache.fc, dlogit);
    g.reshape(cache.final_act.shape());
    g = leaky_relu_backward(cache.final_act, g);
    g = final_conv_.backward(cache.final_conv, g);
    for (int i = static_cast<int>(down_.size()) - 1; i >= 0; --i) {
      g = leaky_relu_backward(cache.down_act[static_cast<size_t>(i)], g);
      g = down_[static_cast<size_t>(i)].backward(cache.down[static_cast<size_t>(i)], g);
    }
    g = leaky_relu_backward(cache.from_rgb_act, g);
    return from_rgb_.backward(cache.from_rgb, g);
  }

  void collect(const std::string& prefix, ParamList<T>& out) {
    from_rgb_.collect(prefix + ".from_rgb", out);
    for (size_t i = 0; i < down_.size(); ++i)
      down_[i].collect(prefix + ".down" + std::to_string(i), out);
    final_conv_.collect(prefix + ".final_conv", out);
    fc_.collect(prefix + ".fc", out);
  }

  void set_trainable(bool v) {
    ParamList<T> tmp;
    collect("d", tmp);
    for (auto& p : tmp) *p.trainable = v;
  }

  const DiscriminatorConfig& config() const { return cfg_; }

 private:
  DiscriminatorConfig cfg_;
  Conv2d<T> from_rgb_, final_conv_;
  std::vector<Conv2d<T>> down_;
  Linear<T> fc_;
};

}  // namespace glean
