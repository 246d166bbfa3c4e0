// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "glean/nn/layers.hpp"

namespace glean {

// Encoder: an RRDB trunk extracts f_0 at the input resolution, a chain of
// stride-2 + stride-1 conv pairs builds the pyramid f_1..f_N down to 4x4,
// and a conv + one shared FC turn f_N into the k x d_latent latent matrix C
// (one column per style block).
struct EncoderConfig {
  int in_channels = 3;
  int in_size = 16;
  int base_channels = 32;
  int n_rrdb_blocks = 4;
  int growth = 8;         // dense-block growth channels
  int n_levels = 2;       // N; pyramid bottom sits at in_size / 2^N
  int d_latent = 64;
  int k_latents = 6;      // latent columns = log2(out_size) - 1
  int head_channels = 64;
  int max_channels = 256; // doubling cap (8x base by default)
  bool build_chain = true;  // LightGLEAN keeps only the trunk (E_0)

  int channels_at(int level) const {
    const long long c = static_cast<long long>(base_channels) << level;
    return static_cast<int>(std::min<long long>(c, max_channels));
  }
  void validate() const {
    GLEAN_REQUIRE(in_size >= 4 && (in_size & (in_size - 1)) == 0,
                  " in_size must be a power of two >= 4, got ", in_size);
    GLEAN_REQUIRE(n_levels >= 0, " negative pyramid depth");
    GLEAN_REQUIRE(in_size >> n_levels >= 4, " pyramid bottom under 4x4: in_size ",
                  in_size, " levels ", n_levels);
    GLEAN_REQUIRE(base_channels > 0 && growth > 0 && d_latent > 0 && k_latents > 0,
                  " encoder sizes must be positive");
    GLEAN_REQUIRE(in_channels == 1 || in_channels == 3,
                  " encoder input channels must be 1 or 3");
  }
};

// ESRGAN-style dense block: five 3x3 convs, dense concats, 0.2-scaled
// residual.
template <class T>
class DenseBlock {
 public:
  DenseBlock() = default;
  DenseBlock(int ch, int growth, Rng& rng) : ch_(ch), g_(growth) {
    conv_[0] = Conv2d<T>(ch, growth, 3, 1, true, rng);
    conv_[1] = Conv2d<T>(ch + growth, growth, 3, 1, true, rng);
    conv_[2] = Conv2d<T>(ch + 2 * growth, growth, 3, 1, true, rng);
    conv_[3] = Conv2d<T>(ch + 3 * growth, growth, 3, 1, true, rng);
    conv_[4] = Conv2d<T>(ch + 4 * growth, ch, 3, 1, true, rng, 0.2);
  }

  struct Cache {
    typename Conv2d<T>::Cache c[5];
    Tensor<T> act[4];  // post-activation x1..x4 (sign gives the leaky mask)
  };

  Tensor<T> forward(const Tensor<T>& x, Cache* cache, Meter* m) const {
    Cache local;
    Cache* cc = cache ? cache : &local;
    Tensor<T> x1 = leaky_relu(conv_[0].forward(x, &cc->c[0], m));
    Tensor<T> x2 = leaky_relu(conv_[1].forward(concat_channels(x, x1), &cc->c[1], m));
    Tensor<T> cat2 = concat_many<T>({&x, &x1, &x2});
    Tensor<T> x3 = leaky_relu(conv_[2].forward(cat2, &cc->c[2], m));
    Tensor<T> cat3 = concat_many<T>({&x, &x1, &x2, &x3});
    Tensor<T> x4 = leaky_relu(conv_[3].forward(cat3, &cc->c[3], m));
    Tensor<T> cat4 = concat_many<T>({&x, &x1, &x2, &x3, &x4});
    Tensor<T> x5 = conv_[4].forward(cat4, &cc->c[4], m);
    if (cache) {
      cache->act[0] = x1;
      cache->act[1] = x2;
      cache->act[2] = x3;
      cache->act[3] = x4;
    }
    Tensor<T> y = x;
    axpy(y, T(0.2), x5);
    return y;
  }

  Tensor<T> backward(const Cache& cache, const Tensor<T>& gy) {
    // y = x + 0.2 * conv5(cat(x, x1..x4))
    Tensor<T> g5 = gy;
    g5 *= T(0.2);
    Tensor<T> gcat4 = conv_[4].backward(cache.c[4], g5);
    Tensor<T> gx = gy;  // residual path
    auto add_slice = [&](const Tensor<T>& gcat, int offset, int count, Tensor<T>& into) {
      Tensor<T> part = slice_channels(gcat, offset, count);
      into += part;
    };
    add_slice(gcat4, 0, ch_, gx);
    Tensor<T> ga1 = slice_channels(gcat4, ch_, g_);
    Tensor<T> ga2 = slice_channels(gcat4, ch_ + g_, g_);
    Tensor<T> ga3 = slice_channels(gcat4, ch_ + 2 * g_, g_);
    Tensor<T> ga4 = slice_channels(gcat4, ch_ + 3 * g_, g_);

    Tensor<T> gcat3 = conv_[3].backward(cache.c[3], leaky_relu_backward(cache.act[3], ga4));
    add_slice(gcat3, 0, ch_, gx);
    ga1 += slice_channels(gcat3, ch_, g_);
    ga2 += slice_channels(gcat3, ch_ + g_, g_);
    ga3 += slice_channels(gcat3, ch_ + 2 * g_, g_);

    Tensor<T> gcat2 = conv_[2].backward(cache.c[2], leaky_relu_backward(cache.act[2], ga3));
    add_slice(gcat2, 0, ch_, gx);
    ga1 += slice_channels(gcat2, ch_, g_);
    ga2 += slice_channels(gcat2, ch_ + g_, g_);

    Tensor<T> gcat1 = conv_[1].backward(cache.c[1], leaky_relu_backward(cache.act[1], ga2));
    add_slice(gcat1, 0, ch_, gx);
    ga1 += slice_channels(gcat1, ch_, g_);

    Tensor<T> g0 = conv_[0].backward(cache.c[0], leaky_relu_backward(cache.act[0], ga1));
    gx += g0;
    return gx;
  }

  void collect(const std::string& prefix, ParamList<T>& out) {
    for (int i = 0; i < 5; ++i)
      conv_[i].collect(prefix + ".conv" + std::to_string(i), out);
  }

 private:
  int ch_ = 0, g_ = 0;
  Conv2d<T> conv_[5];
};

// Residual-in-residual dense block: three dense blocks, 0.2-scaled residual.
template <class T>
class RRDB {
 public:
  RRDB() = default;
  RRDB(int ch, int growth, Rng& rng) {
    for (int i = 0; i < 3; ++i) db_[i] = DenseBlock<T>(ch, growth, rng);
  }

  struct Cache {
    typename DenseBlock<T>::Cache db[3];
  };

  Tensor<T> forward(const Tensor<T>& x, Cache* cache, Meter* m) const {
    Tensor<T> h = db_[0].forward(x, cache ? &cache->db[0] : nullptr, m);
    h = db_[1].forward(h, cache ? &cache->db[1] : nullptr, m);
    h = db_[2].forward(h, cache ? &cache->db[2] : nullptr, m);
    Tensor<T> y = x;
    axpy(y, T(0.2), h);
    return y;
  }

  Tensor<T> backward(const Cache& cache, const Tensor<T>& gy) {
    Tensor<T> gh = gy;
    gh *= T(0.2);
    gh = db_[2].backward(cache.db[2], gh);
    gh = db_[1].backward(cache.db[1], gh);
    gh = db_[0].backward(cache.db[0], gh);
    gh += gy;  // residual path
    return gh;
  }

  void collect(const std::string& prefix, ParamList<T>& out) {
    for (int i = 0; i < 3; ++i) db_[i].collect(prefix + ".db" + std::to_string(i), out);
  }

 private:
  DenseBlock<T> db_[3];
};

template <class T>
struct EncoderOut {
  std::vector<Tensor<T>> f;  // f[0..N], f[0] at in_size
  Tensor<T> latents;         // (k, d_latent); empty when the head is absent
};

template <class T>
class Encoder {
 public:
  Encoder() = default;
  Encoder(const EncoderConfig& cfg, Rng& rng) : cfg_(cfg) {
    cfg_.validate();
    conv_first_ = Conv2d<T>(cfg.in_channels, cfg.base_channels, 3, 1, true, rng);
    rrdb_.reserve(static_cast<size_t>(cfg.n_rrdb_blocks));
    for (int i = 0; i < cfg.n_rrdb_blocks; ++i)
      rrdb_.emplace_back(cfg.base_channels, cfg.growth, rng);
    trunk_conv_ = Conv2d<T>(cfg.base_channels, cfg.base_channels, 3, 1, true, rng);
    if (cfg.build_chain) {
      for (int i = 1; i <= cfg.n_levels; ++i) {
        const int cin = cfg.channels_at(i - 1), cout = cfg.channels_at(i);
        down_.emplace_back(cin, cout, 3, 2, true, rng);
        refine_.emplace_back(cout, cout, 3, 1, true, rng);
      }
      head_conv_ = Conv2d<T>(cfg.channels_at(cfg.n_levels), cfg.head_channels, 3, 1,
                             true, rng);
      const int bottom = cfg.in_size >> cfg.n_levels;
      head_fc_ = Linear<T>(bottom * bottom * cfg.head_channels,
                           cfg.k_latents * cfg.d_latent, rng);
    }
  }

  struct Cache {
    typename Conv2d<T>::Cache first;
    std::vector<typename RRDB<T>::Cache> rrdb;
    typename Conv2d<T>::Cache trunk;
    std::vector<typename Conv2d<T>::Cache> down, refine;
    std::vector<Tensor<T>> down_act, refine_act;  // post-activation
    typename Conv2d<T>::Cache head_conv;
    Tensor<T> head_act;
    typename Linear<T>::Cache head_fc;
  };

  EncoderOut<T> forward(const Tensor<T>& x, Cache* cache, Meter* m) const {
    GLEAN_REQUIRE(x.rank() == 3 && x.dim(0) == cfg_.in_size && x.dim(1) == cfg_.in_size,
                  " encoder expects ", cfg_.in_size, "x", cfg_.in_size, ", got ",
                  x.shape_str());
    MeterScope scope(m, "encoder");
    EncoderOut<T> out;
    if (cache) cache->rrdb.resize(rrdb_.size());

    Tensor<T> base = conv_first_.forward(x, cache ? &cache->first : nullptr, m);
    Tensor<T> h = base;
    for (size_t i = 0; i < rrdb_.size(); ++i)
      h = rrdb_[i].forward(h, cache ? &cache->rrdb[i] : nullptr, m);
    h = trunk_conv_.forward(h, cache ? &cache->trunk : nullptr, m);
    h += base;
    out.f.push_back(h);

    if (!cfg_.build_chain) return out;

    if (cache) {
      cache->down.resize(down_.size());
      cache->refine.resize(refine_.size());
      cache->down_act.resize(down_.size());
      cache->refine_act.resize(refine_.size());
    }
    for (size_t i = 0; i < down_.size(); ++i) {
      Tensor<T> d = leaky_relu(down_[i].forward(out.f.back(), cache ? &cache->down[i] : nullptr, m));
      if (cache) cache->down_act[i] = d;
      Tensor<T> r = leaky_relu(refine_[i].forward(d, cache ? &cache->refine[i] : nullptr, m));
      if (cache) cache->refine_act[i] = r;
      out.f.push_back(std::move(r));
    }

    Tensor<T> hc = leaky_relu(head_conv_.forward(out.f.back(), cache ? &cache->head_conv : nullptr, m));
    if (cache) cache->head_act = hc;
    Tensor<T> flat = hc;
    flat.reshape({static_cast<int>(hc.numel())});
    Tensor<T> lat = head_fc_.forward(flat, cache ? &cache->head_fc : nullptr, m);
    lat.reshape({cfg_.k_latents, cfg_.d_latent});
    out.latents = std::move(lat);
    return out;
  }

  // gf[i] may be empty (no consumer gradient at that level); glat may be
  // empty when the head is absent or unused.
  Tensor<T> backward(const Cache& cache, std::vector<Tensor<T>> gf,
                     const Tensor<T>& glat) {
    GLEAN_REQUIRE(gf.size() == static_cast<size_t>(cfg_.build_chain ? cfg_.n_levels + 1 : 1),
                  " encoder backward pyramid arity");
    const int n = cfg_.n_levels;
    Tensor<T> gbottom;  // gradient flowing into f[N]
    if (cfg_.build_chain) {
      gbottom = gf[static_cast<size_t>(n)];
      if (!glat.empty()) {
        Tensor<T> gl = glat;
        gl.reshape({cfg_.k_latents * cfg_.d_latent});
        Tensor<T> gflat = head_fc_.backward(cache.head_fc, gl);
        gflat.reshape(cache.head_act.shape());
        Tensor<T> ghc = leaky_relu_backward(cache.head_act, gflat);
        Tensor<T> gfN = head_conv_.backward(cache.head_conv, ghc);
        if (gbottom.empty()) gbottom = std::move(gfN);
        else gbottom += gfN;
      }
      for (int i = n - 1; i >= 0; --i) {
        Tensor<T> glev;
        if (!gbottom.empty()) {
          Tensor<T> gr = leaky_relu_backward(cache.refine_act[static_cast<size_t>(i)], gbottom);
          Tensor<T> gd = refine_[static_cast<size_t>(i)].backward(cache.refine[static_cast<size_t>(i)], gr);
          gd = leaky_relu_backward(cache.down_act[static_cast<size_t>(i)], gd);
          glev = down_[static_cast<size_t>(i)].backward(cache.down[static_cast<size_t>(i)], gd);
        }
        Tensor<T>& ghere = gf[static_cast<size_t>(i)];
        if (ghere.empty()) ghere = std::move(glev);
        else if (!glev.empty()) ghere += glev;
        gbottom = ghere;
      }
    } else {
      gbottom = gf[0];
    }
    GLEAN_REQUIRE(!gbottom.empty(), " encoder backward with no incoming gradient");

    // Trunk: f0 = base + trunk_conv(rrdbs(base)), base = conv_first(x).
    Tensor<T> gtrunk_out = gbottom;
    Tensor<T> gh = trunk_conv_.backward(cache.trunk, gtrunk_out);
    for (int i = static_cast<int>(rrdb_.size()) - 1; i >= 0; --i)
      gh = rrdb_[static_cast<size_t>(i)].backward(cache.rrdb[static_cast<size_t>(i)], gh);
    gh += gbottom;  // residual into base
    return conv_first_.backward(cache.first, gh);
  }

  void collect(const std::string& prefix, ParamList<T>& out) {
    conv_first_.collect(prefix + ".conv_first", out);
    for (size_t i = 0; i < rrdb_.size(); ++i)
      rrdb_[i].collect(prefix + ".rrdb" + std::to_string(i), out);
    trunk_conv_.collect(prefix + ".trunk_conv", out);
    for (size_t i = 0; i < down_.size(); ++i) {
      down_[i].collect(prefix + ".down" + std::to_string(i), out);
      refine_[i].collect(prefix + ".refine" + std::to_string(i), out);
    }
    if (cfg_.build_chain) {
      head_conv_.collect(prefix + ".head_conv", out);
      head_fc_.collect(prefix + ".head_fc", out);
    }
  }

  const EncoderConfig& config() const { return cfg_; }

 private:
  EncoderConfig cfg_;
  Conv2d<T> conv_first_, trunk_conv_;
  std::vector<RRDB<T>> rrdb_;
  std::vector<Conv2d<T>> down_, refine_;
  Conv2d<T> head_conv_;
  Linear<T> head_fc_;
};

}  // namespace glean
