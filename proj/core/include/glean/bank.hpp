// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "glean/nn/layers.hpp"

namespace glean {

inline int ilog2_exact(int v) {
  GLEAN_REQUIRE(v > 0 && (v & (v - 1)) == 0, " expected a power of two, got ", v);
  int l = 0;
  while ((1 << l) < v) ++l;
  return l;
}

// Generative latent bank: a StyleGAN2-flavored synthesis stack with one
// modulated 3x3 conv per resolution (4, 8, ..., out_size), k = log2(out)-1
// style blocks total.
//
// GLEAN routing: blocks 0..N additionally fuse the encoder pyramid,
// u_i = p_i + Fusion_i(concat(p_i, f_(N-i))), where p_i is the learned 4x4
// constant (i = 0) or the upsampled previous feature. Zeroing the fusion
// weights therefore reduces the bank to a plain generator driven by the
// latent matrix alone.
//
// LightGLEAN routing: blocks below i0 = log2(in_size)-2 are never built; the
// surviving stack starts at block i0, which consumes a 1x1 projection of the
// trunk feature f_0 instead of an upsampled predecessor, and every style
// comes from a learnable shared latent instead of the encoder head.
struct BankConfig {
  int in_size = 16;
  int out_size = 128;
  int d_latent = 64;
  int fmap_base = 1024;
  int fmap_min = 8;
  int fmap_max = 64;
  bool light = false;
  int n_levels = 2;               // encoder pyramid depth N
  std::vector<int> enc_channels;  // channels of f_0..f_N (fusion conv sizing)
  int enc_feats_upto = -2;        // -2: all fused blocks; -1: none; else cap

  int k() const { return ilog2_exact(out_size) - 1; }
  int i0() const { return ilog2_exact(in_size) - 2; }
  int res_of_block(int i) const { return 4 << i; }
  int width_at_res(int res) const {
    return std::clamp(fmap_base / res, fmap_min, fmap_max);
  }
  int fuse_cap() const { return enc_feats_upto == -2 ? n_levels : enc_feats_upto; }

  void validate() const {
    GLEAN_REQUIRE(out_size >= 8 && (out_size & (out_size - 1)) == 0,
                  " out_size must be a power of two >= 8");
    GLEAN_REQUIRE(in_size >= 4 && (in_size & (in_size - 1)) == 0,
                  " in_size must be a power of two >= 4");
    GLEAN_REQUIRE(out_size >= in_size, " out_size must be >= in_size");
    GLEAN_REQUIRE(d_latent > 0 && fmap_base > 0 && fmap_min > 0 &&
                      fmap_max >= fmap_min,
                  " bad bank feature map schedule");
    if (!light)
      GLEAN_REQUIRE(static_cast<int>(enc_channels.size()) == n_levels + 1,
                    " enc_channels must list f_0..f_N");
    else
      GLEAN_REQUIRE(!enc_channels.empty(), " LightGLEAN needs f_0 channels");
  }
};

template <class T>
struct BankOut {
  // taps[i] = g_i at resolution 4 * 2^i; empty for blocks that do not exist
  // (LightGLEAN i < i0).
  std::vector<Tensor<T>> taps;
};

template <class T>
class LatentBank {
 public:
  LatentBank() = default;
  LatentBank(const BankConfig& cfg, Rng& rng) : cfg_(cfg) {
    cfg_.validate();
    const int k = cfg_.k();
    const int first = cfg_.light ? cfg_.i0() : 0;
    blocks_.resize(static_cast<size_t>(k));
    const int w4 = cfg_.width_at_res(4);
    if (!cfg_.light) {
      const_ = Tensor<T>({4, 4, w4});
      gconst_ = Tensor<T>({4, 4, w4});
      for (size_t i = 0; i < const_.numel(); ++i)
        const_[i] = static_cast<T>(rng.normal());
    }
    for (int i = first; i < k; ++i) {
      Block& b = blocks_[static_cast<size_t>(i)];
      b.present = true;
      b.res = cfg_.res_of_block(i);
      b.cin = i == 0 ? w4 : cfg_.width_at_res(cfg_.res_of_block(i - 1));
      b.cout = cfg_.width_at_res(b.res);
      b.upsample = i > 0 && !(cfg_.light && i == first);
      b.affine = Linear<T>(cfg_.d_latent, b.cin, rng, 1.0, /*bias_init=*/1.0);
      b.conv = ModulatedConv2d<T>(b.cin, b.cout, rng);
      b.bias = Tensor<T>({b.cout});
      b.gbias = Tensor<T>({b.cout});
      if (!cfg_.light && i <= cfg_.n_levels) {
        const int ec = cfg_.enc_channels[static_cast<size_t>(cfg_.n_levels - i)];
        b.has_fusion = true;
        // Near-zero start keeps a freshly attached encoder from swamping the
        // pretrained prior.
        b.fusion = Conv2d<T>(b.cin + ec, b.cin, 3, 1, true, rng, 0.1);
      }
    }
    if (cfg_.light) {
      const int i0 = cfg_.i0();
      proj_ = Conv2d<T>(cfg_.enc_channels[0], blocks_[static_cast<size_t>(i0)].cin, 1,
                        1, true, rng);
      latents_.resize(static_cast<size_t>(k - i0));
      glatents_.resize(static_cast<size_t>(k - i0));
      for (size_t i = 0; i < latents_.size(); ++i) {
        latents_[i] = Tensor<T>({cfg_.d_latent});
        glatents_[i] = Tensor<T>({cfg_.d_latent});
        for (size_t j = 0; j < latents_[i].numel(); ++j)
          latents_[i][j] = static_cast<T>(rng.normal());
      }
    }
    torgb_ = Conv2d<T>(cfg_.width_at_res(cfg_.out_size), 3, 1, 1, true, rng, 0.5);
  }

  struct BlockCache {
    typename Linear<T>::Cache affine;
    typename ModulatedConv2d<T>::Cache conv;
    typename Conv2d<T>::Cache fusion;
    bool fused = false;
    Tensor<T> act;  // post-activation output (leaky mask source)
  };
  struct Cache {
    std::vector<BlockCache> blocks;
    typename Conv2d<T>::Cache proj;
  };

  // GLEAN: latents is the encoder's (k, d) matrix and pyramid holds f_0..f_N
  // (pass an empty pyramid to run the plain generator, e.g. pretraining).
  // LIGHT: latents is ignored (owned parameters are used); pyramid[0] = f_0.
  BankOut<T> forward(const std::vector<Tensor<T>>& pyramid, const Tensor<T>& latents,
                     Cache* cache, Meter* m) const {
    MeterScope scope(m, "bank");
    const int k = cfg_.k();
    const int first = cfg_.light ? cfg_.i0() : 0;
    if (!cfg_.light && !latents.empty())
      GLEAN_REQUIRE(latents.rank() == 2 && latents.dim(0) == k &&
                        latents.dim(1) == cfg_.d_latent,
                    " latent matrix must be (k, d) = (", k, ",", cfg_.d_latent,
                    "), got ", latents.shape_str());
    BankOut<T> out;
    out.taps.resize(static_cast<size_t>(k));
    if (cache) cache->blocks.resize(static_cast<size_t>(k));

    Tensor<T> g;
    for (int i = first; i < k; ++i) {
      const Block& b = blocks_[static_cast<size_t>(i)];
      if (m) m->bank_blocks_invoked.push_back(i);
      BlockCache* bc = cache ? &cache->blocks[static_cast<size_t>(i)] : nullptr;

      Tensor<T> u;
      if (i == 0) {
        u = const_;
      } else if (cfg_.light && i == first) {
        GLEAN_REQUIRE(!pyramid.empty(), " LightGLEAN forward needs f_0");
        u = proj_.forward(pyramid[0], cache ? &cache->proj : nullptr, m);
      } else {
        u = b.upsample ? upsample_nearest_2x(g) : g;
      }

      const bool fuse = b.has_fusion && !pyramid.empty() &&
                        i <= cfg_.fuse_cap();
      if (fuse) {
        const size_t fidx = static_cast<size_t>(cfg_.n_levels - i);
        GLEAN_REQUIRE(fidx < pyramid.size(), " pyramid too short for block ", i);
        MeterScope fscope(m, "fusion");
        Tensor<T> fin = concat_channels(u, pyramid[fidx]);
        Tensor<T> r = b.fusion.forward(fin, bc ? &bc->fusion : nullptr, m);
        u += r;
      }
      if (bc) bc->fused = fuse;

      Tensor<T> c_i = cfg_.light
                          ? latents_[static_cast<size_t>(i - first)]
                          : latent_row(latents, i);
      Tensor<T> s = b.affine.forward(c_i, bc ? &bc->affine : nullptr, m);
      Tensor<T> y = b.conv.forward(u, s, bc ? &bc->conv : nullptr, m);
      if (!(m && m->dry_run)) {
        const int p = y.dim(0) * y.dim(1);
        for (int pi = 0; pi < p; ++pi)
          for (int c = 0; c < b.cout; ++c)
            y[static_cast<size_t>(pi) * b.cout + c] += b.bias[c];
        y = leaky_relu(y);
      }
      if (bc) bc->act = y;
      g = y;
      out.taps[static_cast<size_t>(i)] = g;
    }
    return out;
  }

  Tensor<T> rgb(const Tensor<T>& top_tap, typename Conv2d<T>::Cache* cache = nullptr,
                Meter* m = nullptr) const {
    MeterScope scope(m, "bank");
    return torgb_.forward(top_tap, cache, m);
  }
  Tensor<T> rgb_backward(const typename Conv2d<T>::Cache& cache, const Tensor<T>& gy) {
    return torgb_.backward(cache, gy);
  }

  // gtaps[i]: external gradient on tap i (empty = none). Returns gradients on
  // the pyramid entries (same arity as the forward pyramid) and on the GLEAN
  // latent matrix via *glatents_out. LightGLEAN accumulates into its owned
  // latent parameters instead.
  std::vector<Tensor<T>> backward(const Cache& cache,
                                  std::vector<Tensor<T>> gtaps,
                                  size_t pyramid_len, Tensor<T>* glatents_out) {
    const int k = cfg_.k();
    const int first = cfg_.light ? cfg_.i0() : 0;
    GLEAN_REQUIRE(gtaps.size() == static_cast<size_t>(k), " gtaps arity");
    std::vector<Tensor<T>> gpyr(pyramid_len);
    if (glatents_out && !cfg_.light)
      *glatents_out = Tensor<T>({k, cfg_.d_latent});

    Tensor<T> carry;  // gradient w.r.t. the current block's input feature g
    for (int i = k - 1; i >= first; --i) {
      const Block& b = blocks_[static_cast<size_t>(i)];
      const BlockCache& bc = cache.blocks[static_cast<size_t>(i)];

      Tensor<T> gy = std::move(gtaps[static_cast<size_t>(i)]);
      if (!carry.empty()) {
        if (gy.empty()) gy = std::move(carry);
        else gy += carry;
      }
      GLEAN_REQUIRE(!gy.empty(), " no gradient reaches bank block ", i);

      Tensor<T> gpre = leaky_relu_backward(bc.act, gy);
      if (b.trainable) {
        const int p = gpre.dim(0) * gpre.dim(1);
        for (int pi = 0; pi < p; ++pi)
          for (int c = 0; c < b.cout; ++c)
            blocks_[static_cast<size_t>(i)].gbias[c] +=
                gpre[static_cast<size_t>(pi) * b.cout + c];
      }
      Tensor<T> gs;
      Tensor<T> gu = blocks_[static_cast<size_t>(i)].conv.backward(bc.conv, gpre, &gs);
      Tensor<T> gc = blocks_[static_cast<size_t>(i)].affine.backward(bc.affine, gs);
      if (cfg_.light) {
        glatents_[static_cast<size_t>(i - first)] += gc;
      } else if (glatents_out) {
        for (int j = 0; j < cfg_.d_latent; ++j) (*glatents_out)(i, j) += gc[j];
      }

      if (bc.fused) {
        Tensor<T> gfin = blocks_[static_cast<size_t>(i)].fusion.backward(bc.fusion, gu);
        Tensor<T> gu_part, gf_part;
        split_channels(gfin, b.cin, &gu_part, &gf_part);
        gu += gu_part;  // residual u + fusion(...)
        const size_t fidx = static_cast<size_t>(cfg_.n_levels - i);
        if (gpyr[fidx].empty()) gpyr[fidx] = std::move(gf_part);
        else gpyr[fidx] += gf_part;
      }

      if (i == 0) {
        if (const_trainable_) gconst_ += gu;
        carry = Tensor<T>();
      } else if (cfg_.light && i == first) {
        Tensor<T> gf0 = proj_.backward(cache.proj, gu);
        if (gpyr[0].empty()) gpyr[0] = std::move(gf0);
        else gpyr[0] += gf0;
        carry = Tensor<T>();
      } else if (b.upsample) {
        carry = upsample_nearest_2x_backward(gu);
      } else {
        carry = std::move(gu);
      }
    }
    return gpyr;
  }

  void collect(const std::string& prefix, ParamList<T>& out) {
    if (!cfg_.light)
      out.push_back({prefix + ".const", &const_, &gconst_, &const_trainable_});
    for (size_t i = 0; i < blocks_.size(); ++i) {
      Block& b = blocks_[i];
      if (!b.present) continue;
      const std::string bp = prefix + ".block" + std::to_string(i);
      b.affine.collect(bp + ".affine", out);
      b.conv.collect(bp + ".conv", out);
      out.push_back({bp + ".bias", &b.bias, &b.gbias, &b.trainable});
      if (b.has_fusion) b.fusion.collect(bp + ".fusion", out);
    }
    if (cfg_.light) {
      proj_.collect(prefix + ".proj", out);
      for (size_t i = 0; i < latents_.size(); ++i)
        out.push_back({prefix + ".latent" + std::to_string(cfg_.i0() + static_cast<int>(i)),
                       &latents_[i], &glatents_[i], &latents_trainable_});
    }
    torgb_.collect(prefix + ".torgb", out);
  }

  // Freezes the pretrained core (const, affines, style convs, biases, toRGB).
  // Fusion convs, the LightGLEAN projection, and the learnable latents stay
  // trainable. Returns the names (under `prefix`) of everything frozen.
  std::vector<std::string> freeze(const std::string& prefix) {
    std::vector<std::string> frozen;
    if (!cfg_.light) {
      const_trainable_ = false;
      frozen.push_back(prefix + ".const");
    }
    for (size_t i = 0; i < blocks_.size(); ++i) {
      Block& b = blocks_[i];
      if (!b.present) continue;
      const std::string bp = prefix + ".block" + std::to_string(i);
      b.affine.trainable() = false;
      frozen.push_back(bp + ".affine.w");
      frozen.push_back(bp + ".affine.b");
      b.conv.trainable() = false;
      frozen.push_back(bp + ".conv.w");
      b.trainable = false;
      frozen.push_back(bp + ".bias");
    }
    torgb_.trainable() = false;
    frozen.push_back(prefix + ".torgb.w");
    frozen.push_back(prefix + ".torgb.b");
    return frozen;
  }

  const BankConfig& config() const { return cfg_; }
  int first_block() const { return cfg_.light ? cfg_.i0() : 0; }
  int top_width() const { return cfg_.width_at_res(cfg_.out_size); }

 private:
  struct Block {
    bool present = false;
    bool upsample = false;
    bool has_fusion = false;
    bool trainable = true;  // covers the bias tensor
    int res = 0, cin = 0, cout = 0;
    Linear<T> affine;
    ModulatedConv2d<T> conv;
    Conv2d<T> fusion;
    Tensor<T> bias, gbias;
  };

  static Tensor<T> latent_row(const Tensor<T>& latents, int i) {
    GLEAN_REQUIRE(!latents.empty(), " bank needs a latent matrix");
    const int d = latents.dim(1);
    Tensor<T> row({d});
    for (int j = 0; j < d; ++j) row[j] = latents(i, j);
    return row;
  }

  BankConfig cfg_;
  std::vector<Block> blocks_;
  Tensor<T> const_, gconst_;
  bool const_trainable_ = true;
  bool latents_trainable_ = true;
  Conv2d<T> proj_;
  std::vector<Tensor<T>> latents_, glatents_;
  Conv2d<T> torgb_;
};

}  // namespace glean
