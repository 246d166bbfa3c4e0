// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <memory>
#include <string>

#include "glean/nn/layers.hpp"

namespace glean {

// Feature extractor for the perceptual loss and the identity-similarity
// metric. Implementations are fixed functions (no trainable state); external
// nets can be plugged in by implementing this interface.
template <class T>
class PerceptualEmbedder {
 public:
  struct Cache {
    virtual ~Cache() = default;
  };

  virtual ~PerceptualEmbedder() = default;
  virtual std::string name() const = 0;
  virtual std::unique_ptr<Cache> make_cache() const = 0;
  virtual Tensor<T> forward(const Tensor<T>& img, Cache* cache,
                            Meter* m = nullptr) const = 0;
  // Pulls the feature-space gradient back to the image.
  virtual Tensor<T> backward_input(Cache& cache, const Tensor<T>& gfeat) const = 0;
};

// Identity features: the perceptual loss degenerates to pixel MSE. Useful for
// tests and as a null baseline.
template <class T>
class IdentityEmbedder final : public PerceptualEmbedder<T> {
 public:
  using Cache = typename PerceptualEmbedder<T>::Cache;
  std::string name() const override { return "identity"; }
  std::unique_ptr<Cache> make_cache() const override {
    return std::make_unique<Cache>();
  }
  Tensor<T> forward(const Tensor<T>& img, Cache*, Meter*) const override {
    return img;
  }
  Tensor<T> backward_input(Cache&, const Tensor<T>& gfeat) const override {
    return gfeat;
  }
};

// Two random (but fixed, seed-derived) stride-2 convolutions with leaky
// activations. A frozen random projection preserves enough structure to act
// as a cheap perceptual critic at desk scale.
template <class T>
class FixedConvEmbedder final : public PerceptualEmbedder<T> {
 public:
  explicit FixedConvEmbedder(int in_channels = 3, int features = 8,
                             uint64_t seed = 9157) {
    Rng rng(seed);
    c1_ = Conv2d<T>(in_channels, features, 3, 2, true, rng);
    c2_ = Conv2d<T>(features, features, 3, 2, true, rng);
    c1_.trainable() = false;
    c2_.trainable() = false;
  }

  struct ConvCache : PerceptualEmbedder<T>::Cache {
    typename Conv2d<T>::Cache c1, c2;
    Tensor<T> a1, a2;
  };
  using BaseCache = typename PerceptualEmbedder<T>::Cache;

  std::string name() const override { return "fixed-conv"; }
  std::unique_ptr<BaseCache> make_cache() const override {
    return std::make_unique<ConvCache>();
  }

  Tensor<T> forward(const Tensor<T>& img, BaseCache* cache,
                    Meter* m = nullptr) const override {
    MeterScope scope(m, "embedder");
    auto* cc = dynamic_cast<ConvCache*>(cache);
    Tensor<T> h = leaky_relu(c1_.forward(img, cc ? &cc->c1 : nullptr, m));
    if (cc) cc->a1 = h;
    h = leaky_relu(c2_.forward(h, cc ? &cc->c2 : nullptr, m));
    if (cc) cc->a2 = h;
    return h;
  }

  Tensor<T> backward_input(BaseCache& cache, const Tensor<T>& gfeat) const override {
    auto& cc = dynamic_cast<ConvCache&>(cache);
    Tensor<T> g = leaky_relu_backward(cc.a2, gfeat);
    // Frozen weights: only the input gradient flows.
    g = const_cast<Conv2d<T>&>(c2_).backward(cc.c2, g);
    g = leaky_relu_backward(cc.a1, g);
    return const_cast<Conv2d<T>&>(c1_).backward(cc.c1, g);
  }

 private:
  Conv2d<T> c1_, c2_;
};

// Spatially pooled embedding cosine in [-1, 1]; 1 when either vector is all
// zero and the other matches, 0 if exactly one is all zero.
template <class T>
double embedding_cosine(const PerceptualEmbedder<T>& emb, const Tensor<T>& a,
                        const Tensor<T>& b) {
  const Tensor<T> fa = emb.forward(a, nullptr, nullptr);
  const Tensor<T> fb = emb.forward(b, nullptr, nullptr);
  GLEAN_REQUIRE(fa.same_shape(fb), " embedding shape mismatch");
  const int c = fa.dim(2);
  const int p = fa.dim(0) * fa.dim(1);
  std::vector<double> va(static_cast<size_t>(c), 0.0), vb(static_cast<size_t>(c), 0.0);
  for (int i = 0; i < p; ++i)
    for (int ch = 0; ch < c; ++ch) {
      va[static_cast<size_t>(ch)] += fa[static_cast<size_t>(i) * c + ch];
      vb[static_cast<size_t>(ch)] += fb[static_cast<size_t>(i) * c + ch];
    }
  double dot = 0, na = 0, nb = 0;
  for (int ch = 0; ch < c; ++ch) {
    dot += va[static_cast<size_t>(ch)] * vb[static_cast<size_t>(ch)];
    na += va[static_cast<size_t>(ch)] * va[static_cast<size_t>(ch)];
    nb += vb[static_cast<size_t>(ch)] * vb[static_cast<size_t>(ch)];
  }
  if (na == 0.0 && nb == 0.0) return 1.0;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace glean
