// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "glean/tensor.hpp"

namespace glean {

// Elementwise leaky ReLU; backward re-derives the mask from the cached input.
template <class T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope = T(0.2)) {
  Tensor<T> y = x;
  for (size_t i = 0; i < y.numel(); ++i)
    if (y[i] < T(0)) y[i] *= slope;
  return y;
}

template <class T>
Tensor<T> leaky_relu_backward(const Tensor<T>& x, const Tensor<T>& gy,
                              T slope = T(0.2)) {
  GLEAN_REQUIRE(x.same_shape(gy), " leaky backward shape mismatch");
  Tensor<T> gx = gy;
  for (size_t i = 0; i < gx.numel(); ++i)
    if (x[i] < T(0)) gx[i] *= slope;
  return gx;
}

// Nearest-neighbor 2x upsampling on HWC tensors.
template <class T>
Tensor<T> upsample_nearest_2x(const Tensor<T>& x) {
  GLEAN_REQUIRE(x.rank() == 3, " upsample wants HWC");
  const int h = x.dim(0), w = x.dim(1), c = x.dim(2);
  Tensor<T> y({h * 2, w * 2, c});
  for (int yy = 0; yy < h * 2; ++yy)
    for (int xx = 0; xx < w * 2; ++xx)
      for (int ch = 0; ch < c; ++ch) y(yy, xx, ch) = x(yy / 2, xx / 2, ch);
  return y;
}

// Adjoint of nearest 2x: each source cell accumulates its four replicas.
template <class T>
Tensor<T> upsample_nearest_2x_backward(const Tensor<T>& gy) {
  GLEAN_REQUIRE(gy.rank() == 3, " upsample backward wants HWC");
  const int h2 = gy.dim(0), w2 = gy.dim(1), c = gy.dim(2);
  GLEAN_REQUIRE(h2 % 2 == 0 && w2 % 2 == 0, " odd upsampled extent");
  Tensor<T> gx({h2 / 2, w2 / 2, c});
  for (int yy = 0; yy < h2; ++yy)
    for (int xx = 0; xx < w2; ++xx)
      for (int ch = 0; ch < c; ++ch) gx(yy / 2, xx / 2, ch) += gy(yy, xx, ch);
  return gx;
}

// Channel concatenation of two HWC tensors with equal spatial extent.
template <class T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  GLEAN_REQUIRE(a.rank() == 3 && b.rank() == 3, " concat wants HWC");
  GLEAN_REQUIRE(a.dim(0) == b.dim(0) && a.dim(1) == b.dim(1),
                " concat spatial mismatch ", a.shape_str(), " vs ", b.shape_str());
  const int h = a.dim(0), w = a.dim(1), ca = a.dim(2), cb = b.dim(2);
  Tensor<T> y({h, w, ca + cb});
  for (int yy = 0; yy < h; ++yy)
    for (int xx = 0; xx < w; ++xx) {
      for (int ch = 0; ch < ca; ++ch) y(yy, xx, ch) = a(yy, xx, ch);
      for (int ch = 0; ch < cb; ++ch) y(yy, xx, ca + ch) = b(yy, xx, ch);
    }
  return y;
}

// Copies `count` channels starting at `start` into a new tensor.
template <class T>
Tensor<T> slice_channels(const Tensor<T>& t, int start, int count) {
  GLEAN_REQUIRE(t.rank() == 3 && start >= 0 && start + count <= t.dim(2),
                " bad channel slice [", start, ",", start + count, ") of ",
                t.shape_str());
  const int h = t.dim(0), w = t.dim(1);
  Tensor<T> out({h, w, count});
  for (int yy = 0; yy < h; ++yy)
    for (int xx = 0; xx < w; ++xx)
      for (int ch = 0; ch < count; ++ch) out(yy, xx, ch) = t(yy, xx, start + ch);
  return out;
}

// Concatenates several HWC tensors along channels.
template <class T>
Tensor<T> concat_many(const std::vector<const Tensor<T>*>& parts) {
  GLEAN_REQUIRE(!parts.empty(), " concat_many of nothing");
  const int h = parts[0]->dim(0), w = parts[0]->dim(1);
  int ctot = 0;
  for (const auto* p : parts) {
    GLEAN_REQUIRE(p->rank() == 3 && p->dim(0) == h && p->dim(1) == w,
                  " concat_many spatial mismatch");
    ctot += p->dim(2);
  }
  Tensor<T> y({h, w, ctot});
  for (int yy = 0; yy < h; ++yy)
    for (int xx = 0; xx < w; ++xx) {
      int base = 0;
      for (const auto* p : parts) {
        for (int ch = 0; ch < p->dim(2); ++ch) y(yy, xx, base + ch) = (*p)(yy, xx, ch);
        base += p->dim(2);
      }
    }
  return y;
}

// Splits a concat gradient back into the two operands' gradients.
template <class T>
void split_channels(const Tensor<T>& g, int ca, Tensor<T>* ga, Tensor<T>* gb) {
  GLEAN_REQUIRE(g.rank() == 3 && g.dim(2) > ca, " bad split");
  const int h = g.dim(0), w = g.dim(1), cb = g.dim(2) - ca;
  if (ga) *ga = Tensor<T>({h, w, ca});
  if (gb) *gb = Tensor<T>({h, w, cb});
  for (int yy = 0; yy < h; ++yy)
    for (int xx = 0; xx < w; ++xx) {
      if (ga)
        for (int ch = 0; ch < ca; ++ch) (*ga)(yy, xx, ch) = g(yy, xx, ch);
      if (gb)
        for (int ch = 0; ch < cb; ++ch) (*gb)(yy, xx, ch) = g(yy, xx, ca + ch);
    }
}

}  // namespace glean
