// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "glean/tensor.hpp"

namespace glean {

// Images are HWC float32 tensors with 1..3 channels, values nominally [0, 1].
using ImageTensor = Tensor<float>;

// Validates the image contract (rank 3, channels in {1,2,3}).
void require_image(const ImageTensor& img);

// Peak signal-to-noise ratio with MAX = 1.0, MSE taken jointly over all
// channels, accumulated in double. Identical inputs (and anything above the
// cap) report 100.0 dB.
double psnr(const ImageTensor& a, const ImageTensor& b);

// CIE Lab (D65 white point). planes is HxWx3: L in [0,100], a/b in roughly
// [-128, 128]. Conversions run in double internally.
struct LabImage {
  Tensor<float> planes;
};

LabImage rgb_to_lab(const ImageTensor& rgb);
ImageTensor lab_to_rgb(const LabImage& lab);

// Colorization working encoding: 3 channels in [0,1] as
// (L/100, (a+128)/255, (b+128)/255). Losses and the discriminator see this
// encoding; RGB appears only at inference via lab_to_rgb.
ImageTensor lab_encode_norm(const LabImage& lab);
LabImage lab_decode_norm(const ImageTensor& enc);

// 8-bit conversions: in v/255, out round(v*255) clamped to [0,255].
inline float byte_to_unit(uint8_t v) { return static_cast<float>(v) / 255.0f; }
inline uint8_t unit_to_byte(float v) {
  const float r = std::nearbyint(v * 255.0f);
  return static_cast<uint8_t>(std::clamp(r, 0.0f, 255.0f));
}

enum class ResizeFilter { kBicubic, kNearest };

// Separable resize. Bicubic uses the Catmull-Rom-family kernel with a = -0.5,
// reflects at borders, renormalizes the tap weights to sum to 1, and widens
// the kernel support by the scale factor when downscaling (antialias).
ImageTensor resize(const ImageTensor& src, int out_h, int out_w,
                   ResizeFilter filter = ResizeFilter::kBicubic);

// Sub-pixel convolution layout: (H, W, C*r^2) -> (H*r, W*r, C). Within each
// r x r output cell the r^2 source channels of group c are laid out row-major,
// so a 1x1x4 input [a,b,c,d] with r = 2 becomes [[a,b],[c,d]].
template <class T>
Tensor<T> pixel_shuffle(const Tensor<T>& x, int r) {
  GLEAN_REQUIRE(x.rank() == 3, " pixel_shuffle wants HWC");
  GLEAN_REQUIRE(r >= 1, " pixel_shuffle factor must be >= 1");
  const int h = x.dim(0), w = x.dim(1), c4 = x.dim(2);
  GLEAN_REQUIRE(c4 % (r * r) == 0, " channels not divisible by r^2");
  const int c = c4 / (r * r);
  Tensor<T> out({h * r, w * r, c});
  for (int y = 0; y < h; ++y)
    for (int xx = 0; xx < w; ++xx)
      for (int ch = 0; ch < c; ++ch)
        for (int dy = 0; dy < r; ++dy)
          for (int dx = 0; dx < r; ++dx)
            out(y * r + dy, xx * r + dx, ch) = x(y, xx, ch * r * r + dy * r + dx);
  return out;
}

// Exact inverse of pixel_shuffle (also its adjoint, used by conv backward).
template <class T>
Tensor<T> pixel_unshuffle(const Tensor<T>& x, int r) {
  GLEAN_REQUIRE(x.rank() == 3, " pixel_unshuffle wants HWC");
  GLEAN_REQUIRE(r >= 1, " pixel_unshuffle factor must be >= 1");
  const int hr = x.dim(0), wr = x.dim(1), c = x.dim(2);
  GLEAN_REQUIRE(hr % r == 0 && wr % r == 0, " spatial dims not divisible by r");
  const int h = hr / r, w = wr / r;
  Tensor<T> out({h, w, c * r * r});
  for (int y = 0; y < h; ++y)
    for (int xx = 0; xx < w; ++xx)
      for (int ch = 0; ch < c; ++ch)
        for (int dy = 0; dy < r; ++dy)
          for (int dx = 0; dx < r; ++dx)
            out(y, xx, ch * r * r + dy * r + dx) = x(y * r + dy, xx * r + dx, ch);
  return out;
}

// Crops the centered size x size square (shorter-side center crop when the
// image is rectangular).
ImageTensor center_crop_square(const ImageTensor& img);

}  // namespace glean
