// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#include "glean/degradation.hpp"

#include <cmath>

#include "glean/io.hpp"

namespace glean {

void DegradationParams::validate() const {
  GLEAN_REQUIRE(sigma > 0.0, " blur sigma must be > 0, got ", sigma);
  GLEAN_REQUIRE(r >= 1.0, " downsampling factor must be >= 1, got ", r);
  GLEAN_REQUIRE(delta >= 0.0, " noise level must be >= 0, got ", delta);
  GLEAN_REQUIRE(quality >= 1 && quality <= 100, " JPEG quality must be in [1,100], got ",
                quality);
}

DegradationParams sample_degradation(Rng& rng) {
  DegradationParams p;
  p.sigma = rng.uniform(0.2, 10.0);
  p.r = rng.uniform(1.0, 8.0);
  p.delta = rng.uniform(0.0, 25.0);
  p.quality = 5 + static_cast<int>(rng.below(46));  // {5, ..., 50}
  return p;
}

std::vector<double> gaussian_kernel(double sigma) {
  GLEAN_REQUIRE(sigma > 0.0, " gaussian_kernel sigma must be > 0");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (i / sigma) * (i / sigma));
    k[static_cast<size_t>(i + radius)] = v;
    sum += v;
  }
  for (auto& v : k) v /= sum;
  return k;
}

namespace {

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - i - 1;
  }
  return i;
}

ImageTensor blur_axis(const ImageTensor& src, const std::vector<double>& k,
                      bool along_width) {
  const int h = src.dim(0), w = src.dim(1), c = src.dim(2);
  const int radius = static_cast<int>(k.size() / 2);
  ImageTensor dst({h, w, c});
  const int n = along_width ? w : h;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (int t = -radius; t <= radius; ++t) {
          const int s = reflect_index((along_width ? x : y) + t, n);
          acc += k[static_cast<size_t>(t + radius)] *
                 (along_width ? src(y, s, ch) : src(s, x, ch));
        }
        dst(y, x, ch) = static_cast<float>(acc);
      }
    }
  }
  return dst;
}

}  // namespace

ImageTensor gaussian_blur(const ImageTensor& img, double sigma) {
  require_image(img);
  const auto k = gaussian_kernel(sigma);
  return blur_axis(blur_axis(img, k, /*along_width=*/true), k,
                   /*along_width=*/false);
}

DegradationTrace degrade_traced(const ImageTensor& img, const DegradationParams& p,
                                Rng& rng) {
  require_image(img);
  p.validate();
  DegradationTrace t;
  t.blurred = gaussian_blur(img, p.sigma);

  if (p.r == 1.0) {
    t.downsampled = t.blurred;
  } else {
    const int oh = std::max(1, static_cast<int>(std::lround(t.blurred.dim(0) / p.r)));
    const int ow = std::max(1, static_cast<int>(std::lround(t.blurred.dim(1) / p.r)));
    t.downsampled = resize(t.blurred, oh, ow, ResizeFilter::kBicubic);
  }

  if (p.delta == 0.0) {
    t.noisy = t.downsampled;
  } else {
    t.noisy = t.downsampled;
    const float std8 = static_cast<float>(p.delta / 255.0);
    for (size_t i = 0; i < t.noisy.numel(); ++i) {
      const float v = t.noisy[i] + std8 * static_cast<float>(rng.normal());
      t.noisy[i] = std::clamp(v, 0.0f, 1.0f);
    }
  }

  t.final = jpeg_roundtrip(t.noisy, p.quality);
  return t;
}

ImageTensor degrade(const ImageTensor& img, const DegradationParams& p, Rng& rng) {
  return degrade_traced(img, p, rng).final;
}

}  // namespace glean
