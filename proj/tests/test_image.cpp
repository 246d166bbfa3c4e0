// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#include "glean/image.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "glean/rng.hpp"

namespace {

using glean::ImageTensor;
using glean::Rng;

ImageTensor random_image(int h, int w, int c, uint64_t seed) {
  ImageTensor img({h, w, c});
  Rng rng(seed);
  for (size_t i = 0; i < img.numel(); ++i)
    img[i] = static_cast<float>(rng.uniform());
  return img;
}

TEST(Psnr, ClosedForms) {
  ImageTensor a = random_image(6, 5, 3, 1);
  EXPECT_DOUBLE_EQ(glean::psnr(a, a), 100.0);

  // Uniform error of 0.5 -> MSE 0.25 -> 10*log10(1/0.25).
  ImageTensor b = a;
  for (size_t i = 0; i < b.numel(); ++i) b[i] = a[i] + 0.5f;
  EXPECT_NEAR(glean::psnr(a, b), 10.0 * std::log10(4.0), 1e-5);

  // Tiny error saturates at the 100 dB cap.
  ImageTensor c = a;
  c[0] += 1e-7f;
  EXPECT_DOUBLE_EQ(glean::psnr(a, c), 100.0);

  ImageTensor d({6, 5, 1});
  EXPECT_THROW(glean::psnr(a, d), glean::contract_error);
}

TEST(Lab, ReferenceColors) {
  // D65 reference values: white, black, and sRGB primary red.
  ImageTensor px({1, 1, 3});
  px(0, 0, 0) = 1.0f; px(0, 0, 1) = 1.0f; px(0, 0, 2) = 1.0f;
  auto lab = glean::rgb_to_lab(px);
  EXPECT_NEAR(lab.planes(0, 0, 0), 100.0f, 1e-3);
  EXPECT_NEAR(lab.planes(0, 0, 1), 0.0f, 1e-2);
  EXPECT_NEAR(lab.planes(0, 0, 2), 0.0f, 1e-2);

  px(0, 0, 0) = 0.0f; px(0, 0, 1) = 0.0f; px(0, 0, 2) = 0.0f;
  lab = glean::rgb_to_lab(px);
  EXPECT_NEAR(lab.planes(0, 0, 0), 0.0f, 1e-3);

  px(0, 0, 0) = 1.0f; px(0, 0, 1) = 0.0f; px(0, 0, 2) = 0.0f;
  lab = glean::rgb_to_lab(px);
  EXPECT_NEAR(lab.planes(0, 0, 0), 53.2408f, 0.05);
  EXPECT_NEAR(lab.planes(0, 0, 1), 80.0925f, 0.05);
  EXPECT_NEAR(lab.planes(0, 0, 2), 67.2032f, 0.05);
}

TEST(Lab, RoundTripWithinByteAccuracy) {
  ImageTensor img = random_image(9, 7, 3, 42);
  ImageTensor back = glean::lab_to_rgb(glean::rgb_to_lab(img));
  double max_err = 0.0;
  for (size_t i = 0; i < img.numel(); ++i)
    max_err = std::max(max_err, std::fabs(double(img[i]) - double(back[i])));
  EXPECT_LT(max_err, 1.0 / 255.0);
}

TEST(Lab, NormEncodingInverts) {
  ImageTensor img = random_image(5, 4, 3, 7);
  auto lab = glean::rgb_to_lab(img);
  auto enc = glean::lab_encode_norm(lab);
  // Working encoding keeps every channel in [0, 1] for natural colors.
  for (size_t i = 0; i < enc.numel(); ++i) {
    ASSERT_GE(enc[i], 0.0f);
    ASSERT_LE(enc[i], 1.0f);
  }
  auto dec = glean::lab_decode_norm(enc);
  for (size_t i = 0; i < lab.planes.numel(); ++i)
    EXPECT_NEAR(lab.planes[i], dec.planes[i], 1e-3f);
}

TEST(ByteConversion, RoundAndClamp) {
  EXPECT_EQ(glean::unit_to_byte(0.0f), 0);
  EXPECT_EQ(glean::unit_to_byte(1.0f), 255);
  EXPECT_EQ(glean::unit_to_byte(-0.2f), 0);
  EXPECT_EQ(glean::unit_to_byte(1.7f), 255);
  for (int v = 0; v < 256; ++v)
    EXPECT_EQ(glean::unit_to_byte(glean::byte_to_unit(uint8_t(v))), v);
}

TEST(Resize, SameSizeIsIdentity) {
  ImageTensor img = random_image(6, 6, 3, 3);
  ImageTensor out = glean::resize(img, 6, 6);
  for (size_t i = 0; i < img.numel(); ++i) EXPECT_EQ(img[i], out[i]);
}

TEST(Resize, PreservesConstants) {
  ImageTensor img({7, 9, 2});
  for (size_t i = 0; i < img.numel(); ++i) img[i] = 0.37f;
  for (auto [oh, ow] : {std::pair{14, 18}, {3, 4}, {29, 5}}) {
    ImageTensor out = glean::resize(img, oh, ow);
    for (size_t i = 0; i < out.numel(); ++i) ASSERT_NEAR(out[i], 0.37f, 1e-5f);
  }
}

TEST(Resize, ReproducesLinearRampInInterior) {
  // Catmull-Rom interpolation is exact on linear signals away from borders.
  const int n = 8;
  ImageTensor img({n, n, 1});
  auto ramp = [](double y, double x) { return (2.0 * x + 3.0 * y) / 40.0; };
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      img(y, x, 0) = static_cast<float>(ramp(y, x));
  ImageTensor out = glean::resize(img, 2 * n, 2 * n);
  for (int y = 4; y <= 11; ++y) {
    for (int x = 4; x <= 11; ++x) {
      const double sy = (y + 0.5) / 2.0 - 0.5;
      const double sx = (x + 0.5) / 2.0 - 0.5;
      ASSERT_NEAR(out(y, x, 0), ramp(sy, sx), 1e-5) << y << "," << x;
    }
  }
}

// Independent 2-D resample: full tensor-product evaluation with its own
// kernel, reflection, and normalization code. Catches axis-order and index
// mapping bugs in the separable implementation.
double cubic_ref(double x) {
  x = std::fabs(x);
  if (x <= 1.0) return 1.5 * x * x * x - 2.5 * x * x + 1.0;
  if (x < 2.0) return -0.5 * x * x * x + 2.5 * x * x - 4.0 * x + 2.0;
  return 0.0;
}

int reflect_ref(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -1 - i;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return i;
}

ImageTensor resize_bruteforce(const ImageTensor& src, int oh, int ow) {
  const int h = src.dim(0), w = src.dim(1), c = src.dim(2);
  const double sy = double(h) / oh, sx = double(w) / ow;
  const double suy = std::max(1.0, sy), sux = std::max(1.0, sx);
  ImageTensor dst({oh, ow, c});
  for (int y = 0; y < oh; ++y) {
    const double cy = (y + 0.5) * sy - 0.5;
    const int ylo = int(std::ceil(cy - 2.0 * suy));
    const int yhi = int(std::floor(cy + 2.0 * suy));
    for (int x = 0; x < ow; ++x) {
      const double cx = (x + 0.5) * sx - 0.5;
      const int xlo = int(std::ceil(cx - 2.0 * sux));
      const int xhi = int(std::floor(cx + 2.0 * sux));
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0, wsum = 0.0;
        for (int v = ylo; v <= yhi; ++v) {
          const double wy = cubic_ref((v - cy) / suy);
          for (int u = xlo; u <= xhi; ++u) {
            const double wgt = wy * cubic_ref((u - cx) / sux);
            acc += wgt * src(reflect_ref(v, h), reflect_ref(u, w), ch);
            wsum += wgt;
          }
        }
        dst(y, x, ch) = static_cast<float>(acc / wsum);
      }
    }
  }
  return dst;
}

TEST(Resize, MatchesBruteForceUpscale) {
  ImageTensor img = random_image(7, 5, 3, 11);
  ImageTensor got = glean::resize(img, 13, 9);
  ImageTensor want = resize_bruteforce(img, 13, 9);
  for (size_t i = 0; i < want.numel(); ++i) ASSERT_NEAR(got[i], want[i], 1e-5f);
}

TEST(Resize, MatchesBruteForceDownscale) {
  ImageTensor img = random_image(13, 9, 2, 12);
  ImageTensor got = glean::resize(img, 5, 7);
  ImageTensor want = resize_bruteforce(img, 5, 7);
  for (size_t i = 0; i < want.numel(); ++i) ASSERT_NEAR(got[i], want[i], 1e-5f);
}

TEST(Resize, NearestReplicatesBlocks) {
  ImageTensor img({2, 2, 1});
  img(0, 0, 0) = 1.0f; img(0, 1, 0) = 2.0f;
  img(1, 0, 0) = 3.0f; img(1, 1, 0) = 4.0f;
  ImageTensor out = glean::resize(img, 4, 4, glean::ResizeFilter::kNearest);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x)
      EXPECT_EQ(out(y, x, 0), img(y / 2, x / 2, 0));
}

TEST(PixelShuffle, HandExampleAndInverse) {
  glean::Tensor<float> x({1, 1, 4}, {10.f, 20.f, 30.f, 40.f});
  auto y = glean::pixel_shuffle(x, 2);
  ASSERT_EQ(y.shape(), (std::vector<int>{2, 2, 1}));
  EXPECT_EQ(y(0, 0, 0), 10.f);
  EXPECT_EQ(y(0, 1, 0), 20.f);
  EXPECT_EQ(y(1, 0, 0), 30.f);
  EXPECT_EQ(y(1, 1, 0), 40.f);

  ImageTensor img = random_image(3, 4, 8, 5);
  auto round = glean::pixel_unshuffle(glean::pixel_shuffle(img, 2), 2);
  ASSERT_EQ(round.shape(), img.shape());
  for (size_t i = 0; i < img.numel(); ++i) EXPECT_EQ(round[i], img[i]);

  EXPECT_THROW(glean::pixel_shuffle(img, 3), glean::contract_error);
  EXPECT_THROW(glean::pixel_unshuffle(img, 2), glean::contract_error);
}

TEST(CenterCrop, OffsetsAndPassThrough) {
  ImageTensor tall = random_image(5, 3, 1, 8);
  ImageTensor c1 = glean::center_crop_square(tall);
  ASSERT_EQ(c1.shape(), (std::vector<int>{3, 3, 1}));
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) EXPECT_EQ(c1(y, x, 0), tall(y + 1, x, 0));

  ImageTensor wide = random_image(3, 5, 2, 9);
  ImageTensor c2 = glean::center_crop_square(wide);
  ASSERT_EQ(c2.shape(), (std::vector<int>{3, 3, 2}));
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x)
      for (int ch = 0; ch < 2; ++ch) EXPECT_EQ(c2(y, x, ch), wide(y, x + 1, ch));

  ImageTensor square = random_image(4, 4, 3, 10);
  ImageTensor c3 = glean::center_crop_square(square);
  for (size_t i = 0; i < square.numel(); ++i) EXPECT_EQ(c3[i], square[i]);
}

}  // namespace
