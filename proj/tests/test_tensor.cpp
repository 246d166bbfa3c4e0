// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#include "glean/tensor.hpp"

#include <gtest/gtest.h>

using glean::Tensor;

TEST(Tensor, ShapeAndNumel) {
  Tensor<float> t({2, 3, 4});
  EXPECT_EQ(t.rank(), 3);
  EXPECT_EQ(t.numel(), 24u);
  EXPECT_EQ(t.dim(0), 2);
  EXPECT_EQ(t.dim(2), 4);
  EXPECT_TRUE(Tensor<float>().empty());
  EXPECT_FALSE(t.empty());
}

TEST(Tensor, RowMajorHwcLayout) {
  // Flat index oracle for (h, w, c): h*W*C + w*C + c.
  const int H = 3, W = 4, C = 2;
  Tensor<float> t({H, W, C});
  for (int h = 0; h < H; ++h)
    for (int w = 0; w < W; ++w)
      for (int c = 0; c < C; ++c) t(h, w, c) = static_cast<float>(100 * h + 10 * w + c);
  for (int h = 0; h < H; ++h)
    for (int w = 0; w < W; ++w)
      for (int c = 0; c < C; ++c)
        EXPECT_EQ(t[static_cast<size_t>(h * W * C + w * C + c)],
                  static_cast<float>(100 * h + 10 * w + c));
}

TEST(Tensor, FourDimLayout) {
  // (o, i, j, c) flat oracle for (O, Kh, Kw, C).
  const int O = 2, Kh = 3, Kw = 3, C = 2;
  Tensor<float> t({O, Kh, Kw, C});
  t(1, 2, 0, 1) = 7.0f;
  EXPECT_EQ(t[static_cast<size_t>(((1 * Kh + 2) * Kw + 0) * C + 1)], 7.0f);
}

TEST(Tensor, ReshapePreservesCountAndRejectsMismatch) {
  Tensor<float> t({2, 6});
  t(1, 5) = 3.0f;
  t.reshape({3, 4});
  EXPECT_EQ(t.dim(0), 3);
  EXPECT_EQ(t[11], 3.0f);
  EXPECT_THROW(t.reshape({5, 5}), glean::contract_error);
}

TEST(Tensor, ArithmeticAndAxpy) {
  Tensor<double> a({4});
  Tensor<double> b({4});
  for (int i = 0; i < 4; ++i) {
    a[static_cast<size_t>(i)] = i;
    b[static_cast<size_t>(i)] = 2 * i;
  }
  a += b;
  EXPECT_DOUBLE_EQ(a[3], 9.0);
  a *= 0.5;
  EXPECT_DOUBLE_EQ(a[3], 4.5);
  glean::axpy(a, 0.0, b);  // no-op path still shape-checked
  Tensor<double> c({3});
  EXPECT_THROW(a += c, glean::contract_error);
  a.set_zero();
  EXPECT_DOUBLE_EQ(a[2], 0.0);
}

TEST(Tensor, CastRoundTrip) {
  Tensor<float> a({3});
  a[0] = 0.5f;
  a[1] = -2.0f;
  a[2] = 1e-3f;
  const Tensor<double> d = a.cast<double>();
  const Tensor<float> back = d.cast<float>();
  for (size_t i = 0; i < 3; ++i) EXPECT_EQ(a[i], back[i]);
}

TEST(Tensor, AllFinite) {
  Tensor<float> t({2, 2});
  EXPECT_TRUE(glean::all_finite(t));
  t[3] = std::numeric_limits<float>::quiet_NaN();
  EXPECT_FALSE(glean::all_finite(t));
  t[3] = std::numeric_limits<float>::infinity();
  EXPECT_FALSE(glean::all_finite(t));
}

TEST(Tensor, ShapeContractViolations) {
  EXPECT_THROW(Tensor<float>({0, 3}), glean::contract_error);
  EXPECT_THROW(Tensor<float>({-1}), glean::contract_error);
  EXPECT_THROW(Tensor<float>({2, 2}, std::vector<float>(3, 0.f)),
               glean::contract_error);
}
