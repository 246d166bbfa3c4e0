// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#include "glean/io.hpp"

#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>
#include <unistd.h>

#include "glean/rng.hpp"

namespace {

namespace fs = std::filesystem;
using glean::ImageTensor;

class IoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("glean_io_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) { return (dir_ / name).string(); }
  fs::path dir_;
};

ImageTensor quantized_random(int h, int w, int c, uint64_t seed) {
  ImageTensor img({h, w, c});
  glean::Rng rng(seed);
  for (size_t i = 0; i < img.numel(); ++i)
    img[i] = glean::byte_to_unit(uint8_t(rng.below(256)));
  return img;
}

TEST_F(IoTest, PngRoundTripIsExactOnByteGrid) {
  ImageTensor img = quantized_random(13, 9, 3, 1);
  glean::write_png(path("a.png"), img);
  ImageTensor back = glean::read_png(path("a.png"));
  ASSERT_EQ(back.shape(), img.shape());
  for (size_t i = 0; i < img.numel(); ++i) EXPECT_EQ(back[i], img[i]);
}

TEST_F(IoTest, PngGrayscaleRoundTrip) {
  ImageTensor img = quantized_random(6, 7, 1, 2);
  glean::write_png(path("g.png"), img);
  ImageTensor back = glean::read_png(path("g.png"));
  ASSERT_EQ(back.shape(), img.shape());
  for (size_t i = 0; i < img.numel(); ++i) EXPECT_EQ(back[i], img[i]);
}

TEST_F(IoTest, PngClampsOutOfRangeOnWrite) {
  ImageTensor img({1, 2, 1});
  img(0, 0, 0) = -0.5f;
  img(0, 1, 0) = 1.5f;
  glean::write_png(path("c.png"), img);
  ImageTensor back = glean::read_png(path("c.png"));
  EXPECT_EQ(back(0, 0, 0), 0.0f);
  EXPECT_EQ(back(0, 1, 0), 1.0f);
}

TEST_F(IoTest, ReadPngRejectsMissingFile) {
  EXPECT_THROW(glean::read_png(path("missing.png")), std::exception);
}

TEST(Jpeg, EncodeIsDeterministic) {
  ImageTensor img = quantized_random(32, 24, 3, 3);
  auto b1 = glean::jpeg_encode(img, 40);
  auto b2 = glean::jpeg_encode(img, 40);
  EXPECT_EQ(b1, b2);
  // JFIF magic bytes.
  ASSERT_GE(b1.size(), 2u);
  EXPECT_EQ(b1[0], 0xff);
  EXPECT_EQ(b1[1], 0xd8);
}

TEST(Jpeg, HigherQualityIsCloser) {
  ImageTensor img = quantized_random(32, 32, 3, 4);
  double lo = glean::psnr(img, glean::jpeg_roundtrip(img, 5));
  double hi = glean::psnr(img, glean::jpeg_roundtrip(img, 95));
  EXPECT_GT(hi, lo);
  EXPECT_GT(lo, 8.0);  // even q=5 is not random noise
}

TEST(Jpeg, RoundTripPreservesShapeAndRange) {
  ImageTensor img = quantized_random(17, 23, 3, 5);
  ImageTensor out = glean::jpeg_roundtrip(img, 30);
  ASSERT_EQ(out.shape(), img.shape());
  for (size_t i = 0; i < out.numel(); ++i) {
    ASSERT_GE(out[i], 0.0f);
    ASSERT_LE(out[i], 1.0f);
  }
}

TEST(Jpeg, QualityContract) {
  ImageTensor img = quantized_random(8, 8, 3, 6);
  EXPECT_THROW(glean::jpeg_encode(img, 0), glean::contract_error);
  EXPECT_THROW(glean::jpeg_encode(img, 101), glean::contract_error);
  EXPECT_NO_THROW(glean::jpeg_encode(img, 1));
  EXPECT_NO_THROW(glean::jpeg_encode(img, 100));
}

TEST(Jpeg, DecodeRejectsGarbage) {
  std::vector<uint8_t> junk(64, 0x13);
  EXPECT_THROW(glean::jpeg_decode(junk), std::exception);
}

TEST_F(IoTest, ReadImageDispatchesOnExtension) {
  ImageTensor img = quantized_random(10, 10, 3, 7);
  glean::write_png(path("x.PNG"), img);
  ImageTensor back = glean::read_image(path("x.PNG"));
  ASSERT_EQ(back.shape(), img.shape());
  for (size_t i = 0; i < img.numel(); ++i) EXPECT_EQ(back[i], img[i]);

  auto bytes = glean::jpeg_encode(img, 90);
  {
    std::ofstream f(path("y.jpg"), std::ios::binary);
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  }
  ImageTensor jb = glean::read_image(path("y.jpg"));
  ASSERT_EQ(jb.shape(), img.shape());
  ImageTensor mem = glean::jpeg_decode(bytes);
  for (size_t i = 0; i < jb.numel(); ++i) EXPECT_EQ(jb[i], mem[i]);

  EXPECT_TRUE(glean::has_image_extension("a/b/c.png"));
  EXPECT_TRUE(glean::has_image_extension("c.JPeG"));
  EXPECT_TRUE(glean::has_image_extension("c.jpg"));
  EXPECT_FALSE(glean::has_image_extension("c.txt"));
  EXPECT_FALSE(glean::has_image_extension("cpng"));
}

}  // namespace
