// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <memory>

#include "glean/io.hpp"

namespace glean {

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

}  // namespace

ImageTensor read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  GLEAN_REQUIRE(fp != nullptr, " cannot open ", path);

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  GLEAN_REQUIRE(png != nullptr, " png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw contract_error("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw contract_error("failed to decode PNG: " + path);
  }

  png_init_io(png, fp.get());
  // Narrow to 8-bit, expand palettes/low-depth gray, drop alpha.
  png_read_png(png, info,
               PNG_TRANSFORM_STRIP_16 | PNG_TRANSFORM_PACKING |
                   PNG_TRANSFORM_EXPAND | PNG_TRANSFORM_STRIP_ALPHA,
               nullptr);

  const png_uint_32 h = png_get_image_height(png, info);
  const png_uint_32 w = png_get_image_width(png, info);
  const int channels = png_get_channels(png, info);
  png_bytepp rows = png_get_rows(png, info);

  GLEAN_REQUIRE(channels == 1 || channels == 3,
                " unsupported PNG channel count ", channels, " in ", path);
  ImageTensor img({static_cast<int>(h), static_cast<int>(w), channels});
  for (png_uint_32 y = 0; y < h; ++y) {
    const png_bytep row = rows[y];
    for (png_uint_32 x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c)
        img(static_cast<int>(y), static_cast<int>(x), c) =
            byte_to_unit(row[x * static_cast<png_uint_32>(channels) + c]);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_png(const std::string& path, const ImageTensor& img) {
  require_image(img);
  GLEAN_REQUIRE(img.dim(2) == 1 || img.dim(2) == 3,
                " PNG writer supports 1 or 3 channels");
  const int h = img.dim(0), w = img.dim(1), c = img.dim(2);

  FilePtr fp(std::fopen(path.c_str(), "wb"));
  GLEAN_REQUIRE(fp != nullptr, " cannot open for write ", path);

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  GLEAN_REQUIRE(png != nullptr, " png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw contract_error("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw contract_error("failed to encode PNG: " + path);
  }

  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h),
               8, c == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);

  std::vector<uint8_t> buf(static_cast<size_t>(h) * w * c);
  std::vector<png_bytep> rows(static_cast<size_t>(h));
  for (int y = 0; y < h; ++y) {
    rows[static_cast<size_t>(y)] = buf.data() + static_cast<size_t>(y) * w * c;
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch)
        buf[(static_cast<size_t>(y) * w + x) * c + ch] = unit_to_byte(img(y, x, ch));
  }
  png_set_rows(png, info, rows.data());
  png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
  png_destroy_write_struct(&png, &info);
}

bool has_image_extension(const std::string& path) {
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos) return false;
  std::string ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return ext == "png" || ext == "jpg" || ext == "jpeg";
}

ImageTensor read_image(const std::string& path) {
  const auto dot = path.find_last_of('.');
  GLEAN_REQUIRE(dot != std::string::npos, " no extension on ", path);
  std::string ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (ext == "png") return read_png(path);
  if (ext == "jpg" || ext == "jpeg") return read_jpeg(path);
  throw contract_error("unsupported image extension: " + path);
}

}  // namespace glean
