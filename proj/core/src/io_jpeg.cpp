// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>

#include <jpeglib.h>

#include <csetjmp>
#include <vector>

#include "glean/io.hpp"

namespace glean {

namespace {

// libjpeg's default error handler exits the process; trampoline to longjmp
// and surface a contract_error instead.
struct JpegErrorMgr {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  std::longjmp(err->jump, 1);
}

std::vector<uint8_t> to_bytes(const ImageTensor& img) {
  const int h = img.dim(0), w = img.dim(1), c = img.dim(2);
  std::vector<uint8_t> buf(static_cast<size_t>(h) * w * c);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch)
        buf[(static_cast<size_t>(y) * w + x) * c + ch] = unit_to_byte(img(y, x, ch));
  return buf;
}

}  // namespace

std::vector<uint8_t> jpeg_encode(const ImageTensor& img, int quality) {
  require_image(img);
  GLEAN_REQUIRE(img.dim(2) == 1 || img.dim(2) == 3,
                " JPEG encoder supports 1 or 3 channels");
  GLEAN_REQUIRE(quality >= 1 && quality <= 100, " JPEG quality must be in [1,100], got ",
                quality);
  const int h = img.dim(0), w = img.dim(1), c = img.dim(2);
  const std::vector<uint8_t> raw = to_bytes(img);

  jpeg_compress_struct cinfo;
  JpegErrorMgr jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_error_exit;

  unsigned char* mem = nullptr;
  unsigned long mem_size = 0;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_compress(&cinfo);
    if (mem) free(mem);
    throw contract_error("JPEG encode failed");
  }

  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, &mem, &mem_size);
  cinfo.image_width = static_cast<JDIMENSION>(w);
  cinfo.image_height = static_cast<JDIMENSION>(h);
  cinfo.input_components = c;
  cinfo.in_color_space = c == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_set_defaults(&cinfo);
  // Baseline tables; color default is 4:2:0 chroma subsampling.
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  const size_t stride = static_cast<size_t>(w) * c;
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = const_cast<JSAMPROW>(raw.data() + cinfo.next_scanline * stride);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);

  std::vector<uint8_t> out(mem, mem + mem_size);
  free(mem);
  return out;
}

ImageTensor jpeg_decode(const std::vector<uint8_t>& bytes) {
  GLEAN_REQUIRE(!bytes.empty(), " empty JPEG buffer");
  jpeg_decompress_struct cinfo;
  JpegErrorMgr jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_error_exit;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw contract_error("JPEG decode failed");
  }

  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  jpeg_start_decompress(&cinfo);

  const int h = static_cast<int>(cinfo.output_height);
  const int w = static_cast<int>(cinfo.output_width);
  const int c = cinfo.output_components;
  GLEAN_REQUIRE(c == 1 || c == 3, " unsupported JPEG component count ", c);

  ImageTensor img({h, w, c});
  std::vector<uint8_t> row(static_cast<size_t>(w) * c);
  while (cinfo.output_scanline < cinfo.output_height) {
    const int y = static_cast<int>(cinfo.output_scanline);
    JSAMPROW rp = row.data();
    jpeg_read_scanlines(&cinfo, &rp, 1);
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch)
        img(y, x, ch) = byte_to_unit(row[static_cast<size_t>(x) * c + ch]);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return img;
}

ImageTensor jpeg_roundtrip(const ImageTensor& img, int quality) {
  return jpeg_decode(jpeg_encode(img, quality));
}

ImageTensor read_jpeg(const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "rb");
  GLEAN_REQUIRE(f != nullptr, " cannot open ", path);
  std::fseek(f, 0, SEEK_END);
  const long n = std::ftell(f);
  std::fseek(f, 0, SEEK_SET);
  std::vector<uint8_t> bytes(static_cast<size_t>(n > 0 ? n : 0));
  const size_t got = bytes.empty() ? 0 : std::fread(bytes.data(), 1, bytes.size(), f);
  std::fclose(f);
  GLEAN_REQUIRE(got == bytes.size() && !bytes.empty(), " short read on ", path);
  return jpeg_decode(bytes);
}

}  // namespace glean
