// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "glean/image.hpp"

namespace glean {

// PNG is the lossless interchange path. 16-bit inputs are narrowed to 8,
// palettes expanded, alpha stripped.
ImageTensor read_png(const std::string& path);
void write_png(const std::string& path, const ImageTensor& img);

// In-memory baseline JPEG with 4:2:0 chroma subsampling (the libjpeg
// default); quality in [1, 100]. Used by the degradation pipeline.
std::vector<uint8_t> jpeg_encode(const ImageTensor& img, int quality);
ImageTensor jpeg_decode(const std::vector<uint8_t>& bytes);
ImageTensor jpeg_roundtrip(const ImageTensor& img, int quality);
ImageTensor read_jpeg(const std::string& path);

// Dispatches on extension (.png/.jpg/.jpeg, case-insensitive).
ImageTensor read_image(const std::string& path);
bool has_image_extension(const std::string& path);

}  // namespace glean
