// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "glean/image.hpp"

namespace glean {

// Procedural face-like scene: gradient background, soft blobs, an elliptical
// head with hair, eyes and a mouth, a few strokes, and a vignette. Edges are
// smoothstepped over roughly a pixel so downscaling behaves like a photo.
// Scene geometry depends only on the seed, not the raster size.
ImageTensor synth_scene(uint64_t seed, int size);

// Writes `count` scenes under `dir` (created if needed) as scene_00000.png,
// scene_00001.png, ...
void write_synth_dataset(const std::string& dir, int count, int size,
                         uint64_t seed);

}  // namespace glean
