// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "glean/image.hpp"
#include "glean/rng.hpp"

namespace glean {

// Blind-restoration degradation: y = JPEG_q( (x (*) k_sigma) down_r + n_delta ).
// delta is the AWGN standard deviation on the 8-bit scale (applied as
// delta/255 on unit-range floats).
struct DegradationParams {
  double sigma = 2.0;   // gaussian blur stddev, > 0
  double r = 4.0;       // downsampling factor, >= 1 (r == 1 skips the stage)
  double delta = 0.0;   // noise stddev in 8-bit units, >= 0 (0 skips the stage)
  int quality = 90;     // JPEG quality in [1, 100]

  void validate() const;
};

// Uniform draws from the training intervals: sigma in [0.2, 10], r in [1, 8],
// delta in [0, 25], quality integer in [5, 50]. Draw order is fixed
// (sigma, r, delta, quality) so a seeded Rng reproduces streams exactly.
DegradationParams sample_degradation(Rng& rng);

// 1-D gaussian taps, length 2*ceil(3*sigma) + 1, normalized to sum 1.
std::vector<double> gaussian_kernel(double sigma);

// Separable gaussian blur with half-sample symmetric border reflection.
ImageTensor gaussian_blur(const ImageTensor& img, double sigma);

// Full pipeline: blur -> bicubic downsample to round(size/r) -> AWGN clamped
// to [0,1] -> baseline JPEG round trip. Noise consumes rng only when
// delta > 0; r == 1 leaves the resolution stage out entirely, so degenerate
// params reduce the pipeline to blur + JPEG bit-for-bit.
ImageTensor degrade(const ImageTensor& img, const DegradationParams& p, Rng& rng);

// Same pipeline, keeping every stage output (for tests and debugging).
struct DegradationTrace {
  ImageTensor blurred;
  ImageTensor downsampled;
  ImageTensor noisy;
  ImageTensor final;
};
DegradationTrace degrade_traced(const ImageTensor& img, const DegradationParams& p,
                                Rng& rng);

}  // namespace glean
