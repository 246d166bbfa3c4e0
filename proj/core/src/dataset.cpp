// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#include "glean/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>

#include "glean/io.hpp"

namespace glean {

namespace {

ImageTensor to_rgb(const ImageTensor& img) {
  if (img.dim(2) == 3) return img;
  ImageTensor out({img.dim(0), img.dim(1), 3});
  for (int y = 0; y < img.dim(0); ++y)
    for (int x = 0; x < img.dim(1); ++x)
      for (int c = 0; c < 3; ++c) out(y, x, c) = img(y, x, 0);
  return out;
}

}  // namespace

Dataset ingest_dir(const std::string& dir, int size) {
  GLEAN_REQUIRE(size > 0, " dataset size must be positive");
  namespace fs = std::filesystem;
  GLEAN_REQUIRE(fs::is_directory(dir), " '", dir, "' is not a directory");

  std::vector<fs::path> paths;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && has_image_extension(e.path().string()))
      paths.push_back(e.path());
  std::sort(paths.begin(), paths.end());

  Dataset ds;
  ds.size = size;
  for (const auto& p : paths) {
    try {
      ImageTensor img = to_rgb(read_image(p.string()));
      img = center_crop_square(img);
      if (img.dim(0) != size)
        img = resize(img, size, size, ResizeFilter::kBicubic);
      ds.images.push_back(std::move(img));
      ds.names.push_back(p.filename().string());
    } catch (const std::exception& e) {
      std::cerr << "glean: skipping '" << p.string() << "': " << e.what() << "\n";
    }
  }
  GLEAN_REQUIRE(!ds.images.empty(), " no readable images in '", dir, "'");
  return ds;
}

PairSampler::PairSampler(const Dataset* data, PairMode mode, int in_size,
                         uint64_t seed)
    : data_(data), mode_(mode), in_size_(in_size), seed_(seed) {
  GLEAN_REQUIRE(data && !data->images.empty(), " sampler needs a corpus");
  GLEAN_REQUIRE(in_size > 0 && in_size <= data->size, " bad sampler in_size ",
                in_size, " for corpus size ", data->size);
  if (mode == PairMode::kColorization)
    GLEAN_REQUIRE(in_size == data->size, " colorization keeps the resolution");
}

TrainPair<float> PairSampler::build(const ImageTensor& hr, Rng& rng) const {
  TrainPair<float> pair;
  switch (mode_) {
    case PairMode::kBicubic:
      pair.target = hr;
      pair.input = resize(hr, in_size_, in_size_, ResizeFilter::kBicubic);
      break;
    case PairMode::kBlind: {
      pair.target = hr;
      const DegradationParams p = sample_degradation(rng);
      ImageTensor lo = degrade(hr, p, rng);
      pair.input = (lo.dim(0) == in_size_ && lo.dim(1) == in_size_)
                       ? lo
                       : resize(lo, in_size_, in_size_, ResizeFilter::kBicubic);
      break;
    }
    case PairMode::kColorization: {
      const Tensor<float> enc = lab_encode_norm(rgb_to_lab(hr));
      pair.target = enc;
      pair.input = enc;
      // Neutral chroma: a = b = 0 encodes to 128/255.
      const float neutral = 128.0f / 255.0f;
      for (int y = 0; y < enc.dim(0); ++y)
        for (int x = 0; x < enc.dim(1); ++x) {
          pair.input(y, x, 1) = neutral;
          pair.input(y, x, 2) = neutral;
        }
      break;
    }
  }
  return pair;
}

TrainPair<float> PairSampler::make(int64_t step, int slot) const {
  Rng rng(mix_seed(seed_, static_cast<uint64_t>(step), static_cast<uint64_t>(slot)));
  const size_t idx = rng.below(data_->images.size());
  return build(data_->images[idx], rng);
}

std::vector<TrainPair<float>> PairSampler::batch(int64_t step, int n) const {
  GLEAN_REQUIRE(n > 0, " batch size must be positive");
  std::vector<TrainPair<float>> out;
  out.reserve(static_cast<size_t>(n));
  for (int s = 0; s < n; ++s) out.push_back(make(step, s));
  return out;
}

TrainPair<float> PairSampler::pair_for(size_t index, uint64_t salt) const {
  GLEAN_REQUIRE(index < data_->images.size(), " corpus index out of range");
  Rng rng(mix_seed(seed_ ^ 0x65766179756c21ull, salt, index));
  return build(data_->images[index], rng);
}

}  // namespace glean
