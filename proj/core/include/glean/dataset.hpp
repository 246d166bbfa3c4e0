// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "glean/degradation.hpp"
#include "glean/image.hpp"
#include "glean/rng.hpp"

namespace glean {

// One (input, target) pair in model space.
template <class T>
struct TrainPair {
  Tensor<T> input;
  Tensor<T> target;
};

// In-memory corpus: every image center-cropped square and bicubic-resized to
// size x size RGB in [0, 1].
struct Dataset {
  std::vector<ImageTensor> images;
  std::vector<std::string> names;
  int size = 0;
};

// Loads all .png/.jpg/.jpeg directly under `dir` in lexicographic name order.
// Grayscale files are expanded to RGB; unreadable files are skipped with a
// warning on stderr. An empty result is a contract violation.
Dataset ingest_dir(const std::string& dir, int size);

enum class PairMode {
  kBicubic,       // input = bicubic downscale of the target
  kBlind,         // input = random degradation pipeline, rescaled to in_size
  kColorization,  // input = normalized Lab with neutral chroma, target = full Lab
};

// Deterministic pair synthesis: the pair for (step, slot) depends only on
// (seed, step, slot) and the corpus, so runs replay exactly.
class PairSampler {
 public:
  PairSampler(const Dataset* data, PairMode mode, int in_size, uint64_t seed);

  TrainPair<float> make(int64_t step, int slot) const;
  std::vector<TrainPair<float>> batch(int64_t step, int n) const;

  // Pair built from a specific corpus item (evaluation sweeps). `salt` seeds
  // the degradation draw in blind mode.
  TrainPair<float> pair_for(size_t index, uint64_t salt = 0) const;

  const Dataset& data() const { return *data_; }
  PairMode mode() const { return mode_; }
  int in_size() const { return in_size_; }

 private:
  TrainPair<float> build(const ImageTensor& hr, Rng& rng) const;

  const Dataset* data_;
  PairMode mode_;
  int in_size_;
  uint64_t seed_;
};

}  // namespace glean
