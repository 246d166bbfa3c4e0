// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "glean/rng.hpp"
#include "glean/tensor.hpp"

namespace glean {

// A named view into one parameter tensor and its gradient accumulator.
// trainable is a pointer so freezing a module is visible through previously
// collected registries.
template <class T>
struct ParamRef {
  std::string name;
  Tensor<T>* value = nullptr;
  Tensor<T>* grad = nullptr;
  bool* trainable = nullptr;
};

template <class T>
using ParamList = std::vector<ParamRef<T>>;

template <class T>
size_t param_count(const ParamList<T>& params) {
  size_t n = 0;
  for (const auto& p : params) n += p.value->numel();
  return n;
}

template <class T>
size_t param_count_under(const ParamList<T>& params, const std::string& prefix) {
  size_t n = 0;
  for (const auto& p : params)
    if (p.name == prefix || p.name.rfind(prefix + ".", 0) == 0)
      n += p.value->numel();
  return n;
}

// He-style normal init for leaky-ReLU(0.2) fan-in layers; `gain_scale`
// shrinks output-emitting layers toward zero.
template <class T>
void init_he_normal(Tensor<T>& w, size_t fan_in, Rng& rng, double gain_scale = 1.0) {
  const double gain = std::sqrt(2.0 / (1.0 + 0.2 * 0.2));
  const double std = gain_scale * gain / std::sqrt(static_cast<double>(fan_in));
  for (size_t i = 0; i < w.numel(); ++i) w[i] = static_cast<T>(rng.normal(0.0, std));
}

template <class T>
void init_xavier_normal(Tensor<T>& w, size_t fan_in, Rng& rng, double gain_scale = 1.0) {
  const double std = gain_scale / std::sqrt(static_cast<double>(fan_in));
  for (size_t i = 0; i < w.numel(); ++i) w[i] = static_cast<T>(rng.normal(0.0, std));
}

}  // namespace glean
