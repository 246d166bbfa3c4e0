// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "glean/common.hpp"

namespace glean {

// Dense row-major tensor. Images are HWC; conv weights are (Cout, kh, kw, Cin).
// Deliberately minimal: shape bookkeeping plus flat storage. All heavy math
// happens in the nn/ layers through Eigen maps over data().
template <class T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    for (int d : shape_) GLEAN_REQUIRE(d > 0, " tensor dims must be positive");
    v_.assign(numel_of(shape_), T(0));
  }
  Tensor(std::vector<int> shape, std::vector<T> data)
      : shape_(std::move(shape)), v_(std::move(data)) {
    GLEAN_REQUIRE(v_.size() == numel_of(shape_), " data/shape mismatch");
  }

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<int> shape, T value) {
    Tensor t(std::move(shape));
    std::fill(t.v_.begin(), t.v_.end(), value);
    return t;
  }

  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  const std::vector<int>& shape() const { return shape_; }
  size_t numel() const { return v_.size(); }
  bool empty() const { return v_.empty(); }

  T* data() { return v_.data(); }
  const T* data() const { return v_.data(); }
  T& operator[](size_t i) { return v_[i]; }
  const T& operator[](size_t i) const { return v_[i]; }

  // HWC accessors.
  T& operator()(int h, int w, int c) {
    return v_[(static_cast<size_t>(h) * shape_[1] + w) * shape_[2] + c];
  }
  const T& operator()(int h, int w, int c) const {
    return v_[(static_cast<size_t>(h) * shape_[1] + w) * shape_[2] + c];
  }
  // (Cout, kh, kw, Cin) accessor for conv weights.
  T& operator()(int o, int i, int j, int c) {
    return v_[((static_cast<size_t>(o) * shape_[1] + i) * shape_[2] + j) * shape_[3] + c];
  }
  const T& operator()(int o, int i, int j, int c) const {
    return v_[((static_cast<size_t>(o) * shape_[1] + i) * shape_[2] + j) * shape_[3] + c];
  }
  // Matrix accessor.
  T& operator()(int r, int c) { return v_[static_cast<size_t>(r) * shape_[1] + c]; }
  const T& operator()(int r, int c) const {
    return v_[static_cast<size_t>(r) * shape_[1] + c];
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  void set_zero() { std::fill(v_.begin(), v_.end(), T(0)); }

  Tensor& operator+=(const Tensor& o) {
    GLEAN_REQUIRE(same_shape(o), " shape mismatch in +=");
    for (size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
    return *this;
  }
  Tensor& operator*=(T s) {
    for (auto& x : v_) x *= s;
    return *this;
  }

  std::string shape_str() const {
    std::string s = "(";
    for (size_t i = 0; i < shape_.size(); ++i)
      s += (i ? "," : "") + std::to_string(shape_[i]);
    return s + ")";
  }

  template <class U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.reshape_raw(shape_);
    for (size_t i = 0; i < v_.size(); ++i) out[i] = static_cast<U>(v_[i]);
    return out;
  }

  // Internal: replace shape without touching data size checks (cast helper).
  void reshape_raw(const std::vector<int>& shape) {
    shape_ = shape;
    v_.resize(numel_of(shape_));
  }
  // Reinterpret shape; element count must be preserved.
  void reshape(std::vector<int> shape) {
    GLEAN_REQUIRE(numel_of(shape) == v_.size(), " reshape changes element count");
    shape_ = std::move(shape);
  }

  static size_t numel_of(const std::vector<int>& shape) {
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    return shape.empty() ? 0 : n;
  }

 private:
  std::vector<int> shape_;
  std::vector<T> v_;
};

template <class T>
bool all_finite(const Tensor<T>& t) {
  for (size_t i = 0; i < t.numel(); ++i)
    if (!std::isfinite(static_cast<double>(t[i]))) return false;
  return true;
}

// a += alpha * b
template <class T>
void axpy(Tensor<T>& a, T alpha, const Tensor<T>& b) {
  GLEAN_REQUIRE(a.same_shape(b), " axpy shape mismatch");
  for (size_t i = 0; i < a.numel(); ++i) a[i] += alpha * b[i];
}

}  // namespace glean
