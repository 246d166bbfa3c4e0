// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>

#include "glean/rng.hpp"
#include "glean/tensor.hpp"

namespace gradcheck {

// Central finite difference of a scalar function w.r.t. x[i].
template <class F>
double fd(F&& f, glean::Tensor<double>& x, size_t i, double eps = 1e-5) {
  const double x0 = x[i];
  x[i] = x0 + eps;
  const double fp = f();
  x[i] = x0 - eps;
  const double fm = f();
  x[i] = x0;
  return (fp - fm) / (2.0 * eps);
}

inline double rel_err(double a, double b) {
  const double d = std::abs(a - b);
  const double s = std::max({std::abs(a), std::abs(b), 1e-6});
  return d / s;
}

// Max relative FD error over every element of x against analytic grad gx.
template <class F>
double max_rel_err(F&& f, glean::Tensor<double>& x, const glean::Tensor<double>& gx,
                   double eps = 1e-5) {
  double worst = 0.0;
  for (size_t i = 0; i < x.numel(); ++i)
    worst = std::max(worst, rel_err(fd(f, x, i, eps), gx[i]));
  return worst;
}

// Fixed random projection: turns a tensor-valued output into a scalar loss
// whose output-gradient is the projection itself.
struct Projection {
  glean::Tensor<double> w;
  explicit Projection(const std::vector<int>& shape, uint64_t seed = 424242)
      : w(shape) {
    glean::Rng rng(seed);
    for (size_t i = 0; i < w.numel(); ++i) rng.normal();  // warm distinct streams
    glean::Rng rng2(seed ^ 0x9e3779b97f4a7c15ull);
    for (size_t i = 0; i < w.numel(); ++i) w[i] = rng2.normal();
  }
  double operator()(const glean::Tensor<double>& y) const {
    double s = 0.0;
    for (size_t i = 0; i < y.numel(); ++i) s += w[i] * y[i];
    return s;
  }
};

inline glean::Tensor<double> randn(const std::vector<int>& shape, uint64_t seed,
                                   double scale = 1.0) {
  glean::Tensor<double> t(shape);
  glean::Rng rng(seed);
  for (size_t i = 0; i < t.numel(); ++i) t[i] = scale * rng.normal();
  return t;
}

}  // namespace gradcheck
