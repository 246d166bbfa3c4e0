// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <utility>

#include "glean/embedder.hpp"
#include "glean/tensor.hpp"

namespace glean {

// Generator objective: L_g = L_mse + alpha_p * L_percep + alpha_g * L_gen,
// with L_gen = log(1 - D(yhat)) (saturating form; the non-saturating variant
// -log D(yhat) sits behind a flag). Discriminator objective:
// L_d = -(log(1 - D(yhat)) + log D(y)).
//
// Reported loss values clamp probabilities to [eps, 1-eps] with eps = 1e-7;
// gradients flow through the equivalent softplus forms, which agree with the
// clamped values to ~1e-6 over any logit the desk models produce.
constexpr double kProbEps = 1e-7;

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
inline double softplus(double z) {
  // Overflow-safe: softplus(z) = max(z, 0) + log1p(exp(-|z|)).
  return std::max(z, 0.0) + std::log1p(std::exp(-std::fabs(z)));
}
inline double clamp_prob(double p) {
  return std::clamp(p, kProbEps, 1.0 - kProbEps);
}

// Mean squared error over all elements (the 1/N is over every scalar).
template <class T>
double mse_loss(const Tensor<T>& yhat, const Tensor<T>& y) {
  GLEAN_REQUIRE(yhat.same_shape(y), " mse shape mismatch ", yhat.shape_str(),
                " vs ", y.shape_str());
  double acc = 0.0;
  for (size_t i = 0; i < y.numel(); ++i) {
    const double d = static_cast<double>(yhat[i]) - static_cast<double>(y[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(y.numel());
}

// d(mse)/d(yhat), scaled by `scale` (e.g. a loss weight over batch size).
template <class T>
Tensor<T> mse_loss_grad(const Tensor<T>& yhat, const Tensor<T>& y, double scale) {
  GLEAN_REQUIRE(yhat.same_shape(y), " mse grad shape mismatch");
  Tensor<T> g = yhat;
  const double c = 2.0 * scale / static_cast<double>(y.numel());
  for (size_t i = 0; i < g.numel(); ++i)
    g[i] = static_cast<T>(c * (static_cast<double>(yhat[i]) - static_cast<double>(y[i])));
  return g;
}

// Perceptual loss value given precomputed embeddings.
template <class T>
double perceptual_loss(const Tensor<T>& feat_hat, const Tensor<T>& feat_ref) {
  return mse_loss(feat_hat, feat_ref);
}

// Generator adversarial term from the fake logit. Returns the reported value
// and d(loss)/d(logit).
inline std::pair<double, double> gen_adversarial(double logit, bool non_saturating) {
  const double p = clamp_prob(sigmoid(logit));
  if (non_saturating) {
    // -log D(yhat); d/dz = sigmoid(z) - 1.
    return {-std::log(p), sigmoid(logit) - 1.0};
  }
  // log(1 - D(yhat)) = -softplus(z); d/dz = -sigmoid(z).
  return {std::log(1.0 - p), -sigmoid(logit)};
}

// Discriminator loss from fake and real logits, with per-logit gradients.
struct DiscLoss {
  double value;
  double dz_fake;
  double dz_real;
};
inline DiscLoss disc_adversarial(double logit_fake, double logit_real) {
  DiscLoss out;
  const double pf = clamp_prob(sigmoid(logit_fake));
  const double pr = clamp_prob(sigmoid(logit_real));
  out.value = -(std::log(1.0 - pf) + std::log(pr));
  out.dz_fake = sigmoid(logit_fake);        // d softplus(z)/dz
  out.dz_real = sigmoid(logit_real) - 1.0;  // d softplus(-z)/dz
  return out;
}

// One training step's generator-side loss values. The identity
// total == mse + alpha_p * percep + alpha_g * gen holds exactly in double
// arithmetic because total is computed from the parts.
struct LossBreakdown {
  double mse = 0.0;
  double percep = 0.0;
  double gen = 0.0;
  double total = 0.0;
  double disc = 0.0;  // discriminator loss of the same step (diagnostic)

  static LossBreakdown combine(double mse, double percep, double gen,
                               double alpha_p, double alpha_g) {
    LossBreakdown b;
    b.mse = mse;
    b.percep = percep;
    b.gen = gen;
    b.total = mse + alpha_p * percep + alpha_g * gen;
    return b;
  }
};

}  // namespace glean
