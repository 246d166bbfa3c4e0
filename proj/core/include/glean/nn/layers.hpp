// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <cstring>
#include <string>
#include <vector>

#include "glean/nn/meter.hpp"
#include "glean/nn/ops.hpp"
#include "glean/nn/params.hpp"
#include "glean/rng.hpp"
#include "glean/tensor.hpp"

namespace glean {

template <class T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace convdet {

// Conv geometry for zero-padded "same-family" convolutions.
// Weights: (Cout, k, k, Cin). Activations: HWC. im2col rows are laid out
// (ky, kx, cin) to match the weight layout, so output = M * W^T lands
// directly in HWC order.
struct Geom {
  int H, W, C, Ho, Wo, K, Cout;
};

template <class T>
Geom geom_of(const Tensor<T>& x, const Tensor<T>& w, int stride, int pad) {
  GLEAN_REQUIRE(x.rank() == 3, " conv input must be HWC, got ", x.shape_str());
  GLEAN_REQUIRE(w.rank() == 4, " conv weights must be (Cout,k,k,Cin)");
  const int k = w.dim(1);
  GLEAN_REQUIRE(w.dim(2) == k, " conv kernel must be square");
  GLEAN_REQUIRE(x.dim(2) == w.dim(3), " conv channel mismatch: input ",
                x.shape_str(), " weights ", w.shape_str());
  Geom g;
  g.H = x.dim(0);
  g.W = x.dim(1);
  g.C = x.dim(2);
  g.Cout = w.dim(0);
  g.Ho = (g.H + 2 * pad - k) / stride + 1;
  g.Wo = (g.W + 2 * pad - k) / stride + 1;
  g.K = k * k * g.C;
  GLEAN_REQUIRE(g.Ho > 0 && g.Wo > 0, " conv output collapses to zero");
  return g;
}

// Fills M (rows p0..p1 of the im2col matrix, row-major (p1-p0) x K).
template <class T>
void im2col_range(const Tensor<T>& x, const Geom& g, int k, int stride, int pad,
                  int p0, int p1, T* M) {
  const int kcin = k * g.C;
  for (int p = p0; p < p1; ++p) {
    T* row = M + static_cast<size_t>(p - p0) * g.K;
    const int oy = p / g.Wo, ox = p % g.Wo;
    const int iy0 = oy * stride - pad;
    const int ix0 = ox * stride - pad;
    for (int ky = 0; ky < k; ++ky) {
      T* dst = row + static_cast<size_t>(ky) * kcin;
      const int iy = iy0 + ky;
      if (iy < 0 || iy >= g.H) {
        std::fill(dst, dst + kcin, T(0));
        continue;
      }
      const int kx_lo = std::max(0, -ix0);
      const int kx_hi = std::min(k, g.W - ix0);
      if (kx_lo > 0) std::fill(dst, dst + static_cast<size_t>(kx_lo) * g.C, T(0));
      if (kx_hi < k)
        std::fill(dst + static_cast<size_t>(kx_hi) * g.C,
                  dst + static_cast<size_t>(k) * g.C, T(0));
      if (kx_hi > kx_lo)
        std::memcpy(dst + static_cast<size_t>(kx_lo) * g.C,
                    &x(iy, ix0 + kx_lo, 0),
                    sizeof(T) * static_cast<size_t>(kx_hi - kx_lo) * g.C);
    }
  }
}

// Scatter-add of im2col-layout gradients back onto the input.
template <class T>
void col2im_add_range(Tensor<T>& gx, const Geom& g, int k, int stride, int pad,
                      int p0, int p1, const T* M) {
  const int kcin = k * g.C;
  for (int p = p0; p < p1; ++p) {
    const T* row = M + static_cast<size_t>(p - p0) * g.K;
    const int oy = p / g.Wo, ox = p % g.Wo;
    const int iy0 = oy * stride - pad;
    const int ix0 = ox * stride - pad;
    for (int ky = 0; ky < k; ++ky) {
      const int iy = iy0 + ky;
      if (iy < 0 || iy >= g.H) continue;
      const T* src = row + static_cast<size_t>(ky) * kcin;
      const int kx_lo = std::max(0, -ix0);
      const int kx_hi = std::min(k, g.W - ix0);
      for (int kx = kx_lo; kx < kx_hi; ++kx) {
        T* dst = &gx(iy, ix0 + kx, 0);
        const T* s = src + static_cast<size_t>(kx) * g.C;
        for (int c = 0; c < g.C; ++c) dst[c] += s[c];
      }
    }
  }
}

// Output rows are processed in chunks so the im2col buffer stays bounded
// (paper-scale 1024x1024 activations would otherwise need gigabytes).
inline int chunk_rows(const Geom& g) {
  constexpr size_t kBudget = size_t(1) << 22;  // ~4M scalars per buffer
  const size_t per_row = static_cast<size_t>(g.Wo) * g.K;
  const size_t rows = std::max<size_t>(1, kBudget / std::max<size_t>(per_row, 1));
  return static_cast<int>(std::min<size_t>(rows, static_cast<size_t>(g.Ho)));
}

template <class T>
Tensor<T> raw_forward(const Tensor<T>& x, const Tensor<T>& w, int stride, int pad,
                      Meter* m) {
  const int k = w.dim(1);
  const Geom g = geom_of(x, w, stride, pad);
  Tensor<T> y({g.Ho, g.Wo, g.Cout});
  if (m) {
    m->add_macs(static_cast<uint64_t>(g.Ho) * g.Wo * g.Cout * g.K);
    if (m->dry_run) return y;
  }
  Eigen::Map<const MatRM<T>> W(w.data(), g.Cout, g.K);
  std::vector<T> buf;
  const int rows = chunk_rows(g);
  buf.resize(static_cast<size_t>(rows) * g.Wo * g.K);
  for (int r0 = 0; r0 < g.Ho; r0 += rows) {
    const int r1 = std::min(g.Ho, r0 + rows);
    const int p0 = r0 * g.Wo, p1 = r1 * g.Wo;
    im2col_range(x, g, k, stride, pad, p0, p1, buf.data());
    Eigen::Map<const MatRM<T>> M(buf.data(), p1 - p0, g.K);
    Eigen::Map<MatRM<T>> Y(y.data() + static_cast<size_t>(p0) * g.Cout, p1 - p0,
                           g.Cout);
    Y.noalias() = M * W.transpose();
  }
  return y;
}

// Computes gx; accumulates dL/dw into *gw when given.
template <class T>
Tensor<T> raw_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& gy,
                       int stride, int pad, Tensor<T>* gw) {
  const int k = w.dim(1);
  const Geom g = geom_of(x, w, stride, pad);
  GLEAN_REQUIRE(gy.rank() == 3 && gy.dim(0) == g.Ho && gy.dim(1) == g.Wo &&
                    gy.dim(2) == g.Cout,
                " conv backward gradient shape mismatch");
  Tensor<T> gx({g.H, g.W, g.C});
  Eigen::Map<const MatRM<T>> W(w.data(), g.Cout, g.K);
  std::vector<T> mbuf, gmbuf;
  const int rows = chunk_rows(g);
  mbuf.resize(static_cast<size_t>(rows) * g.Wo * g.K);
  gmbuf.resize(static_cast<size_t>(rows) * g.Wo * g.K);
  for (int r0 = 0; r0 < g.Ho; r0 += rows) {
    const int r1 = std::min(g.Ho, r0 + rows);
    const int p0 = r0 * g.Wo, p1 = r1 * g.Wo;
    Eigen::Map<const MatRM<T>> G(gy.data() + static_cast<size_t>(p0) * g.Cout,
                                 p1 - p0, g.Cout);
    if (gw) {
      im2col_range(x, g, k, stride, pad, p0, p1, mbuf.data());
      Eigen::Map<const MatRM<T>> M(mbuf.data(), p1 - p0, g.K);
      Eigen::Map<MatRM<T>> GW(gw->data(), g.Cout, g.K);
      GW.noalias() += G.transpose() * M;
    }
    Eigen::Map<MatRM<T>> GM(gmbuf.data(), p1 - p0, g.K);
    GM.noalias() = G * W;
    col2im_add_range(gx, g, k, stride, pad, p0, p1, gmbuf.data());
  }
  return gx;
}

}  // namespace convdet

// Plain convolution with optional bias. stride in {1, 2}; 3x3 kernels use
// pad 1, 1x1 kernels pad 0.
template <class T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(int cin, int cout, int k, int stride, bool bias, Rng& rng,
         double gain_scale = 1.0)
      : cin_(cin), cout_(cout), k_(k), stride_(stride), pad_(k / 2), has_bias_(bias) {
    GLEAN_REQUIRE(k == 1 || k == 3, " only 1x1 and 3x3 kernels are used here");
    GLEAN_REQUIRE(stride == 1 || stride == 2, " stride must be 1 or 2");
    w_ = Tensor<T>({cout, k, k, cin});
    gw_ = Tensor<T>({cout, k, k, cin});
    init_he_normal(w_, static_cast<size_t>(k) * k * cin, rng, gain_scale);
    if (has_bias_) {
      b_ = Tensor<T>({cout});
      gb_ = Tensor<T>({cout});
    }
  }

  struct Cache {
    Tensor<T> x;
  };

  Tensor<T> forward(const Tensor<T>& x, Cache* cache = nullptr,
                    Meter* m = nullptr) const {
    Tensor<T> y = convdet::raw_forward(x, w_, stride_, pad_, m);
    if (has_bias_ && !(m && m->dry_run)) {
      const int p = y.dim(0) * y.dim(1);
      for (int i = 0; i < p; ++i)
        for (int c = 0; c < cout_; ++c) y[static_cast<size_t>(i) * cout_ + c] += b_[c];
    }
    if (cache) cache->x = x;
    return y;
  }

  Tensor<T> backward(const Cache& cache, const Tensor<T>& gy) {
    if (trainable_ && has_bias_) {
      const int p = gy.dim(0) * gy.dim(1);
      for (int i = 0; i < p; ++i)
        for (int c = 0; c < cout_; ++c) gb_[c] += gy[static_cast<size_t>(i) * cout_ + c];
    }
    return convdet::raw_backward(cache.x, w_, gy, stride_, pad_,
                                 trainable_ ? &gw_ : nullptr);
  }

  void collect(const std::string& prefix, ParamList<T>& out) {
    out.push_back({prefix + ".w", &w_, &gw_, &trainable_});
    if (has_bias_) out.push_back({prefix + ".b", &b_, &gb_, &trainable_});
  }

  int cin() const { return cin_; }
  int cout() const { return cout_; }
  int stride() const { return stride_; }
  Tensor<T>& weights() { return w_; }
  Tensor<T>& bias() { return b_; }
  bool& trainable() { return trainable_; }

 private:
  int cin_ = 0, cout_ = 0, k_ = 0, stride_ = 1, pad_ = 0;
  bool has_bias_ = true;
  bool trainable_ = true;
  Tensor<T> w_, gw_, b_, gb_;
};

// Fully connected layer on flattened inputs.
template <class T>
class Linear {
 public:
  Linear() = default;
  Linear(int in, int out, Rng& rng, double gain_scale = 1.0, double bias_init = 0.0)
      : in_(in), out_(out) {
    w_ = Tensor<T>({out, in});
    gw_ = Tensor<T>({out, in});
    b_ = Tensor<T>::full({out}, static_cast<T>(bias_init));
    gb_ = Tensor<T>({out});
    init_xavier_normal(w_, static_cast<size_t>(in), rng, gain_scale);
  }

  struct Cache {
    Tensor<T> x;
  };

  Tensor<T> forward(const Tensor<T>& x, Cache* cache = nullptr,
                    Meter* m = nullptr) const {
    GLEAN_REQUIRE(static_cast<int>(x.numel()) == in_, " linear expects ", in_,
                  " inputs, got ", x.shape_str());
    Tensor<T> y({out_});
    if (m) {
      m->add_macs(static_cast<uint64_t>(in_) * out_);
      if (m->dry_run) {
        if (cache) cache->x = x;
        return y;
      }
    }
    Eigen::Map<const MatRM<T>> W(w_.data(), out_, in_);
    Eigen::Map<const Eigen::Vector<T, Eigen::Dynamic>> X(x.data(), in_);
    Eigen::Map<Eigen::Vector<T, Eigen::Dynamic>> Y(y.data(), out_);
    Y.noalias() = W * X;
    for (int o = 0; o < out_; ++o) y[o] += b_[o];
    if (cache) cache->x = x;
    return y;
  }

  Tensor<T> backward(const Cache& cache, const Tensor<T>& gy) {
    GLEAN_REQUIRE(static_cast<int>(gy.numel()) == out_, " linear backward mismatch");
    Eigen::Map<const MatRM<T>> W(w_.data(), out_, in_);
    Eigen::Map<const Eigen::Vector<T, Eigen::Dynamic>> X(cache.x.data(), in_);
    Eigen::Map<const Eigen::Vector<T, Eigen::Dynamic>> GY(gy.data(), out_);
    if (trainable_) {
      Eigen::Map<MatRM<T>> GW(gw_.data(), out_, in_);
      GW.noalias() += GY * X.transpose();
      for (int o = 0; o < out_; ++o) gb_[o] += gy[o];
    }
    Tensor<T> gx = cache.x;  // reuse the input's shape
    Eigen::Map<Eigen::Vector<T, Eigen::Dynamic>> GX(gx.data(), in_);
    GX.noalias() = W.transpose() * GY;
    return gx;
  }

  void collect(const std::string& prefix, ParamList<T>& out) {
    out.push_back({prefix + ".w", &w_, &gw_, &trainable_});
    out.push_back({prefix + ".b", &b_, &gb_, &trainable_});
  }

  int in() const { return in_; }
  int out() const { return out_; }
  Tensor<T>& weights() { return w_; }
  Tensor<T>& bias() { return b_; }
  bool& trainable() { return trainable_; }

 private:
  int in_ = 0, out_ = 0;
  bool trainable_ = true;
  Tensor<T> w_, gw_, b_, gb_;
};

// StyleGAN2-style modulated 3x3 convolution with demodulation. The style
// vector s scales input channels, the shared kernel runs once, and the output
// is rescaled by d_o = rsqrt(sum_(k,ci) (w * s)^2 + eps). No bias here; the
// style block adds bias after demodulation.
template <class T>
class ModulatedConv2d {
 public:
  ModulatedConv2d() = default;
  ModulatedConv2d(int cin, int cout, Rng& rng) : cin_(cin), cout_(cout) {
    w_ = Tensor<T>({cout, 3, 3, cin});
    gw_ = Tensor<T>({cout, 3, 3, cin});
    init_he_normal(w_, static_cast<size_t>(9) * cin, rng);
  }

  struct Cache {
    Tensor<T> x, s, d, y_raw;
  };

  Tensor<T> forward(const Tensor<T>& x, const Tensor<T>& s, Cache* cache = nullptr,
                    Meter* m = nullptr) const {
    GLEAN_REQUIRE(static_cast<int>(s.numel()) == cin_, " style size mismatch");
    if (m && m->dry_run) {
      Tensor<T> y = convdet::raw_forward(x, w_, 1, 1, m);
      return y;
    }
    // Modulate input channels.
    Tensor<T> xs = x;
    const int p = x.dim(0) * x.dim(1);
    for (int i = 0; i < p; ++i)
      for (int c = 0; c < cin_; ++c) xs[static_cast<size_t>(i) * cin_ + c] *= s[c];
    Tensor<T> y_raw = convdet::raw_forward(xs, w_, 1, 1, m);
    // Demodulation factors.
    Tensor<T> d({cout_});
    for (int o = 0; o < cout_; ++o) {
      double q = 0.0;
      for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx)
          for (int c = 0; c < cin_; ++c) {
            const double ws = static_cast<double>(w_(o, ky, kx, c)) * s[c];
            q += ws * ws;
          }
      d[o] = static_cast<T>(1.0 / std::sqrt(q + kEps));
    }
    Tensor<T> y = y_raw;
    const int po = y.dim(0) * y.dim(1);
    for (int i = 0; i < po; ++i)
      for (int o = 0; o < cout_; ++o) y[static_cast<size_t>(i) * cout_ + o] *= d[o];
    if (cache) {
      cache->x = x;
      cache->s = s;
      cache->d = d;
      cache->y_raw = std::move(y_raw);
    }
    return y;
  }

  // Returns gx and writes the style gradient into *gs (same shape as s).
  Tensor<T> backward(const Cache& cache, const Tensor<T>& gy, Tensor<T>* gs) {
    const Tensor<T>& x = cache.x;
    const Tensor<T>& s = cache.s;
    const Tensor<T>& d = cache.d;
    const int po = gy.dim(0) * gy.dim(1);

    // Through the demod scale: y = y_raw * d.
    Tensor<T> gyraw = gy;
    Tensor<T> gd({cout_});
    for (int i = 0; i < po; ++i)
      for (int o = 0; o < cout_; ++o) {
        const size_t idx = static_cast<size_t>(i) * cout_ + o;
        gd[o] += gy[idx] * cache.y_raw[idx];
        gyraw[idx] *= d[o];
      }

    // Conv path on the modulated input.
    Tensor<T> xs = x;
    const int p = x.dim(0) * x.dim(1);
    for (int i = 0; i < p; ++i)
      for (int c = 0; c < cin_; ++c) xs[static_cast<size_t>(i) * cin_ + c] *= s[c];
    Tensor<T> gw_local({cout_, 3, 3, cin_});
    Tensor<T> gxs = convdet::raw_backward(xs, w_, gyraw, 1, 1,
                                          trainable_ ? &gw_local : nullptr);

    // Modulation path: xs = x * s.
    Tensor<T> gx = gxs;
    GLEAN_REQUIRE(gs != nullptr, " modconv backward needs a style grad sink");
    *gs = Tensor<T>({cin_});
    for (int i = 0; i < p; ++i)
      for (int c = 0; c < cin_; ++c) {
        const size_t idx = static_cast<size_t>(i) * cin_ + c;
        (*gs)[c] += gxs[idx] * x[idx];
        gx[idx] *= s[c];
      }

    // Demod path: d_o = (q_o + eps)^(-1/2), q_o = sum w^2 s^2.
    Tensor<T> gq({cout_});
    for (int o = 0; o < cout_; ++o) {
      const double dd = static_cast<double>(d[o]);
      gq[o] = static_cast<T>(-0.5 * dd * dd * dd * static_cast<double>(gd[o]));
    }
    for (int o = 0; o < cout_; ++o) {
      for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx)
          for (int c = 0; c < cin_; ++c) {
            const T wv = w_(o, ky, kx, c);
            if (trainable_)
              gw_local(o, ky, kx, c) += gq[o] * T(2) * wv * s[c] * s[c];
            (*gs)[c] += gq[o] * T(2) * wv * wv * s[c];
          }
    }
    if (trainable_) gw_ += gw_local;
    return gx;
  }

  void collect(const std::string& prefix, ParamList<T>& out) {
    out.push_back({prefix + ".w", &w_, &gw_, &trainable_});
  }

  int cin() const { return cin_; }
  int cout() const { return cout_; }
  Tensor<T>& weights() { return w_; }
  bool& trainable() { return trainable_; }

  static constexpr double kEps = 1e-8;

 private:
  int cin_ = 0, cout_ = 0;
  bool trainable_ = true;
  Tensor<T> w_, gw_;
};

}  // namespace glean
