// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#include "glean/image.hpp"

namespace glean {

void require_image(const ImageTensor& img) {
  GLEAN_REQUIRE(img.rank() == 3, " image must be HWC, got ", img.shape_str());
  const int c = img.dim(2);
  GLEAN_REQUIRE(c >= 1 && c <= 3, " image channels must be 1..3, got ", c);
}

double psnr(const ImageTensor& a, const ImageTensor& b) {
  require_image(a);
  require_image(b);
  GLEAN_REQUIRE(a.same_shape(b), " psnr shape mismatch ", a.shape_str(), " vs ",
                b.shape_str());
  double se = 0.0;
  for (size_t i = 0; i < a.numel(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.numel());
  if (mse <= 0.0) return 100.0;
  return std::min(100.0, 10.0 * std::log10(1.0 / mse));
}

namespace {

// sRGB <-> linear transfer.
double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}
double linear_to_srgb(double c) {
  return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

// D65 reference white.
constexpr double kXn = 0.95047, kYn = 1.0, kZn = 1.08883;
constexpr double kLabDelta = 6.0 / 29.0;

double lab_f(double t) {
  return t > kLabDelta * kLabDelta * kLabDelta
             ? std::cbrt(t)
             : t / (3.0 * kLabDelta * kLabDelta) + 4.0 / 29.0;
}
double lab_f_inv(double u) {
  return u > kLabDelta ? u * u * u
                       : 3.0 * kLabDelta * kLabDelta * (u - 4.0 / 29.0);
}

}  // namespace

LabImage rgb_to_lab(const ImageTensor& rgb) {
  require_image(rgb);
  GLEAN_REQUIRE(rgb.dim(2) == 3, " rgb_to_lab expects 3 channels");
  const int h = rgb.dim(0), w = rgb.dim(1);
  LabImage out{Tensor<float>({h, w, 3})};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double r = srgb_to_linear(rgb(y, x, 0));
      const double g = srgb_to_linear(rgb(y, x, 1));
      const double b = srgb_to_linear(rgb(y, x, 2));
      const double X = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
      const double Y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
      const double Z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
      const double fx = lab_f(X / kXn), fy = lab_f(Y / kYn), fz = lab_f(Z / kZn);
      out.planes(y, x, 0) = static_cast<float>(116.0 * fy - 16.0);
      out.planes(y, x, 1) = static_cast<float>(500.0 * (fx - fy));
      out.planes(y, x, 2) = static_cast<float>(200.0 * (fy - fz));
    }
  }
  return out;
}

ImageTensor lab_to_rgb(const LabImage& lab) {
  GLEAN_REQUIRE(lab.planes.rank() == 3 && lab.planes.dim(2) == 3,
                " LabImage must be HxWx3");
  const int h = lab.planes.dim(0), w = lab.planes.dim(1);
  ImageTensor out({h, w, 3});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double L = lab.planes(y, x, 0);
      const double a = lab.planes(y, x, 1);
      const double b = lab.planes(y, x, 2);
      const double fy = (L + 16.0) / 116.0;
      const double fx = fy + a / 500.0;
      const double fz = fy - b / 200.0;
      const double X = kXn * lab_f_inv(fx);
      const double Y = kYn * lab_f_inv(fy);
      const double Z = kZn * lab_f_inv(fz);
      const double rl = 3.2404542 * X - 1.5371385 * Y - 0.4985314 * Z;
      const double gl = -0.9692660 * X + 1.8760108 * Y + 0.0415560 * Z;
      const double bl = 0.0556434 * X - 0.2040259 * Y + 1.0572252 * Z;
      out(y, x, 0) = static_cast<float>(std::clamp(linear_to_srgb(rl), 0.0, 1.0));
      out(y, x, 1) = static_cast<float>(std::clamp(linear_to_srgb(gl), 0.0, 1.0));
      out(y, x, 2) = static_cast<float>(std::clamp(linear_to_srgb(bl), 0.0, 1.0));
    }
  }
  return out;
}

ImageTensor lab_encode_norm(const LabImage& lab) {
  GLEAN_REQUIRE(lab.planes.rank() == 3 && lab.planes.dim(2) == 3,
                " LabImage must be HxWx3");
  const int h = lab.planes.dim(0), w = lab.planes.dim(1);
  ImageTensor out({h, w, 3});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out(y, x, 0) = lab.planes(y, x, 0) / 100.0f;
      out(y, x, 1) = (lab.planes(y, x, 1) + 128.0f) / 255.0f;
      out(y, x, 2) = (lab.planes(y, x, 2) + 128.0f) / 255.0f;
    }
  }
  return out;
}

LabImage lab_decode_norm(const ImageTensor& enc) {
  require_image(enc);
  GLEAN_REQUIRE(enc.dim(2) == 3, " lab_decode_norm expects 3 channels");
  const int h = enc.dim(0), w = enc.dim(1);
  LabImage out{Tensor<float>({h, w, 3})};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out.planes(y, x, 0) = enc(y, x, 0) * 100.0f;
      out.planes(y, x, 1) = enc(y, x, 1) * 255.0f - 128.0f;
      out.planes(y, x, 2) = enc(y, x, 2) * 255.0f - 128.0f;
    }
  }
  return out;
}

namespace {

// Catmull-Rom-family cubic with a = -0.5.
double cubic_weight(double x) {
  constexpr double a = -0.5;
  x = std::fabs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return (((x - 5.0) * x + 8.0) * x - 4.0) * a;
  return 0.0;
}

// Half-sample symmetric reflection: ... 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...
int reflect_index(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - i - 1;
  }
  return i;
}

struct Tap {
  int lo;                      // first source index (unreflected)
  std::vector<double> w;       // normalized weights
};

// Precomputes the 1-D tap set for every destination coordinate. When
// downscaling, the kernel is stretched by the scale factor to antialias.
std::vector<Tap> bicubic_taps(int in, int out) {
  const double scale = static_cast<double>(in) / out;
  const double support_scale = std::max(1.0, scale);
  const double radius = 2.0 * support_scale;
  std::vector<Tap> taps(static_cast<size_t>(out));
  for (int d = 0; d < out; ++d) {
    const double center = (d + 0.5) * scale - 0.5;
    const int lo = static_cast<int>(std::ceil(center - radius));
    const int hi = static_cast<int>(std::floor(center + radius));
    Tap t;
    t.lo = lo;
    t.w.resize(static_cast<size_t>(hi - lo + 1));
    double sum = 0.0;
    for (int s = lo; s <= hi; ++s) {
      const double wgt = cubic_weight((s - center) / support_scale);
      t.w[static_cast<size_t>(s - lo)] = wgt;
      sum += wgt;
    }
    GLEAN_REQUIRE(sum > 0.0, " degenerate bicubic tap");
    for (auto& wgt : t.w) wgt /= sum;
    taps[static_cast<size_t>(d)] = std::move(t);
  }
  return taps;
}

// 1-D pass along rows (axis = width) or columns (axis = height).
ImageTensor resample_axis(const ImageTensor& src, int out_len, bool along_width,
                          const std::vector<Tap>& taps) {
  const int h = src.dim(0), w = src.dim(1), c = src.dim(2);
  const int oh = along_width ? h : out_len;
  const int ow = along_width ? out_len : w;
  ImageTensor dst({oh, ow, c});
  const int n = along_width ? w : h;
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      const Tap& t = taps[static_cast<size_t>(along_width ? x : y)];
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (size_t k = 0; k < t.w.size(); ++k) {
          const int s = reflect_index(t.lo + static_cast<int>(k), n);
          acc += t.w[k] * (along_width ? src(y, s, ch) : src(s, x, ch));
        }
        dst(y, x, ch) = static_cast<float>(acc);
      }
    }
  }
  return dst;
}

ImageTensor resize_nearest(const ImageTensor& src, int out_h, int out_w) {
  const int h = src.dim(0), w = src.dim(1), c = src.dim(2);
  ImageTensor dst({out_h, out_w, c});
  for (int y = 0; y < out_h; ++y) {
    const int sy = std::min(h - 1, static_cast<int>((y + 0.5) * h / out_h));
    for (int x = 0; x < out_w; ++x) {
      const int sx = std::min(w - 1, static_cast<int>((x + 0.5) * w / out_w));
      for (int ch = 0; ch < c; ++ch) dst(y, x, ch) = src(sy, sx, ch);
    }
  }
  return dst;
}

}  // namespace

ImageTensor resize(const ImageTensor& src, int out_h, int out_w,
                   ResizeFilter filter) {
  require_image(src);
  GLEAN_REQUIRE(out_h > 0 && out_w > 0, " resize target must be positive");
  if (out_h == src.dim(0) && out_w == src.dim(1)) return src;
  if (filter == ResizeFilter::kNearest) return resize_nearest(src, out_h, out_w);
  // Horizontal pass, then vertical (the kernel is separable).
  const auto tw = bicubic_taps(src.dim(1), out_w);
  ImageTensor mid = resample_axis(src, out_w, /*along_width=*/true, tw);
  const auto th = bicubic_taps(src.dim(0), out_h);
  return resample_axis(mid, out_h, /*along_width=*/false, th);
}

ImageTensor center_crop_square(const ImageTensor& img) {
  require_image(img);
  const int h = img.dim(0), w = img.dim(1), c = img.dim(2);
  const int side = std::min(h, w);
  const int y0 = (h - side) / 2, x0 = (w - side) / 2;
  if (side == h && side == w) return img;
  ImageTensor out({side, side, c});
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x)
      for (int ch = 0; ch < c; ++ch) out(y, x, ch) = img(y0 + y, x0 + x, ch);
  return out;
}

}  // namespace glean
