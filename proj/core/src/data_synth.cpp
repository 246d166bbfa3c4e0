// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#include "glean/data_synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "glean/io.hpp"
#include "glean/rng.hpp"

namespace glean {

namespace {

struct Color {
  double r, g, b;
};

double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

Color lerp(const Color& a, const Color& b, double t) {
  return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

struct Ellipse {
  double cx, cy, rx, ry;
  Color color;
  double alpha = 1.0;

  // Antialiased coverage at (u, v); aa is the blend width in scene units.
  double coverage(double u, double v, double aa) const {
    const double dx = (u - cx) / rx;
    const double dy = (v - cy) / ry;
    const double d = std::sqrt(dx * dx + dy * dy);
    const double w = aa / std::min(rx, ry);
    return smoothstep(1.0 + w, 1.0 - w, d) * alpha;
  }
};

struct Stroke {
  double cx, cy, hw, hh, ang;
  Color color;
  double alpha;

  double coverage(double u, double v, double aa) const {
    const double c = std::cos(ang), s = std::sin(ang);
    const double px = c * (u - cx) + s * (v - cy);
    const double py = -s * (u - cx) + c * (v - cy);
    const double d = std::max(std::abs(px) - hw, std::abs(py) - hh);
    return smoothstep(aa, -aa, d) * alpha;
  }
};

Color random_color(Rng& rng, double lo, double hi) {
  return {rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)};
}

}  // namespace

ImageTensor synth_scene(uint64_t seed, int size) {
  GLEAN_REQUIRE(size > 0, " scene size must be positive");
  Rng rng(seed);

  // Background gradient.
  const Color bg0 = random_color(rng, 0.15, 0.85);
  const Color bg1 = random_color(rng, 0.15, 0.85);
  const double bga = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
  const double bgc = std::cos(bga), bgs = std::sin(bga);

  std::vector<Ellipse> blobs;
  const int nblobs = 2 + static_cast<int>(rng.below(3));
  for (int i = 0; i < nblobs; ++i) {
    Ellipse e;
    e.cx = rng.uniform(0.0, 1.0);
    e.cy = rng.uniform(0.0, 1.0);
    e.rx = rng.uniform(0.08, 0.3);
    e.ry = rng.uniform(0.08, 0.3);
    e.color = random_color(rng, 0.1, 0.9);
    e.alpha = rng.uniform(0.35, 0.8);
    blobs.push_back(e);
  }

  // Face geometry.
  Ellipse head;
  head.cx = 0.5 + rng.uniform(-0.05, 0.05);
  head.cy = 0.48 + rng.uniform(-0.05, 0.05);
  head.rx = 0.24 + rng.uniform(-0.04, 0.05);
  head.ry = 0.30 + rng.uniform(-0.04, 0.05);
  {
    const double base = rng.uniform(0.5, 0.95);
    head.color = {base, base * rng.uniform(0.72, 0.9), base * rng.uniform(0.55, 0.8)};
  }

  Ellipse hair;
  hair.cx = head.cx;
  hair.cy = head.cy - 0.62 * head.ry;
  hair.rx = head.rx * rng.uniform(1.05, 1.3);
  hair.ry = head.ry * rng.uniform(0.55, 0.8);
  hair.color = random_color(rng, 0.02, 0.35);

  const double eye_dx = 0.38 * head.rx;
  const double eye_y = head.cy - 0.12 * head.ry;
  const Color iris = random_color(rng, 0.05, 0.45);
  std::vector<Ellipse> eyes;
  for (int sgn : {-1, 1}) {
    Ellipse sclera{head.cx + sgn * eye_dx, eye_y, 0.105 * head.rx * 2.0,
                   0.07 * head.ry * 2.0, Color{0.93, 0.93, 0.9}, 1.0};
    Ellipse pupil{head.cx + sgn * eye_dx + rng.uniform(-0.01, 0.01), eye_y,
                  0.05 * head.rx * 2.0, 0.045 * head.ry * 2.0, iris, 1.0};
    eyes.push_back(sclera);
    eyes.push_back(pupil);
  }

  Ellipse mouth;
  mouth.cx = head.cx + rng.uniform(-0.01, 0.01);
  mouth.cy = head.cy + 0.48 * head.ry;
  mouth.rx = head.rx * rng.uniform(0.3, 0.45);
  mouth.ry = head.ry * rng.uniform(0.05, 0.1);
  mouth.color = {rng.uniform(0.45, 0.75), rng.uniform(0.1, 0.3), rng.uniform(0.15, 0.35)};

  std::vector<Stroke> strokes;
  const int nstrokes = static_cast<int>(rng.below(3));
  for (int i = 0; i < nstrokes; ++i) {
    Stroke s;
    s.cx = rng.uniform(0.0, 1.0);
    s.cy = rng.uniform(0.0, 1.0);
    s.hw = rng.uniform(0.1, 0.35);
    s.hh = rng.uniform(0.004, 0.02);
    s.ang = rng.uniform(0.0, 3.14159265358979323846);
    s.color = random_color(rng, 0.1, 0.9);
    s.alpha = rng.uniform(0.25, 0.5);
    strokes.push_back(s);
  }

  const double aa = 1.5 / size;
  ImageTensor img({size, size, 3});
  for (int y = 0; y < size; ++y) {
    const double v = (y + 0.5) / size;
    for (int x = 0; x < size; ++x) {
      const double u = (x + 0.5) / size;
      const double t = std::clamp(0.5 + 0.7 * ((u - 0.5) * bgc + (v - 0.5) * bgs),
                                  0.0, 1.0);
      Color px = lerp(bg0, bg1, t);
      for (const auto& b : blobs) px = lerp(px, b.color, b.coverage(u, v, aa));
      for (const auto& s : strokes) px = lerp(px, s.color, s.coverage(u, v, aa));
      px = lerp(px, hair.color, hair.coverage(u, v, aa));
      px = lerp(px, head.color, head.coverage(u, v, aa));
      for (const auto& e : eyes) {
        // Eyes only exist on the face; gate on head coverage.
        const double on = head.coverage(u, v, aa);
        px = lerp(px, e.color, e.coverage(u, v, aa) * on);
      }
      px = lerp(px, mouth.color, mouth.coverage(u, v, aa) * head.coverage(u, v, aa));

      const double rad = std::sqrt((u - 0.5) * (u - 0.5) + (v - 0.5) * (v - 0.5));
      const double vig = 1.0 - 0.22 * smoothstep(0.45, 0.85, rad);
      img(y, x, 0) = static_cast<float>(std::clamp(px.r * vig, 0.0, 1.0));
      img(y, x, 1) = static_cast<float>(std::clamp(px.g * vig, 0.0, 1.0));
      img(y, x, 2) = static_cast<float>(std::clamp(px.b * vig, 0.0, 1.0));
    }
  }
  return img;
}

void write_synth_dataset(const std::string& dir, int count, int size,
                         uint64_t seed) {
  GLEAN_REQUIRE(count > 0, " need a positive scene count");
  std::filesystem::create_directories(dir);
  for (int i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "scene_%05d.png", i);
    const ImageTensor img = synth_scene(mix_seed(seed, 0xda7a, static_cast<uint64_t>(i)), size);
    write_png(dir + "/" + name, img);
  }
}

}  // namespace glean
