// Copyright (c) the glean-cpp contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

#include "glean/common.hpp"

namespace glean {

// Deterministic RNG. mt19937_64 produces a standard-defined bit stream, but the
// std::*_distribution mappings are implementation-defined, so the uniform /
// normal transforms live here. Identical seeds give identical draws on every
// platform and standard library.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1): 53 mantissa bits.
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Integer in [0, n).
  uint64_t below(uint64_t n) {
    GLEAN_REQUIRE(n > 0, " below(0)");
    // Rejection sampling keeps the draw unbiased.
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return x % n;
  }

  // Standard normal via Box-Muller. One value per call; the pair's second
  // member is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Serialize / restore the full engine state (for checkpoints). The cached
  // Box-Muller spare is written as raw bits so the round trip is exact.
  std::string state_string() const {
    std::ostringstream os;
    os << eng_;
    os << ' ' << (have_spare_ ? 1 : 0) << ' ' << std::bit_cast<uint64_t>(spare_);
    return os.str();
  }
  void restore_state(const std::string& s) {
    std::istringstream is(s);
    is >> eng_;
    int flag = 0;
    uint64_t sp = 0;
    is >> flag >> sp;
    GLEAN_REQUIRE(!is.fail(), " bad rng state string");
    have_spare_ = flag != 0;
    spare_ = std::bit_cast<double>(sp);
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// splitmix64: stateless mix used to derive independent per-item seeds from
// (base seed, step, index) without sharing stream state.
inline uint64_t mix_seed(uint64_t a, uint64_t b, uint64_t c) {
  uint64_t x = a;
  auto mix = [](uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  x = mix(x ^ mix(b));
  x = mix(x ^ mix(c));
  return x;
}

}  // namespace glean
