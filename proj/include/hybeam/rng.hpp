// SPDX-License-Identifier: Apache-2.0
//
// Deterministic RNG substreams. Every stochastic quantity in the simulator is
// drawn from a stream keyed by (master seed, realization, user, BS) so that
// parallel generation is order-independent and repeatable.

#pragma once

#include <cstdint>
#include <random>

#include "hybeam/common.hpp"

namespace hybeam {

// splitmix64; used only to mix stream keys into engine seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_key(std::uint64_t seed, std::uint64_t a,
                             std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ (a + 0x100000001b3ULL));
  h = splitmix64(h ^ (b + 0xcbf29ce484222325ULL));
  h = splitmix64(h ^ (c + 0x2545f4914f6cdd1dULL));
  return h;
}

// One substream. Samplers are written out explicitly (not std::*_distribution)
// so that a given seed produces the same values on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  static Rng substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                       std::uint64_t c = 0) {
    return Rng(mix_key(seed, a, b, c));
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller (fixed two-uniform consumption per draw).
  // 1 - u1 lies in (0, 1], so the log argument never vanishes.
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * kPi * u2);
  }

  // CN(0,1): unit-variance circularly symmetric complex Gaussian.
  cplx cnormal() {
    const double re = normal();
    const double im = normal();
    return cplx(re / std::sqrt(2.0), im / std::sqrt(2.0));
  }

  // Laplace(0, scale) truncated to [-cut, cut], sampled by inverse CDF
  // (single uniform consumed per draw).
  double laplace_truncated(double scale, double cut) {
    const double u = uniform() - 0.5;                      // (-0.5, 0.5)
    const double tail = 1.0 - std::exp(-cut / scale);      // truncated mass
    const double s = (u < 0.0) ? -1.0 : 1.0;
    return -s * scale * std::log1p(-2.0 * std::abs(u) * tail);
  }

 private:
  std::mt19937_64 eng_;
};

} // namespace hybeam
