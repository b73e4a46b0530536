#pragma once

#include <cmath>
#include <cstdint>

namespace rase {

// Counter-based keyed generator built on the splitmix64 finalizer. A stream is
// identified by (seed, a, b, c); equal keys give equal output sequences no
// matter which thread draws them. Ensemble fitting keys streams by
// (iteration t, learner j, candidate k); other components use fixed domain
// tags for `a` so streams never collide across uses.
class SubstreamRng {
 public:
  SubstreamRng(uint64_t seed, uint64_t a, uint64_t b, uint64_t c)
      : counter_(derive_key(seed, a, b, c)) {}

  uint64_t next_u64() {
    counter_ += 0x9E3779B97F4A7C15ULL;
    return mix(counter_);
  }

  // Uniform on [0, 1) with 53 random bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Unbiased integer in [0, bound) by rejection.
  uint64_t next_below(uint64_t bound) {
    const uint64_t threshold = -bound % bound;
    for (;;) {
      uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // Box-Muller; u1 is kept away from 0 so the log stays finite.
    double u1 = next_unit();
    double u2 = next_unit();
    if (u1 < 0x1.0p-53) u1 = 0x1.0p-53;
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  // Marsaglia-Tsang; shape < 1 handled through the boost relation.
  double next_gamma(double shape, double scale) {
    if (shape < 1.0) {
      const double u = std::max(next_unit(), 0x1.0p-53);
      return next_gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = next_gaussian();
      double t = 1.0 + c * x;
      if (t <= 0.0) continue;
      double v = t * t * t;
      double u = std::max(next_unit(), 0x1.0p-53);
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
    }
  }

  static uint64_t mix(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  static uint64_t derive_key(uint64_t seed, uint64_t a, uint64_t b, uint64_t c) {
    uint64_t k = mix(seed + 0x9E3779B97F4A7C15ULL);
    k = mix(k ^ (0xD1B54A32D192ED03ULL * (a + 1)));
    k = mix(k ^ (0x8CB92BA72F3D8DD7ULL * (b + 1)));
    k = mix(k
            ^ (0xABCB39AABA462C7DULL * (c + 1)));
    return k;
  }

  uint64_t counter_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Domain tags for the `a` slot of SubstreamRng so unrelated streams cannot
// collide with the (t, j, k) substreams of ensemble fitting (t stays tiny).
namespace rng_domain {
inline constexpr uint64_t kSimulation = 0x53494D5F44415441ULL;
inline constexpr uint64_t kReplicate = 0x5245504C49434154ULL;
}  // namespace rng_domain

// Stable substream seed for replicate r of a benchmark run; replicate sets
// extend without recomputing earlier ones.
inline uint64_t replicate_seed(uint64_t master_seed, uint64_t replicate) {
  return SubstreamRng::mix(master_seed ^ SubstreamRng::mix(rng_domain::kReplicate + replicate));
}

}  // namespace rase
