#pragma once

#include <cstdint>
#include <random>

namespace seerdrive {

// Deterministic RNG. Distributions are hand-rolled on top of mt19937_64 raw
// draws because libstdc++ distribution outputs are implementation-defined;
// this keeps every seeded artifact byte-stable across toolchains.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(mix(seed)) {}
  Rng(uint64_t seed, uint64_t stream) : eng_(mix(mix(seed) ^ (0x9e3779b97f4a7c15ULL * (stream + 1)))) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(eng_() >> 11) * (1.0 / 9007199254740992.0);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  uint64_t below(uint64_t n) {
    // Multiply-shift; bias is negligible for the small n used here.
    return static_cast<uint64_t>((static_cast<__uint128_t>(eng_()) * n) >> 64);
  }

  // Standard normal via Box-Muller (one value per call, cached pair).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  static uint64_t mix(uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace seerdrive
