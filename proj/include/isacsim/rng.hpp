#ifndef ISACSIM_RNG_HPP
#define ISACSIM_RNG_HPP

#include <cmath>
#include <complex>
#include <cstdint>

namespace isacsim {

// Deterministic generator (xoshiro256++ seeded through splitmix64).
// std::mt19937 plus the standard distributions would be simpler, but the
// distribution output is implementation-defined and results must reproduce
// bit-for-bit across toolchains.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed) {
    uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
  }

  // Independent substream keyed by (seed, label). Forking does not disturb
  // the parent stream.
  Rng fork(uint64_t label) const {
    uint64_t sm = seed_ ^ (0x9e3779b97f4a7c15ULL * (label + 1));
    return Rng(splitmix64(sm));
  }

  uint64_t seed() const { return seed_; }

  uint64_t next_u64() {
    const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform on {0,...,n-1}. The floor construction keeps the draw count at
  // one word per call; the bias is far below anything the simulations resolve.
  uint32_t uniform_int(uint32_t n) {
    return static_cast<uint32_t>(uniform() * static_cast<double>(n));
  }

  // Standard normal via Box-Muller. No spare is cached so the consumption
  // pattern is always two uniforms per draw.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Circularly symmetric complex normal with E|x|^2 = variance.
  std::complex<double> cnormal(double variance) {
    const double s = std::sqrt(variance / 2.0);
    const double re = normal();
    const double im = normal();
    return {s * re, s * im};
  }

 private:
  static uint64_t splitmix64(uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  uint64_t seed_;
  uint64_t state_[4];
};

}  // namespace isacsim

#endif  // ISACSIM_RNG_HPP
