#ifndef TERRA_CORE_RNG_HPP
#define TERRA_CORE_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace terra {

// mt19937_64 is bit-exact across platforms, but std::*_distribution is not.
// Traces must be reproducible byte-for-byte, so the transforms live here.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 bits of mantissa.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n).
  uint64_t uniform_index(uint64_t n) {
    // Rejection-free modulo is fine here; n is tiny compared to 2^64.
    return gen_() % n;
  }

  double exponential(double rate) {
    double u = uniform01();
    return -std::log1p(-u) / rate;
  }

  // Box-Muller; consumes two uniforms per call for determinism.
  double normal(double mean, double stddev) {
    double u1 = uniform01();
    double u2 = uniform01();
    if (u1 < 1e-300) u1 = 1e-300;
    double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    return mean + stddev * z;
  }

  double lognormal(double mu, double sigma) { return std::exp(normal(mu, sigma)); }

  // Pareto with scale xm and shape alpha (heavy-tailed for alpha near 1).
  double pareto(double alpha, double xm) {
    double u = uniform01();
    if (u >= 1.0) u = std::nextafter(1.0, 0.0);
    return xm / std::pow(1.0 - u, 1.0 / alpha);
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace terra

#endif
