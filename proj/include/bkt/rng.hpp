#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace bkt {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Independent stream seed for replicate `index` of a run seeded with `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 1));
}

// Seeded random stream with transforms pinned in this codebase so that a
// given seed reproduces the same draw sequence everywhere.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : gen_(seed) {}

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1), safe under log().
  double uniform_open() {
    return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; one spare is cached between calls.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Laplace(loc, scale) by inverse CDF.
  double laplace(double loc, double scale) {
    const double u = uniform_open() - 0.5;
    return loc - scale * (u < 0 ? -1.0 : 1.0) * std::log1p(-2.0 * std::fabs(u));
  }

  // Uniform integer in [0, n) by rejection; n must be positive.
  std::uint64_t bounded(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = gen_();
    } while (v >= limit);
    return v % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

inline double normal_cdf(double t, double mean = 0.0, double sd = 1.0) {
  return 0.5 * std::erfc(-(t - mean) / (sd * M_SQRT2));
}

inline double laplace_cdf(double t, double loc, double scale) {
  const double u = (t - loc) / scale;
  return u < 0 ? 0.5 * std::exp(u) : 1.0 - 0.5 * std::exp(-u);
}

}  // namespace bkt
