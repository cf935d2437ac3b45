#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace tautline {

/// Seeded generator with platform-independent streams.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The standard distributions are implementation-defined, so the
/// transforms below are written out explicitly.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 1) : engine_(seed) {}

  // Substream for replicate r of a study seeded with `seed`.
  // Seeds are passed through splitmix64 so (s, r + 1) and (s + 1, r) differ.
  static Rng substream(std::uint64_t seed, std::uint64_t replicate) {
    return Rng(splitmix64(splitmix64(seed) ^ (replicate + 0x632be59bd9b4e019ULL)));
  }

  static constexpr std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // Uniform on (0, 1).
  double uniform_open() {
    double u = 0.0;
    while (u == 0.0) u = uniform();
    return u;
  }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n; }

  // Box-Muller; the second variate of each pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }
  double normal(double mean, double sd) { return mean + sd * normal(); }

  double cauchy(double location, double scale) {
    return location + scale * std::tan(std::numbers::pi * (uniform_open() - 0.5));
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Sequential inversion of the Poisson CDF, split into chunks of mean at
  // most 500 so exp(-rate) never underflows.
  std::uint64_t poisson(double rate) {
    std::uint64_t total = 0;
    while (rate > 500.0) {
      total += poisson_small(500.0);
      rate -= 500.0;
    }
    return total + poisson_small(rate);
  }

 private:
  std::uint64_t poisson_small(double rate) {
    if (rate <= 0.0) return 0;
    const double u = uniform();
    double p = std::exp(-rate);
    double cdf = p;
    std::uint64_t k = 0;
    while (u >= cdf) {
      ++k;
      p *= rate / static_cast<double>(k);
      cdf += p;
      if (p == 0.0 && cdf <= u) break;
    }
    return k;
  }

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace tautline
