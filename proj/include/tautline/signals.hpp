#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstddef>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tautline/error.hpp"
#include "tautline/random.hpp"

namespace tautline {

enum class Signal { blocks, bumps, heavisine, doppler };

inline Signal parse_signal(const std::string& s) {
  if (s == "blocks") return Signal::blocks;
  if (s == "bumps") return Signal::bumps;
  if (s == "heavisine") return Signal::heavisine;
  if (s == "doppler") return Signal::doppler;
  throw InvalidParameter("unknown signal '" + s + "' (expected blocks, bumps, heavisine or doppler)");
}

inline std::string to_string(Signal s) {
  switch (s) {
    case Signal::blocks:
      return "blocks";
    case Signal::bumps:
      return "bumps";
    case Signal::heavisine:
      return "heavisine";
    case Signal::doppler:
      return "doppler";
  }
  return "blocks";
}

namespace detail {

inline constexpr std::array<double, 11> dj_positions{0.1, 0.13, 0.15, 0.23, 0.25, 0.40, 0.44, 0.65, 0.76, 0.78, 0.81};
inline constexpr std::array<double, 11> blocks_heights{4, -5, 3, -4, 5, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2};
inline constexpr std::array<double, 11> bumps_heights{4, 5, 3, 4, 5, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2};
inline constexpr std::array<double, 11> bumps_widths{0.005, 0.005, 0.006, 0.01, 0.01, 0.03,
                                                     0.01,  0.01,  0.005, 0.008, 0.005};

inline double sgn(double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); }

inline double raw_signal(Signal s, double t) {
  double f = 0.0;
  switch (s) {
    case Signal::blocks:
      for (std::size_t j = 0; j < dj_positions.size(); ++j) f += blocks_heights[j] * (1.0 + sgn(t - dj_positions[j])) / 2.0;
      return f;
    case Signal::bumps:
      for (std::size_t j = 0; j < dj_positions.size(); ++j) {
        f += bumps_heights[j] * std::pow(1.0 + std::abs((t - dj_positions[j]) / bumps_widths[j]), -4.0);
      }
      return f;
    case Signal::heavisine:
      return 4.0 * std::sin(4.0 * std::numbers::pi * t) - sgn(t - 0.3) - sgn(0.72 - t);
    case Signal::doppler:
      return std::sqrt(t * (1.0 - t)) * std::sin(2.0 * std::numbers::pi * 1.05 / (t + 0.05));
  }
  return f;
}

}  // namespace detail

/// Donoho-Johnstone test signal at t = i/n, i = 1..n, affinely rescaled
/// to sample mean 0 and sample standard deviation 1.
inline std::vector<double> dj_signal(Signal s, std::size_t n) {
  if (n == 0) throw InvalidParameter("signal: n must be >= 1");
  std::vector<double> f(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = detail::raw_signal(s, static_cast<double>(i + 1) / static_cast<double>(n));
  if (n < 2) return {0.0};
  long double mean = 0.0L;
  for (double v : f) mean += v;
  mean /= static_cast<long double>(n);
  long double ss = 0.0L;
  for (double v : f) ss += (v - mean) * (v - mean);
  const long double sd = std::sqrt(ss / static_cast<long double>(n - 1));
  for (auto& v : f) v = static_cast<double>((v - mean) / sd);
  return f;
}

enum class Testbed { gaussian, cauchy, binary, poisson };

inline Testbed parse_testbed(const std::string& s) {
  if (s == "gaussian") return Testbed::gaussian;
  if (s == "cauchy") return Testbed::cauchy;
  if (s == "binary") return Testbed::binary;
  if (s == "poisson") return Testbed::poisson;
  throw InvalidParameter("unknown testbed '" + s + "' (expected gaussian, cauchy, binary or poisson)");
}

inline std::string to_string(Testbed t) {
  switch (t) {
    case Testbed::gaussian:
      return "gaussian";
    case Testbed::cauchy:
      return "cauchy";
    case Testbed::binary:
      return "binary";
    case Testbed::poisson:
      return "poisson";
  }
  return "gaussian";
}

inline constexpr double noise_scale = 0.4;

/// Mean of Y_i under the testbed: f itself for the location models, the
/// success probability or the rate otherwise.
inline std::vector<double> testbed_target(Testbed tb, std::span<const double> f) {
  std::vector<double> out(f.begin(), f.end());
  if (tb == Testbed::gaussian || tb == Testbed::cauchy || f.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(f.begin(), f.end());
  const double a = *lo_it;
  const double b = *hi_it;
  for (auto& v : out) {
    if (tb == Testbed::poisson) {
      v -= a;
    } else {
      v = b > a ? (v - a) / (b - a) : 0.5;
    }
  }
  return out;
}

/// True when the binary or Poisson transform of f is constant.
inline bool testbed_degenerate(Testbed tb, std::span<const double> f) {
  if (tb == Testbed::gaussian || tb == Testbed::cauchy || f.empty()) return false;
  const auto [lo_it, hi_it] = std::minmax_element(f.begin(), f.end());
  return *lo_it == *hi_it;
}

inline std::vector<double> gen_noise(Testbed tb, std::span<const double> f, Rng& rng) {
  const auto target = testbed_target(tb, f);
  std::vector<double> y(f.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    switch (tb) {
      case Testbed::gaussian:
        y[i] = rng.normal(target[i], noise_scale);
        break;
      case Testbed::cauchy:
        y[i] = rng.cauchy(target[i], noise_scale);
        break;
      case Testbed::binary:
        y[i] = rng.bernoulli(target[i]) ? 1.0 : 0.0;
        break;
      case Testbed::poisson:
        y[i] = static_cast<double>(rng.poisson(target[i]));
        break;
    }
  }
  return y;
}

inline std::vector<double> gen_noise(Testbed tb, std::span<const double> f, std::uint64_t seed) {
  Rng rng(seed);
  return gen_noise(tb, f, rng);
}

/// CSV with columns index, x, f_true, y; x = i/n.
inline void write_signal_csv(std::ostream& os, std::span<const double> f_true, std::span<const double> y) {
  if (f_true.size() != y.size()) throw InvalidData("signal csv: length mismatch");
  const auto n = static_cast<double>(y.size());
  os << "index,x,f_true,y\n" << std::setprecision(17);
  for (std::size_t i = 0; i < y.size(); ++i) {
    os << (i + 1) << ',' << static_cast<double>(i + 1) / n << ',' << f_true[i] << ',' << y[i] << '\n';
  }
}

}  // namespace tautline
