#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "tautline/error.hpp"

namespace tautline {

/// Exact binomial and Poisson distribution functions by log-space pmf
/// evaluation and tail summation away from the mode.
namespace dist {

namespace detail {

// Summation stops once the next term is below this fraction of the sum.
inline constexpr long double tail_eps = 1e-22L;

struct Binomial {
  std::int64_t N;
  long double p;

  [[nodiscard]] std::int64_t lo() const { return 0; }
  [[nodiscard]] std::int64_t hi() const { return N; }
  [[nodiscard]] std::int64_t mode() const {
    return std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor((N + 1) * p)), 0, N);
  }
  [[nodiscard]] long double log_pmf(std::int64_t k) const {
    if (k < 0 || k > N) return -std::numeric_limits<long double>::infinity();
    if (p == 0.0L) return k == 0 ? 0.0L : -std::numeric_limits<long double>::infinity();
    if (p == 1.0L) return k == N ? 0.0L : -std::numeric_limits<long double>::infinity();
    const auto kk = static_cast<long double>(k);
    const auto nn = static_cast<long double>(N);
    return std::lgamma(nn + 1.0L) - std::lgamma(kk + 1.0L) - std::lgamma(nn - kk + 1.0L) + kk * std::log(p) +
           (nn - kk) * std::log1p(-p);
  }
  // pmf(k+1) / pmf(k)
  [[nodiscard]] long double up_ratio(std::int64_t k) const {
    return static_cast<long double>(N - k) / static_cast<long double>(k + 1) * p / (1.0L - p);
  }
};

struct Poisson {
  long double rate;

  [[nodiscard]] std::int64_t lo() const { return 0; }
  [[nodiscard]] std::int64_t hi() const { return std::numeric_limits<std::int64_t>::max() / 2; }
  [[nodiscard]] std::int64_t mode() const { return static_cast<std::int64_t>(std::floor(rate)); }
  [[nodiscard]] long double log_pmf(std::int64_t k) const {
    if (k < 0) return -std::numeric_limits<long double>::infinity();
    if (rate == 0.0L) return k == 0 ? 0.0L : -std::numeric_limits<long double>::infinity();
    const auto kk = static_cast<long double>(k);
    return kk * std::log(rate) - rate - std::lgamma(kk + 1.0L);
  }
  [[nodiscard]] long double up_ratio(std::int64_t k) const { return rate / static_cast<long double>(k + 1); }
};

// P(S <= x) summed downward from x; requires x below the mode.
template <class D>
long double sum_down(const D& d, std::int64_t x) {
  long double term = std::exp(d.log_pmf(x));
  long double sum = term;
  for (std::int64_t k = x; k > d.lo() && term > tail_eps * sum; --k) {
    term /= d.up_ratio(k - 1);
    sum += term;
  }
  return sum;
}

// P(S >= x) summed upward from x; requires x above the mode.
template <class D>
long double sum_up(const D& d, std::int64_t x) {
  long double term = std::exp(d.log_pmf(x));
  long double sum = term;
  for (std::int64_t k = x; k < d.hi() && term > tail_eps * sum; ++k) {
    term *= d.up_ratio(k);
    sum += term;
  }
  return sum;
}

template <class D>
long double cdf(const D& d, std::int64_t x) {
  if (x < d.lo()) return 0.0L;
  if (x >= d.hi()) return 1.0L;
  if (x < d.mode()) return std::min(1.0L, sum_down(d, x));
  return std::max(0.0L, 1.0L - sum_up(d, x + 1));
}

template <class D>
long double sf(const D& d, std::int64_t x) {
  if (x <= d.lo()) return 1.0L;
  if (x > d.hi()) return 0.0L;
  if (x > d.mode()) return std::min(1.0L, sum_up(d, x));
  return std::max(0.0L, 1.0L - sum_down(d, x - 1));
}

// Smallest x with cdf(x) >= a (or > a when strict).
template <class D>
std::int64_t quantile(const D& d, long double a, bool strict) {
  const auto ok = [&](std::int64_t x) {
    const long double c = cdf(d, x);
    return strict ? c > a : c >= a;
  };
  std::int64_t lo = d.lo() - 1;  // !ok(lo) by convention
  std::int64_t step = 1;
  std::int64_t hi = std::max(d.mode(), d.lo());
  while (!ok(hi)) {
    lo = hi;
    if (hi >= d.hi()) return d.hi();
    hi = std::min(d.hi(), hi + step);
    step *= 2;
  }
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    (ok(mid) ? hi : lo) = mid;
  }
  return hi;
}

inline void require_binomial(std::int64_t N, double p) {
  if (N < 0) throw InvalidParameter("binomial: N must be >= 0");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidParameter("binomial: p must lie in [0, 1]");
}

inline void require_poisson(double rate) {
  if (!(rate >= 0.0) || !std::isfinite(rate)) throw InvalidParameter("poisson: rate must be finite and >= 0");
}

}  // namespace detail

inline double binomial_pmf(std::int64_t k, std::int64_t N, double p) {
  detail::require_binomial(N, p);
  return static_cast<double>(std::exp(detail::Binomial{N, p}.log_pmf(k)));
}

/// P(S <= x) for S ~ Bin(N, p).
inline double binomial_cdf(std::int64_t x, std::int64_t N, double p) {
  detail::require_binomial(N, p);
  return static_cast<double>(detail::cdf(detail::Binomial{N, p}, x));
}

/// P(S >= x) for S ~ Bin(N, p).
inline double binomial_sf(std::int64_t x, std::int64_t N, double p) {
  detail::require_binomial(N, p);
  return static_cast<double>(detail::sf(detail::Binomial{N, p}, x));
}

/// Smallest x with P(S <= x) >= a, or > a when `strict`.
inline std::int64_t binomial_quantile(double a, std::int64_t N, double p, bool strict = false) {
  detail::require_binomial(N, p);
  return detail::quantile(detail::Binomial{N, p}, a, strict);
}

inline double poisson_pmf(std::int64_t k, double rate) {
  detail::require_poisson(rate);
  return static_cast<double>(std::exp(detail::Poisson{rate}.log_pmf(k)));
}

inline double poisson_cdf(std::int64_t x, double rate) {
  detail::require_poisson(rate);
  return static_cast<double>(detail::cdf(detail::Poisson{rate}, x));
}

inline double poisson_sf(std::int64_t x, double rate) {
  detail::require_poisson(rate);
  return static_cast<double>(detail::sf(detail::Poisson{rate}, x));
}

inline std::int64_t poisson_quantile(double a, double rate, bool strict = false) {
  detail::require_poisson(rate);
  return detail::quantile(detail::Poisson{rate}, a, strict);
}

}  // namespace dist

}  // namespace tautline
