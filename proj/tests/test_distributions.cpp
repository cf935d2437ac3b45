#include <gtest/gtest.h>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/poisson.hpp>
#include <cmath>
#include <cstdint>

#include "tautline/distributions.hpp"

using namespace tautline;

namespace {

void expect_rel(double got, long double want, double tol, const char* what, std::int64_t x) {
  if (want < 1e-280L) return;
  EXPECT_LE(std::abs(static_cast<long double>(got) - want) / want, tol) << what << " at x=" << x;
}

}  // namespace

TEST(Distributions, BinomialMatchesIncompleteBeta) {
  for (std::int64_t N : {1, 2, 7, 50, 333, 2048, 10000}) {
    for (double p : {0.001, 0.1, 0.25, 0.5, 0.9, 0.999}) {
      const boost::math::binomial_distribution<long double> ref(static_cast<long double>(N), p);
      const std::int64_t step = std::max<std::int64_t>(1, N / 97);
      for (std::int64_t x = 0; x <= N; x += step) {
        const long double lower = boost::math::cdf(ref, static_cast<long double>(x));
        const long double upper = x == 0 ? 1.0L : boost::math::cdf(boost::math::complement(ref, static_cast<long double>(x - 1)));
        expect_rel(dist::binomial_cdf(x, N, p), lower, 1e-12, "cdf", x);
        expect_rel(dist::binomial_sf(x, N, p), upper, 1e-12, "sf", x);
      }
    }
  }
}

TEST(Distributions, PoissonMatchesIncompleteGamma) {
  for (double rate : {1e-4, 0.3, 1.0, 4.5, 60.0, 999.0, 10000.0}) {
    const boost::math::poisson_distribution<long double> ref(rate);
    const auto top = static_cast<std::int64_t>(rate + 15.0 * std::sqrt(rate) + 30.0);
    const std::int64_t step = std::max<std::int64_t>(1, top / 150);
    for (std::int64_t x = 0; x <= top; x += step) {
      const long double lower = boost::math::cdf(ref, static_cast<long double>(x));
      const long double upper = x == 0 ? 1.0L : boost::math::cdf(boost::math::complement(ref, static_cast<long double>(x - 1)));
      expect_rel(dist::poisson_cdf(x, rate), lower, 1e-12, "cdf", x);
      expect_rel(dist::poisson_sf(x, rate), upper, 1e-12, "sf", x);
    }
  }
}

TEST(Distributions, DegenerateParameters) {
  EXPECT_EQ(dist::binomial_cdf(0, 5, 0.0), 1.0);
  EXPECT_EQ(dist::binomial_sf(5, 5, 1.0), 1.0);
  EXPECT_EQ(dist::binomial_cdf(4, 5, 1.0), 0.0);
  EXPECT_EQ(dist::poisson_cdf(0, 0.0), 1.0);
  EXPECT_EQ(dist::poisson_sf(1, 0.0), 0.0);
  EXPECT_EQ(dist::binomial_cdf(-1, 5, 0.5), 0.0);
  EXPECT_EQ(dist::binomial_cdf(5, 5, 0.5), 1.0);
  EXPECT_THROW(dist::binomial_cdf(0, 5, 1.5), InvalidParameter);
  EXPECT_THROW(dist::poisson_cdf(0, -1.0), InvalidParameter);
}

TEST(Distributions, QuantilesAreMinimal) {
  for (std::int64_t N : {1, 4, 64, 1000}) {
    for (double p : {0.1, 0.5, 0.9}) {
      for (double a : {0.001, 0.25, 0.5, 0.999}) {
        const auto q = dist::binomial_quantile(a, N, p);
        EXPECT_GE(dist::binomial_cdf(q, N, p), a);
        if (q > 0) EXPECT_LT(dist::binomial_cdf(q - 1, N, p), a);
        const auto s = dist::binomial_quantile(a, N, p, true);
        EXPECT_GT(dist::binomial_cdf(s, N, p), a);
        if (s > 0) EXPECT_LE(dist::binomial_cdf(s - 1, N, p), a);
      }
    }
  }
  for (double rate : {0.01, 3.0, 500.0, 50000.0}) {
    for (double a : {1e-6, 0.5, 1.0 - 1e-6}) {
      const auto q = dist::poisson_quantile(a, rate);
      EXPECT_GE(dist::poisson_cdf(q, rate), a);
      if (q > 0) EXPECT_LT(dist::poisson_cdf(q - 1, rate), a);
    }
  }
  // Bin(1, 0.5): cdf(0) = 0.5
  EXPECT_EQ(dist::binomial_quantile(0.75, 1, 0.5), 1);
  EXPECT_EQ(dist::binomial_quantile(0.25, 1, 0.5, true), 0);
}
