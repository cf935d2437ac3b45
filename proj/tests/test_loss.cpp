#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "tautline/loss.hpp"
#include "tautline/random.hpp"

using namespace tautline;

namespace {

template <class M>
double central_difference(const M& m, std::size_t i, double z, double h = 1e-6) {
  return (m.value(i, z + h) - m.value(i, z - h)) / (2.0 * h);
}

// Generic bisection on the naive pooled derivative, for comparison with the
// models' own inverses.
template <class M>
double bisect_upper(const M& m, IndexRange r, double t) {
  double lo = -1e6;
  double hi = 1e6;
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    (pooled_derivative(m, r, mid, Side::right) <= t ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace

TEST(QuadraticLoss, DerivativeRootAtDatum) {
  const QuadraticLoss m({5.0});
  EXPECT_EQ(m.derivative(0, 5.0), 0.0);
  EXPECT_EQ(upper_inverse(m, {0, 1}, 0.0), 5.0);
  EXPECT_EQ(pooled_derivative(m, {0, 1}, 7.0, Side::right), 2.0);
}

TEST(QuadraticLoss, PooledInverseIsShiftedMean) {
  const QuadraticLoss m({0.0, 2.0});
  EXPECT_DOUBLE_EQ(upper_inverse(m, {0, 2}, 1.0), 1.5);
  EXPECT_DOUBLE_EQ(upper_inverse(m, {0, 2}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(upper_inverse(m, {0, 2}, -1.0), 0.5);
  EXPECT_DOUBLE_EQ(lower_inverse(m, {0, 2}, -1.0), 0.5);
  EXPECT_EQ(pooled_derivative(m, {0, 2}, 1.0, Side::right), 0.0);
  EXPECT_NEAR(bisect_upper(m, {0, 2}, 1.0), 1.5, 1e-9);
}

TEST(PseudoHuberLoss, DerivativeMatchesFormula) {
  const PseudoHuberLoss one({3.0}, 0.1);
  EXPECT_EQ(one.derivative(0, 3.0), 0.0);
  // z = 0.1 lies inside [min y, max y], where the coercive tails vanish.
  const PseudoHuberLoss m({0.0, 1.0}, 0.1);
  EXPECT_NEAR(m.derivative(0, 0.1), 0.1 / std::sqrt(0.02), 1e-15);
  EXPECT_NEAR(m.derivative(0, 0.1), 0.70710678118654746, 1e-12);
  EXPECT_NEAR(central_difference(m, 0, 0.1), m.derivative(0, 0.1), 1e-6);
  // With a single response both tails start at the datum.
  const PseudoHuberLoss single({0.0}, 0.1);
  EXPECT_NEAR(single.derivative(0, 0.1), 0.1 / std::sqrt(0.02) + 0.2, 1e-15);
}

TEST(PseudoHuberLoss, SymmetricPairPoolsAtMidpoint) {
  const PseudoHuberLoss m({0.0, 2.0}, 0.1);
  EXPECT_NEAR(upper_inverse(m, {0, 2}, 0.0), 1.0, 1e-12);
  EXPECT_NEAR(lower_inverse(m, {0, 2}, 0.0), 1.0, 1e-12);
}

TEST(PseudoHuberLoss, RejectsNonPositiveDelta) {
  EXPECT_THROW(PseudoHuberLoss({1.0}, 0.0), InvalidParameter);
  EXPECT_THROW(PseudoHuberLoss({1.0}, -1.0), InvalidParameter);
}

TEST(PseudoHuberLoss, TailsKeepDerivativeOnto) {
  const PseudoHuberLoss m({0.0, 1.0}, 0.5);
  EXPECT_NEAR(upper_inverse(m, {0, 2}, 1e6), 1.0 + (1e6 - 2.0) / 4.0, 1e3);
  EXPECT_LT(lower_inverse(m, {0, 2}, -1e6), -1e5);
}

TEST(ExpFamLoss, Derivatives) {
  EXPECT_EQ(ExpFamLoss({1.0}, Family::poisson).derivative(0, 0.0), 0.0);
  EXPECT_EQ(ExpFamLoss({1.0}, Family::bernoulli).derivative(0, 0.0), -0.5);
  const ExpFamLoss zero({0.0}, Family::poisson);
  for (double z : {-50.0, -1.0, 0.0, 3.0}) EXPECT_GT(zero.derivative(0, z), 0.0);
  EXPECT_THROW(lower_inverse(zero, {0, 1}, 0.0), CoercivityError);
}

TEST(ExpFamLoss, SupportIsValidated) {
  EXPECT_THROW(ExpFamLoss({0.5}, Family::poisson), InvalidData);
  EXPECT_THROW(ExpFamLoss({-1.0}, Family::poisson), InvalidData);
  EXPECT_THROW(ExpFamLoss({2.0}, Family::bernoulli), InvalidData);
  EXPECT_NO_THROW(ExpFamLoss({0.0, 1.0, 7.0}, Family::poisson));
}

TEST(ExpFamLoss, InverseMatchesBisection) {
  const ExpFamLoss m({0.0, 3.0, 1.0, 4.0}, Family::poisson);
  for (double t : {-5.0, -1.0, 0.0, 2.5, 30.0}) {
    EXPECT_NEAR(upper_inverse(m, {0, 4}, t), bisect_upper(m, {0, 4}, t), 1e-9);
  }
  const ExpFamLoss b({0.0, 1.0, 1.0}, Family::bernoulli);
  for (double t : {-1.9, -0.5, 0.0, 0.7}) {
    EXPECT_NEAR(upper_inverse(b, {0, 3}, t), bisect_upper(b, {0, 3}, t), 1e-9);
  }
}

TEST(CheckLoss, OneSidedDerivatives) {
  const CheckLoss m({1.0}, 0.25);
  EXPECT_EQ(m.derivative(0, 1.0, Side::right), 0.75);
  EXPECT_EQ(m.derivative(0, 1.0, Side::left), -0.25);
  EXPECT_EQ(m.value(0, 2.0), 0.75);
  EXPECT_EQ(m.value(0, 0.0), 0.25);
}

TEST(AllModels, OneSidedDerivativesOrderedAndMatchDifferences) {
  Rng rng(3);
  std::vector<double> y(10);
  std::vector<double> counts(10);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = rng.uniform(-2.0, 2.0);
    counts[i] = static_cast<double>(rng.poisson(3.0));
  }
  const QuadraticLoss q(y);
  const PseudoHuberLoss h(y, 0.3);
  const CheckLoss c(y, 0.3);
  const ExpFamLoss p(counts, Family::poisson);
  const auto rank = SmoothedLoss<CheckLoss>(c, 0.1);
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t i = rng.below(y.size());
    const double z = rng.uniform(-3.0, 3.0);
    EXPECT_NEAR(central_difference(q, i, z), q.derivative(i, z), 1e-6);
    EXPECT_NEAR(central_difference(h, i, z), h.derivative(i, z), 1e-6);
    EXPECT_NEAR(central_difference(p, i, z), p.derivative(i, z), 1e-6);
    EXPECT_NEAR(central_difference(rank, i, z), rank.derivative(i, z), 1e-6);
    EXPECT_LE(c.derivative(i, z, Side::left), c.derivative(i, z, Side::right));
    if (std::abs(z - y[i]) > 1e-5) {
      EXPECT_NEAR(central_difference(c, i, z), c.derivative(i, z, Side::right), 1e-6);
    }
  }
}

TEST(AllModels, PooledDerivativeEqualsNaiveSum) {
  Rng rng(4);
  std::vector<double> y(30);
  for (auto& v : y) v = rng.uniform(-1.0, 4.0);
  const QuadraticLoss q(y);
  const PseudoHuberLoss h(y, 0.2);
  for (int rep = 0; rep < 300; ++rep) {
    std::size_t a = rng.below(y.size());
    std::size_t b = rng.below(y.size());
    if (a > b) std::swap(a, b);
    const IndexRange r{a, b + 1};
    const double z = rng.uniform(-3.0, 6.0);
    EXPECT_NEAR(q.pooled_derivative(q.segment(r), z), pooled_derivative(q, r, z, Side::right), 1e-10);
    EXPECT_NEAR(h.pooled_derivative(h.segment(r), z), pooled_derivative(h, r, z, Side::left), 1e-10);
  }
}

TEST(AllModels, InversesBracketTheLevel) {
  Rng rng(6);
  std::vector<double> y(20);
  for (auto& v : y) v = rng.uniform(-1.0, 1.0);
  const PseudoHuberLoss h(y, 0.05);
  const auto s = smooth_loss(CheckLoss(y, 0.4), 0.01);
  for (int rep = 0; rep < 200; ++rep) {
    std::size_t a = rng.below(y.size());
    std::size_t b = rng.below(y.size());
    if (a > b) std::swap(a, b);
    const IndexRange r{a, b + 1};
    const double t = rng.uniform(-3.0, 3.0);
    const double lo = lower_inverse(h, r, t);
    const double hi = upper_inverse(h, r, t);
    EXPECT_LE(lo, hi);
    EXPECT_GE(pooled_derivative(h, r, lo, Side::right), t - 1e-9);
    EXPECT_LE(pooled_derivative(h, r, hi, Side::right), t + 1e-9);
    const double slo = lower_inverse(s, r, t);
    const double shi = upper_inverse(s, r, t);
    EXPECT_LE(slo, shi);
    EXPECT_NEAR(pooled_derivative(s, r, slo, Side::right), t, 1e-7);
    EXPECT_NEAR(pooled_derivative(s, r, shi, Side::right), t, 1e-7);
  }
}

TEST(SmoothedLoss, QuadraticGainsConstantOffset) {
  const QuadraticLoss q({0.3});
  const double eps = 0.1;
  const auto s = smooth_loss(q, eps);
  for (double z : {-2.0, 0.0, 0.3, 1.7}) {
    EXPECT_NEAR(s.value(0, z), q.value(0, z) + eps * eps / 6.0, 1e-14);
  }
  EXPECT_NEAR(s.derivative(0, 0.3), 0.0, 1e-14);
}

TEST(SmoothedLoss, AbsoluteValueAtDatum) {
  // rho(z) = |z|/2 is the check loss at beta = 1/2.
  const CheckLoss c({1.0}, 0.5);
  for (double eps : {0.1, 0.01, 0.001}) {
    const auto s = smooth_loss(c, eps);
    EXPECT_NEAR(s.value(0, 1.0), eps / 4.0, 1e-15);
  }
}

TEST(SmoothedLoss, ConvergesAsEpsShrinks) {
  const PseudoHuberLoss h({0.0, 1.0}, 0.2);
  const CheckLoss c({0.0, 1.0}, 0.3);
  for (double z : {-0.4, 0.0, 0.6, 2.5}) {
    double prev_h = INFINITY;
    double prev_c = INFINITY;
    for (double eps : {1e-1, 1e-2, 1e-3}) {
      const double dh = std::abs(smooth_loss(h, eps).value(1, z) - h.value(1, z));
      const double dc = std::abs(smooth_loss(c, eps).value(1, z) - c.value(1, z));
      EXPECT_LE(dh, prev_h + 1e-12);
      EXPECT_LE(dc, prev_c + 1e-12);
      prev_h = dh;
      prev_c = dc;
    }
    EXPECT_LT(prev_h, 1e-5);
    EXPECT_LT(prev_c, 1e-3);
  }
}

TEST(SmoothedLoss, RejectsNonPositiveEps) { EXPECT_THROW(smooth_loss(QuadraticLoss({1.0}), 0.0), InvalidParameter); }

TEST(BlockedLoss, BlockDerivativeIsWithinBlockSum) {
  const QuadraticLoss q({1.0, 3.0, 4.0});
  const BlockedLoss<QuadraticLoss> b(q, {0, 2, 3});
  EXPECT_EQ(b.size(), 2u);
  EXPECT_EQ(b.derivative(0, 2.0, Side::right), 0.0);
  EXPECT_EQ(b.value(0, 2.0), 1.0);
  EXPECT_DOUBLE_EQ(b.lower_inverse(b.segment({0, 2}), 0.0), 8.0 / 3.0);
  EXPECT_THROW(BlockedLoss<QuadraticLoss>(q, {0, 2}), InvalidData);
}
