#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "tautline/loss.hpp"
#include "tautline/random.hpp"
#include "tautline/taut_string.hpp"
#include "tautline/verify.hpp"

using namespace tautline;

namespace {

// Least-squares TV fit via its dual: f = y - D'u with |u_j| <= lambda_j,
// minimizing |y - D'u|^2 / 2 by exact coordinate descent on u.
std::vector<double> dual_tv_oracle(const std::vector<double>& y, const std::vector<double>& lam) {
  const std::size_t n = y.size();
  std::vector<double> u(n > 0 ? n - 1 : 0, 0.0);
  const auto fit = [&] {
    std::vector<double> f(y);
    for (std::size_t j = 0; j + 1 < n; ++j) {
      f[j] += u[j];
      f[j + 1] -= u[j];
    }
    return f;
  };
  for (int sweep = 0; sweep < 200000; ++sweep) {
    double change = 0.0;
    for (std::size_t j = 0; j + 1 < n; ++j) {
      // f_j = y_j + u_j - u_{j-1}, f_{j+1} = y_{j+1} + u_{j+1} - u_j.
      const double a = y[j] - (j > 0 ? u[j - 1] : 0.0);
      const double b = y[j + 1] + (j + 2 < n ? u[j + 1] : 0.0);
      // minimize (a + u)^2 + (b - u)^2 over |u| <= lam.
      const double target = std::clamp((b - a) / 2.0, -lam[j], lam[j]);
      change = std::max(change, std::abs(target - u[j]));
      u[j] = target;
    }
    if (change < 1e-15) break;
  }
  return fit();
}

std::vector<double> random_vector(Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

}  // namespace

TEST(TautString, SinglePointReturnsDatum) {
  const QuadraticLoss m({7.0});
  const auto fit = fit_taut(m, LambdaVector(1, {}));
  ASSERT_EQ(fit.values.size(), 1u);
  EXPECT_DOUBLE_EQ(fit.values[0], 7.0);
}

TEST(TautString, TwoPointsSmallPenaltyMovesTowardEachOther) {
  const QuadraticLoss m({0.0, 2.0});
  const auto fit = fit_taut(m, LambdaVector::constant(2, 0.5));
  EXPECT_DOUBLE_EQ(fit.values[0], 0.5);
  EXPECT_DOUBLE_EQ(fit.values[1], 1.5);
  EXPECT_NEAR(fit.cumsum_right[0], 0.5, 1e-15);
  EXPECT_NEAR(fit.objective, 0.125 + 0.125 + 0.5, 1e-15);
}

TEST(TautString, TwoPointsLargePenaltyPools) {
  const QuadraticLoss m({0.0, 2.0});
  const auto fit = fit_taut(m, LambdaVector::constant(2, 2.0));
  EXPECT_DOUBLE_EQ(fit.values[0], 1.0);
  EXPECT_DOUBLE_EQ(fit.values[1], 1.0);
  EXPECT_EQ(fit.segments.size(), 1u);
}

TEST(TautString, ConstantDataGiveConstantFit) {
  const std::vector<double> y(9, 3.25);
  for (double lam : {1e-3, 1.0, 1e3}) {
    const auto q = fit_taut(QuadraticLoss(y), LambdaVector::constant(y.size(), lam));
    const auto h = fit_taut(PseudoHuberLoss(y, 0.1), LambdaVector::constant(y.size(), lam));
    for (std::size_t i = 0; i < y.size(); ++i) {
      EXPECT_DOUBLE_EQ(q.values[i], 3.25);
      EXPECT_NEAR(h.values[i], 3.25, 1e-12);
    }
  }
}

TEST(TautString, MatchesDualOracleOnRandomQuadraticInstances) {
  Rng rng(11);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t n = 1 + rng.below(25);
    const auto y = random_vector(rng, n, -3.0, 3.0);
    const auto lam = random_vector(rng, n - 1, 0.01, 2.0);
    const LambdaVector lambda(n, lam);
    const auto fit = fit_taut(QuadraticLoss(y), lambda);
    const auto oracle = dual_tv_oracle(y, lam);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(fit.values[i], oracle[i], 1e-8) << "rep " << rep << " i " << i;
    EXPECT_TRUE(check_lemma22(QuadraticLoss(y), lambda, fit.values).pass);
  }
}

TEST(TautString, LoopInvariantsHoldAfterEveryStep) {
  Rng rng(5);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 2 + rng.below(30);
    const auto y = random_vector(rng, n, -2.0, 2.0);
    const LambdaVector lambda(n, random_vector(rng, n - 1, 0.05, 1.5));
    const PseudoHuberLoss m(y, 0.2);
    TautStringSolver<PseudoHuberLoss> solver(m, lambda);
    solver.initialize();
    for (;;) {
      const auto p = solver.snapshot();
      // agreement on the prefix, strict order beyond it
      for (std::size_t i = 0; i < p.k_o; ++i) ASSERT_EQ(p.f[i], p.g[i]);
      for (std::size_t i = p.k_o; i < p.K; ++i) ASSERT_LT(p.f[i], p.g[i]) << "rep " << rep << " K " << p.K;
      // monotone tails
      for (std::size_t i = p.k_o + 1; i < p.K; ++i) {
        ASSERT_GE(p.f[i - 1], p.f[i]);
        ASSERT_LE(p.g[i - 1], p.g[i]);
      }
      // partial sums: g below +lambda, f above -lambda, equality at segment ends
      double sf = 0.0;
      double sg = 0.0;
      for (std::size_t k = 1; k <= p.K; ++k) {
        sf += m.derivative(k - 1, p.f[k - 1]);
        sg += m.derivative(k - 1, p.g[k - 1]);
        const double lk = lambda.gap(k);
        if (k > p.k_o) {
          EXPECT_LE(sg, lk + 1e-10);
          EXPECT_GE(sf, -lk - 1e-10);
        }
        if (k == p.k_o && k < p.K) {
          EXPECT_NEAR(std::abs(p.Lambda_o), lk, 1e-10);
        }
      }
      for (const auto& r : p.g_segments) {
        double s = 0.0;
        for (std::size_t i = 0; i < r.end; ++i) s += m.derivative(i, p.g[i]);
        EXPECT_NEAR(s, lambda.gap(r.end), 1e-9);
      }
      for (const auto& r : p.f_segments) {
        double s = 0.0;
        for (std::size_t i = 0; i < r.end; ++i) s += m.derivative(i, p.f[i]);
        EXPECT_NEAR(s, -lambda.gap(r.end), 1e-9);
      }
      if (solver.done()) break;
      solver.advance();
    }
    EXPECT_TRUE(check_lemma22(m, lambda, solver.solution()).pass);
  }
}

TEST(TautString, PoolingNeverRaisesUpperCandidate) {
  Rng rng(8);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 3 + rng.below(20);
    const auto y = random_vector(rng, n, 0.0, 5.0);
    const LambdaVector lambda = LambdaVector::constant(n, 0.7);
    const QuadraticLoss m(y);
    TautStringSolver<QuadraticLoss> solver(m, lambda);
    solver.initialize();
    while (!solver.done()) {
      const auto before = solver.g_pieces();
      solver.extend_g();
      const auto& after = solver.g_pieces();
      const auto& merged = after.back();
      for (const auto& p : before) {
        if (p.range.begin >= merged.range.begin) {
          EXPECT_LE(merged.value, p.value + 1e-12);
        }
      }
      solver.extend_f();
      solver.close_step();
    }
  }
}

TEST(TautString, FitMeetsTubeAtEveryChangePoint) {
  Rng rng(2);
  std::vector<double> y(25);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = (i >= 8 && i < 16 ? 1.0 : 0.0) + rng.normal(0.0, 0.2);
  const LambdaVector lambda = LambdaVector::constant(y.size(), 2.0);
  const PseudoHuberLoss m(y, 0.1);
  const auto fit = fit_taut(m, lambda);
  for (std::size_t k = 1; k < y.size(); ++k) {
    EXPECT_LE(std::abs(fit.cumsum_right[k - 1]), 2.0 + 1e-8);
    if (fit.values[k] != fit.values[k - 1]) {
      EXPECT_NEAR(std::abs(fit.cumsum_right[k - 1]), 2.0, 1e-8);
      EXPECT_EQ(fit.values[k] > fit.values[k - 1], fit.cumsum_right[k - 1] > 0.0);
    }
  }
  EXPECT_NEAR(fit.cumsum_right.back(), 0.0, 1e-8);
}

TEST(TautString, TiedDesignPointsShareValues) {
  const std::vector<double> x{1, 1, 2, 3, 3, 3, 4};
  const std::vector<double> y{0.0, 2.0, 5.0, 1.0, 1.5, 0.5, 4.0};
  const auto data = DataSet::from_xy(x, y);
  const LambdaVector lambda = LambdaVector::constant(data.blocks(), 0.3);
  const QuadraticLoss m(y);
  const auto fit = fit_taut(m, lambda, data);
  EXPECT_EQ(fit.values[0], fit.values[1]);
  EXPECT_EQ(fit.values[3], fit.values[4]);
  EXPECT_EQ(fit.values[4], fit.values[5]);
  // Collapsing each block to one pseudo-observation with summed loss is
  // the same problem: for squares, a weighted fit at the block means.
  const BlockedLoss<QuadraticLoss> blocked(m, {0, 2, 3, 6, 7});
  const auto direct = taut_string_values(blocked, lambda);
  for (std::size_t b = 0; b < data.blocks(); ++b) EXPECT_DOUBLE_EQ(fit.values[data.block(b).begin], direct[b]);
  EXPECT_TRUE(check_lemma22(blocked, lambda, direct).pass);
}

TEST(TautString, LambdaLengthIsValidated) {
  EXPECT_THROW(fit_taut(QuadraticLoss({1.0, 2.0}), LambdaVector::constant(3, 1.0)), InvalidParameter);
  EXPECT_THROW(LambdaVector(3, {1.0, -1.0}), InvalidParameter);
  EXPECT_THROW(LambdaVector(3, {1.0}), InvalidParameter);
}

TEST(TautString, RangeBounds) {
  const std::vector<double> y{0.0, 2.0};
  const auto [lo, hi] = range_bounds(y, true);
  EXPECT_EQ(lo, 0.0);
  EXPECT_EQ(hi, 2.0);
  const auto fit = fit_taut(QuadraticLoss(y), LambdaVector::constant(2, 0.3));
  for (double v : fit.values) {
    EXPECT_GT(v, lo);
    EXPECT_LT(v, hi);
  }
  const std::vector<double> c{4.0, 4.0, 4.0};
  EXPECT_EQ(range_bounds(c).first, 4.0);
  EXPECT_THROW(range_bounds(c, true), DegenerateRange);
}
