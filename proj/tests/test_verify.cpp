#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "tautline/quantile.hpp"
#include "tautline/random.hpp"
#include "tautline/taut_string.hpp"
#include "tautline/verify.hpp"

using namespace tautline;

namespace {

std::vector<double> random_vector(Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

// Monotone least squares on a fine grid, for n <= 3.
double monotone_grid_best(const std::vector<double>& y) {
  double best = 1e300;
  const auto sq = [](double u) { return 0.5 * u * u; };
  for (double a = 0.0; a <= 4.0; a += 0.05)
    for (double b = a; b <= 4.0; b += 0.05)
      for (double c = b; c <= 4.0; c += 0.05) best = std::min(best, sq(a - y[0]) + sq(b - y[1]) + sq(c - y[2]));
  return best;
}

}  // namespace

TEST(Certificate, SolverOutputPasses) {
  const std::vector<double> y{0.3, 1.7, -0.4, 2.2, 2.0};
  const LambdaVector lambda = LambdaVector::constant(5, 0.4);
  const auto fit = fit_taut(QuadraticLoss(y), lambda);
  EXPECT_TRUE(check_lemma21(QuadraticLoss(y), lambda, fit.values).pass);
  EXPECT_TRUE(check_lemma22(QuadraticLoss(y), lambda, fit.values).pass);
  EXPECT_TRUE(check_tube(QuadraticLoss(y), lambda, fit.values).pass);
}

TEST(Certificate, ShiftedInterpolationFailsWithLocation) {
  const std::vector<double> y{1.0, 2.0, 3.0};
  std::vector<double> f{11.0, 12.0, 13.0};
  const auto c = check_lemma21(QuadraticLoss(y), LambdaVector::constant(3, 0.1), f);
  EXPECT_FALSE(c.pass);
  EXPECT_NEAR(c.worst_violation, 30.0, 1e-12);
  EXPECT_EQ(c.j, 1u);
  EXPECT_EQ(c.k, 3u);
}

TEST(Certificate, SinglePointReducesToStationarity) {
  const QuadraticLoss m({2.0});
  EXPECT_TRUE(check_lemma21(m, LambdaVector(1, {}), std::vector<double>{2.0}).pass);
  EXPECT_FALSE(check_lemma21(m, LambdaVector(1, {}), std::vector<double>{2.1}).pass);
  const CheckLoss q({2.0}, 0.3);
  EXPECT_TRUE(check_lemma21(q, LambdaVector(1, {}), std::vector<double>{2.0}).pass);
  EXPECT_FALSE(check_lemma21(q, LambdaVector(1, {}), std::vector<double>{2.5}).pass);
}

TEST(Certificate, GrandMeanWithHugePenaltyPasses) {
  const std::vector<double> y{1.0, 4.0, 2.0, 5.0};
  const std::vector<double> f(4, 3.0);
  EXPECT_TRUE(check_lemma22(QuadraticLoss(y), LambdaVector::constant(4, 100.0), f).pass);
}

TEST(Certificate, PerturbedCoordinateFails) {
  const std::vector<double> y{0.0, 1.0, 3.0, 2.0};
  const LambdaVector lambda = LambdaVector::constant(4, 0.5);
  auto f = fit_taut(QuadraticLoss(y), lambda).values;
  f[2] += 1e-3;
  EXPECT_FALSE(check_lemma22(QuadraticLoss(y), lambda, f).pass);
  EXPECT_FALSE(check_tube(QuadraticLoss(y), lambda, f).pass);
}

TEST(Certificate, CumulativeRejectsNonDifferentiableModels) {
  EXPECT_THROW(check_lemma22(CheckLoss({1.0, 2.0}, 0.5), LambdaVector::constant(2, 1.0), std::vector<double>{1.0, 2.0}),
               UnsupportedCertificate);
}

TEST(Certificate, DirectionalAndCumulativeAgreeOnRandomProbes) {
  Rng rng(31);
  int passes = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t n = 1 + rng.below(8);
    const auto y = random_vector(rng, n, -2.0, 2.0);
    const LambdaVector lambda(n, random_vector(rng, n - 1, 0.0, 1.0));
    const PseudoHuberLoss m(y, 0.3);
    std::vector<double> f = fit_taut(m, lambda).values;
    // a third of probes stay optimal, the rest move a random block
    if (rep % 3 != 0) {
      const std::size_t a = rng.below(n);
      const std::size_t b = a + rng.below(n - a);
      const double d = rng.normal(0.0, std::pow(10.0, -rng.uniform(1.0, 6.0)));
      for (std::size_t i = a; i <= b; ++i) f[i] += d;
    }
    const bool l21 = check_lemma21(m, lambda, f).pass;
    const bool l22 = check_lemma22(m, lambda, f).pass;
    EXPECT_EQ(l21, l22) << "rep " << rep;
    passes += l22;
  }
  EXPECT_GT(passes, 300);
}

TEST(Extrema, Examples) {
  EXPECT_EQ(count_extrema(std::vector<double>{1.0, 1.0, 1.0}), 0u);
  const auto e = find_extrema(std::vector<double>{0.0, 1.0, 0.0});
  EXPECT_EQ(e.maxima.size(), 1u);
  EXPECT_EQ(e.minima.size(), 2u);
  EXPECT_EQ(count_extrema(std::vector<double>{0.0, 1.0, 0.0}, 1e-9, ExtremaConvention::interior), 1u);
  EXPECT_EQ(count_extrema(std::vector<double>{0.0, 1.0, 2.0}), 2u);
  EXPECT_EQ(count_extrema(std::vector<double>{0.0, 1.0, 2.0}, 1e-9, ExtremaConvention::interior), 0u);
  EXPECT_EQ(count_extrema(std::vector<double>{0.0, 1e-12, 0.0}), 0u);
  const auto plateau = find_extrema(std::vector<double>{0.0, 2.0, 2.0, 1.0, 3.0});
  ASSERT_EQ(plateau.maxima.size(), 2u);
  EXPECT_EQ(plateau.maxima[0].begin, 1u);
  EXPECT_EQ(plateau.maxima[0].end, 3u);
}

TEST(Extrema, InvariantUnderIncreasingTransforms) {
  Rng rng(4);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> f(1 + rng.below(15));
    for (auto& v : f) v = static_cast<double>(rng.below(4));
    std::vector<double> g(f.size());
    std::transform(f.begin(), f.end(), g.begin(), [](double v) { return std::exp(v) * 3.0 - 7.0; });
    for (auto conv : {ExtremaConvention::literal, ExtremaConvention::interior}) {
      EXPECT_EQ(count_extrema(f, 1e-9, conv), count_extrema(g, 1e-9, conv));
    }
  }
}

TEST(Isotonic, PavaExamples) {
  const std::vector<double> up{1.0, 2.0, 5.0};
  EXPECT_EQ(isotonic_oracle(QuadraticLoss(up), {0, 3}), up);
  EXPECT_EQ(isotonic_oracle(QuadraticLoss({2.0, 1.0}), {0, 2}), (std::vector<double>{1.5, 1.5}));
  const std::vector<double> y{3.0, 1.0, 2.0};
  const auto iso = isotonic_oracle(QuadraticLoss(y), {0, 3});
  EXPECT_EQ(iso, (std::vector<double>{2.0, 2.0, 2.0}));
  double t = 0.0;
  for (std::size_t i = 0; i < 3; ++i) t += 0.5 * (iso[i] - y[i]) * (iso[i] - y[i]);
  EXPECT_LE(t, monotone_grid_best(y) + 1e-12);
  EXPECT_EQ(antitonic_oracle(QuadraticLoss({1.0, 2.0}), {0, 2}), (std::vector<double>{1.5, 1.5}));
}

TEST(Isotonic, OracleSatisfiesOptimalityConditions) {
  Rng rng(9);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 1 + rng.below(30);
    const auto y = random_vector(rng, n, -1.0, 1.0);
    const PseudoHuberLoss m(y, 0.2);
    const IndexRange r{0, n};
    EXPECT_TRUE(check_monotone_optimality(m, r, isotonic_oracle(m, r), true).pass);
    EXPECT_TRUE(check_monotone_optimality(m, r, antitonic_oracle(m, r), false).pass);
  }
  // the data themselves are not isotonic-optimal when they decrease
  EXPECT_FALSE(check_monotone_optimality(QuadraticLoss({2.0, 1.0}), {0, 2}, std::vector<double>{2.0, 1.0}, true).pass);
}

TEST(MonotoneRuns, IncreasingFit) {
  const std::vector<double> y{0.0, 5.0, 10.0};
  const LambdaVector lambda = LambdaVector::constant(3, 1.0);
  const auto fit = fit_taut(QuadraticLoss(y), lambda);
  EXPECT_EQ(fit.values, (std::vector<double>{1.0, 5.0, 9.0}));
  const auto runs = interior_monotone_runs(fit.values);
  ASSERT_EQ(runs.size(), 1u);
  EXPECT_EQ(runs[0].first.begin, 1u);
  EXPECT_EQ(runs[0].first.end, 2u);
  EXPECT_TRUE(check_theorem24(QuadraticLoss(y), lambda, fit.values).pass);
}

TEST(MonotoneRuns, SolverRunsMatchPava) {
  Rng rng(17);
  std::size_t checked = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 10 + rng.below(60);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = std::sin(6.0 * i / n) * 3.0 + rng.normal(0.0, 0.3);
    const LambdaVector lambda = LambdaVector::constant(n, 0.2);
    const auto fit = fit_taut(QuadraticLoss(y), lambda);
    checked += interior_monotone_runs(fit.values).size();
    EXPECT_TRUE(check_theorem24(QuadraticLoss(y), lambda, fit.values).pass);
  }
  EXPECT_GT(checked, 50u);
}

TEST(BruteForce, Examples) {
  BruteForceSpec spec;
  spec.candidates = {7.0};
  EXPECT_NEAR(brute_force_min(QuadraticLoss({7.0}), LambdaVector(1, {}), spec).value, 0.0, 1e-12);
  spec.candidates = {0.0, 2.0};
  const auto r = brute_force_min(QuadraticLoss({0.0, 2.0}), LambdaVector::constant(2, 0.5), spec);
  EXPECT_NEAR(r.value, 0.75, 1e-9);
  EXPECT_NEAR(r.argmin[0], 0.5, 1e-4);
  EXPECT_NEAR(r.argmin[1], 1.5, 1e-4);
  BruteForceSpec en;
  en.mode = BruteForceMode::enumerate;
  en.candidates = {1.0, 2.0, 3.0};
  const CheckLoss q({1.0, 2.0, 3.0}, 0.5);
  const LambdaVector big = LambdaVector::constant(3, 10.0);
  EXPECT_NEAR(brute_force_min(q, big, en).value, fit_quantile(q.responses(), 0.5, big).fit.objective, 1e-12);
}

TEST(BruteForce, SizeLimits) {
  BruteForceSpec en;
  en.mode = BruteForceMode::enumerate;
  en.candidates = {0.0};
  EXPECT_THROW(brute_force_min(QuadraticLoss(std::vector<double>(8, 0.0)), LambdaVector::constant(8, 1.0), en),
               SizeLimitExceeded);
  BruteForceSpec de;
  de.candidates = {0.0};
  EXPECT_THROW(brute_force_min(QuadraticLoss(std::vector<double>(13, 0.0)), LambdaVector::constant(13, 1.0), de),
               SizeLimitExceeded);
}

TEST(BruteForce, SolverNeverBeaten) {
  Rng rng(23);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = 1 + rng.below(12);
    const auto y = random_vector(rng, n, -2.0, 2.0);
    const LambdaVector lambda(n, random_vector(rng, n - 1, 0.05, 1.0));
    const PseudoHuberLoss m(y, 0.25);
    const auto fit = fit_taut(m, lambda);
    BruteForceSpec spec;
    spec.candidates = y;
    spec.seed = static_cast<std::uint64_t>(rep);
    const auto bf = brute_force_min(m, lambda, spec);
    EXPECT_GE(bf.value, fit.objective - 1e-9);
    EXPECT_LE(fit.objective, bf.value + 1e-6);
    EXPECT_NEAR(bf.value, fit.objective, 1e-6) << "rep " << rep;
  }
}

TEST(Tube, FitIsFeasibleAndPushedSegmentIsNot) {
  const std::vector<double> y{0.0, 0.2, 2.0, 2.1, 0.1};
  const LambdaVector lambda = LambdaVector::constant(5, 0.3);
  const QuadraticLoss m(y);
  auto f = fit_taut(m, lambda).values;
  EXPECT_TRUE(check_tube(m, lambda, f).pass);
  // push the leading segment past its touch point
  const auto runs = constant_runs(f);
  for (std::size_t i = runs[0].begin; i < runs[0].end; ++i) f[i] += 0.5;
  EXPECT_FALSE(check_tube(m, lambda, f).pass);
}

TEST(Tube, RandomSearchFindsNoSimplerFeasibleVector) {
  Rng rng(41);
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t n = 3 + rng.below(8);
    const auto y = random_vector(rng, n, -2.0, 2.0);
    const LambdaVector lambda = LambdaVector::constant(n, rng.uniform(0.1, 0.8));
    const PseudoHuberLoss m(y, 0.2);
    const auto fit = fit_taut(m, lambda);
    const auto res = random_tube_search(m, lambda, fit.values, 2000, rng);
    EXPECT_EQ(res.feasible, 2000u);
    EXPECT_TRUE(res.holds()) << "rep " << rep;
  }
}
