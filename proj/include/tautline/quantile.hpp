#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "tautline/data.hpp"
#include "tautline/error.hpp"
#include "tautline/loss.hpp"
#include "tautline/rank_loss.hpp"
#include "tautline/taut_string.hpp"

namespace tautline {

struct QuantileFit {
  Fit fit;
  // Minimizer of the rank-scale objective, one entry per observation.
  std::vector<double> g_hat;
};

namespace detail {

// ceil(g) for g in (beta, n-1+beta), snapping values within 1e-9 of an
// integer onto it first.
inline std::size_t order_index(double g, std::size_t n) {
  const double nearest = std::round(g);
  const double c = std::abs(g - nearest) <= 1e-9 ? nearest : std::ceil(g);
  return static_cast<std::size_t>(std::clamp(c, 1.0, static_cast<double>(n)));
}

inline std::vector<double> map_to_order_statistics(std::span<const double> y, std::span<const double> g_hat) {
  std::vector<double> sorted(y.begin(), y.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> f(g_hat.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = sorted[order_index(g_hat[i], sorted.size()) - 1];
  return f;
}

}  // namespace detail

/// Sum of rho_beta(f_i - Y_i) plus the total variation penalty.
inline double quantile_objective(std::span<const double> y, double beta, const LambdaVector& lambda,
                                 std::span<const double> f) {
  return objective(CheckLoss({y.begin(), y.end()}, beta), lambda, f);
}

/// Penalized beta-quantile regression through the rank transform.
template <class Ranks = WaveletRanks>
QuantileFit fit_quantile(std::span<const double> y, double beta, const LambdaVector& lambda) {
  if (!(beta > 0.0 && beta < 1.0)) throw InvalidParameter("quantile fit: beta must lie in (0, 1)");
  if (y.empty()) throw InvalidData("quantile fit: no observations");
  const RankLoss<Ranks> rank_loss(rank_vector(y), beta);
  QuantileFit out;
  out.g_hat = taut_string_values(rank_loss, lambda);
  out.fit = make_fit(CheckLoss({y.begin(), y.end()}, beta), lambda, detail::map_to_order_statistics(y, out.g_hat));
  return out;
}

/// Tied design points: blocks of equal x share one fitted value.
template <class Ranks = WaveletRanks>
QuantileFit fit_quantile(const DataSet& data, double beta, const LambdaVector& lambda) {
  if (!data.has_ties()) return fit_quantile<Ranks>(data.y(), beta, lambda);
  if (!(beta > 0.0 && beta < 1.0)) throw InvalidParameter("quantile fit: beta must lie in (0, 1)");
  const std::vector<std::size_t> offsets(data.offsets().begin(), data.offsets().end());
  const BlockedLoss<RankLoss<Ranks>> rank_loss(RankLoss<Ranks>(rank_vector(data.y()), beta), offsets);
  const auto per_block = taut_string_values(rank_loss, lambda);
  QuantileFit out;
  out.g_hat = data.expand(per_block);
  const CheckLoss check({data.y().begin(), data.y().end()}, beta);
  const auto f_block = detail::map_to_order_statistics(data.y(), per_block);
  out.fit.values = data.expand(f_block);
  out.fit.segments = constant_runs(out.fit.values);
  fill_cumsums(check, out.fit);
  out.fit.objective = objective(BlockedLoss<CheckLoss>(check, offsets), lambda, f_block);
  return out;
}

}  // namespace tautline
