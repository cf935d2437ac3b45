#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tautline/data.hpp"
#include "tautline/error.hpp"
#include "tautline/loss.hpp"
#include "tautline/taut_string.hpp"

namespace tautline {

struct ExpFamFit {
  // Natural-parameter fit with certificates for R'_i = b' - Y_i.
  Fit fit;
  // b'(fit.values), identical to the least-squares fit.
  std::vector<double> mean;
  Family family = Family::poisson;
};

namespace detail {

inline void require_nontrivial(std::span<const double> y, Family family) {
  const auto [lo, hi] = min_max(y);
  if (lo < hi) return;
  if (family == Family::poisson) {
    throw NonCoerciveData("all-equal Poisson counts (every count is " + std::to_string(static_cast<long long>(lo)) +
                          "): the penalized likelihood has no minimizer");
  }
  throw NonCoerciveData(std::string("constant binary labels (every label is ") + (lo == 0.0 ? "0" : "1") +
                        "): the penalized likelihood has no minimizer");
}

}  // namespace detail

/// b'(f) for a natural-parameter fit.
inline std::vector<double> mean_scale(std::span<const double> natural, Family family) {
  std::vector<double> mu(natural.size());
  for (std::size_t i = 0; i < mu.size(); ++i) mu[i] = mean_function(family, natural[i]);
  return mu;
}

inline std::vector<double> mean_scale(const ExpFamFit& fit) { return fit.mean; }

/// Penalized maximum likelihood for Poisson or Bernoulli responses: the
/// least-squares taut string mapped through (b')^{-1}.
inline ExpFamFit fit_expfam(const DataSet& data, const LambdaVector& lambda, Family family) {
  const ExpFamLoss loss({data.y().begin(), data.y().end()}, family);
  detail::require_nontrivial(data.y(), family);
  const QuadraticLoss ls({data.y().begin(), data.y().end()});
  const Fit least_squares = fit_taut(ls, lambda, data);
  ExpFamFit out;
  out.family = family;
  out.mean = least_squares.values;
  std::vector<double> theta(out.mean.size());
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] = natural_parameter(family, out.mean[i]);
  out.fit.values = std::move(theta);
  out.fit.segments = least_squares.segments;
  fill_cumsums(loss, out.fit);
  if (data.has_ties()) {
    std::vector<double> per_block(data.blocks());
    for (std::size_t b = 0; b < per_block.size(); ++b) per_block[b] = out.fit.values[data.block(b).begin];
    out.fit.objective = objective(BlockedLoss<ExpFamLoss>(loss, {data.offsets().begin(), data.offsets().end()}), lambda,
                                  per_block);
  } else {
    out.fit.objective = objective(loss, lambda, out.fit.values);
  }
  return out;
}

inline ExpFamFit fit_expfam(std::span<const double> y, const LambdaVector& lambda, Family family) {
  return fit_expfam(DataSet::from_y({y.begin(), y.end()}), lambda, family);
}

}  // namespace tautline
