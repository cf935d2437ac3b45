#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tautline/data.hpp"
#include "tautline/distributions.hpp"
#include "tautline/error.hpp"
#include "tautline/loss.hpp"
#include "tautline/model.hpp"
#include "tautline/rank_loss.hpp"
#include "tautline/taut_string.hpp"
#include "tautline/verify.hpp"

namespace tautline {

/// Fixed penalty c * sqrt(n) * scale, where scale is sigma-hat for the
/// mean-type models and sqrt(beta (1 - beta)) for quantiles (pass beta).
inline double default_lambda(ModelKind kind, std::size_t n, double scale, double c = 0.2) {
  if (n < 2) throw InvalidParameter("default lambda: n must be >= 2");
  if (kind == ModelKind::quantile) {
    if (!(scale > 0.0 && scale < 1.0)) throw InvalidParameter("default lambda: beta must lie in (0, 1)");
    return c * std::sqrt(static_cast<double>(n)) * std::sqrt(scale * (1.0 - scale));
  }
  return c * std::sqrt(static_cast<double>(n)) * scale;
}

enum class SigmaMethod { rice, mad };

inline SigmaMethod parse_sigma_method(const std::string& s) {
  if (s == "rice") return SigmaMethod::rice;
  if (s == "mad") return SigmaMethod::mad;
  throw InvalidParameter("unknown sigma estimator '" + s + "' (expected rice or mad)");
}

/// Noise level from first differences.
inline double sigma_hat(std::span<const double> y, SigmaMethod method = SigmaMethod::mad) {
  const std::size_t n = y.size();
  if (n < 2) throw InvalidData("sigma estimate needs at least two observations");
  if (method == SigmaMethod::rice) {
    long double s = 0.0L;
    for (std::size_t i = 1; i < n; ++i) s += static_cast<long double>(y[i] - y[i - 1]) * (y[i] - y[i - 1]);
    return static_cast<double>(std::sqrt(s / (2.0L * static_cast<long double>(n - 1))));
  }
  std::vector<double> d(n - 1);
  for (std::size_t i = 1; i < n; ++i) d[i - 1] = std::abs(y[i] - y[i - 1]);
  const std::size_t mid = d.size() / 2;
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid), d.end());
  double med = d[mid];
  if (d.size() % 2 == 0) {
    const double below = *std::max_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid));
    med = 0.5 * (med + below);
  }
  constexpr double q75 = 0.6744897501960817;  // standard normal 3/4 quantile
  return med / (std::sqrt(2.0) * q75);
}

enum class IntervalKind { all, dyadic };

inline IntervalKind parse_interval_kind(const std::string& s) {
  if (s == "all") return IntervalKind::all;
  if (s == "dyadic") return IntervalKind::dyadic;
  throw InvalidParameter("unknown interval family '" + s + "' (expected all or dyadic)");
}

/// Intervals of 0..n-1 inspected by the multiresolution criterion. The
/// dyadic family holds [2^l m, 2^l (m+1)) clipped to n for every scale l
/// with 2^l <= n.
class IntervalFamily {
 public:
  IntervalFamily(IntervalKind kind, std::size_t n) : kind_(kind), n_(n) {}

  [[nodiscard]] IntervalKind kind() const { return kind_; }
  [[nodiscard]] std::size_t points() const { return n_; }

  template <class F>
  void for_each(F&& f) const {
    if (n_ == 0) return;
    if (kind_ == IntervalKind::all) {
      for (std::size_t j = 0; j < n_; ++j)
        for (std::size_t k = j + 1; k <= n_; ++k) f(IndexRange{j, k});
      return;
    }
    for (std::size_t w = 1; w <= n_; w *= 2) {
      for (std::size_t b = 0; b < n_; b += w) {
        // a clipped interval already appeared at half the scale
        if (w > 1 && b + w / 2 >= n_) continue;
        f(IndexRange{b, std::min(b + w, n_)});
      }
    }
  }

  [[nodiscard]] std::size_t size() const {
    std::size_t c = 0;
    for_each([&](IndexRange) { ++c; });
    return c;
  }

  [[nodiscard]] std::vector<IndexRange> intervals() const {
    std::vector<IndexRange> out;
    for_each([&](IndexRange r) { out.push_back(r); });
    return out;
  }

 private:
  IntervalKind kind_;
  std::size_t n_;
};

/// Null distributions for sums of R'_i(f_i) over an interval.
enum class BoundKind {
  // Gaussian errors: +-sigma sqrt(m) sqrt(2 log n).
  gaussian_universal,
  // Gaussian errors: +-sigma sqrt(m) (sqrt(2 log(e n / m)) + c).
  gaussian_scale,
  // Quantile losses: binomial(m, beta) counts of observations below f.
  binomial_rank,
  // Poisson counts with rate sum exp(f_i).
  poisson,
  // Binary labels, binomial with N = m and the mean fitted probability.
  bernoulli,
};

inline std::string to_string(BoundKind k) {
  switch (k) {
    case BoundKind::gaussian_universal:
      return "gaussian";
    case BoundKind::gaussian_scale:
      return "gaussian-scale";
    case BoundKind::binomial_rank:
      return "binomial-rank";
    case BoundKind::poisson:
      return "poisson";
    case BoundKind::bernoulli:
      return "bernoulli";
  }
  return "gaussian";
}

struct BoundSpec {
  BoundKind kind = BoundKind::gaussian_universal;
  std::size_t n = 1;
  double sigma = 1.0;
  double c = 0.0;
  double beta = 0.5;
};

struct EtaBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Bounds for an interval of m points. `expected` is the model mean of
/// the response sum on the interval (sum of exp f_i for Poisson, sum of
/// fitted probabilities for binary data) and is ignored otherwise.
///
/// For the discrete models the bounds are the extreme deviations whose
/// exceedance probability is at most 1/n; since the sums live on a lattice
/// the result can be moved to 0 without changing which sums violate it,
/// which keeps lower <= 0 <= upper.
inline EtaBounds eta_bounds(const BoundSpec& spec, std::size_t m, double expected = 0.0) {
  if (m == 0) throw InvalidParameter("eta bounds: empty interval");
  const double md = static_cast<double>(m);
  const double nd = static_cast<double>(std::max<std::size_t>(spec.n, 2));
  const double alpha = 1.0 / static_cast<double>(std::max<std::size_t>(spec.n, 1));
  EtaBounds b;
  switch (spec.kind) {
    case BoundKind::gaussian_universal: {
      const double h = spec.sigma * std::sqrt(md) * std::sqrt(2.0 * std::log(nd));
      return {-h, h};
    }
    case BoundKind::gaussian_scale: {
      const double h = spec.sigma * std::sqrt(md) * (std::sqrt(2.0 * std::log(std::exp(1.0) * nd / md)) + spec.c);
      return {-h, h};
    }
    case BoundKind::binomial_rank: {
      // sum R'(f) = S - m beta with S ~ Bin(m, beta)
      const auto N = static_cast<std::int64_t>(m);
      const double mean = md * spec.beta;
      b.upper = static_cast<double>(dist::binomial_quantile(1.0 - alpha, N, spec.beta)) - mean;
      b.lower = static_cast<double>(dist::binomial_quantile(alpha, N, spec.beta, true)) - mean;
      break;
    }
    case BoundKind::poisson: {
      // sum R'(f) = l - S with S ~ Poisson(l)
      const double l = std::max(expected, 0.0);
      b.upper = l - static_cast<double>(dist::poisson_quantile(alpha, l, true));
      b.lower = l - static_cast<double>(dist::poisson_quantile(1.0 - alpha, l));
      break;
    }
    case BoundKind::bernoulli: {
      const auto N = static_cast<std::int64_t>(m);
      const double p = std::clamp(expected / md, 0.0, 1.0);
      b.upper = expected - static_cast<double>(dist::binomial_quantile(alpha, N, p, true));
      b.lower = expected - static_cast<double>(dist::binomial_quantile(1.0 - alpha, N, p));
      break;
    }
  }
  b.upper = std::max(b.upper, 0.0);
  b.lower = std::min(b.lower, 0.0);
  return b;
}

/// Bounds for `interval` given natural-parameter fit values (only the
/// Poisson and binary bounds look at them).
inline EtaBounds eta_bounds(const BoundSpec& spec, IndexRange interval, std::span<const double> fit_values) {
  if (interval.empty() || interval.end > fit_values.size()) throw InvalidParameter("eta bounds: bad interval");
  double expected = 0.0;
  if (spec.kind == BoundKind::poisson || spec.kind == BoundKind::bernoulli) {
    const Family fam = spec.kind == BoundKind::poisson ? Family::poisson : Family::bernoulli;
    for (std::size_t i = interval.begin; i < interval.end; ++i) expected += mean_function(fam, fit_values[i]);
  }
  return eta_bounds(spec, interval.size(), expected);
}

struct Violation {
  IndexRange interval;
  // The offending sum and the bound it crossed.
  double sum = 0.0;
  double bound = 0.0;
  bool above = false;
};

/// Intervals on which sum R'_i(f_i+) < lower or sum R'_i(f_i-) > upper.
/// `tol` absorbs rounding in the prefix sums.
template <ConvexLoss M>
std::vector<Violation> check_multiresolution(const M& model, std::span<const double> f, const IntervalFamily& family,
                                             const BoundSpec& spec, double tol = 1e-9) {
  const std::size_t n = f.size();
  if (model.size() != n || family.points() != n) throw InvalidData("multiresolution check: length mismatch");
  const auto right = detail::prefix_derivatives(model, f, Side::right);
  const auto left = detail::prefix_derivatives(model, f, Side::left);
  std::vector<long double> mean_prefix;
  if (spec.kind == BoundKind::poisson || spec.kind == BoundKind::bernoulli) {
    const Family fam = spec.kind == BoundKind::poisson ? Family::poisson : Family::bernoulli;
    mean_prefix.assign(n + 1, 0.0L);
    for (std::size_t i = 0; i < n; ++i) mean_prefix[i + 1] = mean_prefix[i] + mean_function(fam, f[i]);
  }
  // only the discrete fit-free bounds repeat across intervals
  std::unordered_map<std::size_t, EtaBounds> by_length;
  std::vector<Violation> out;
  family.for_each([&](IndexRange r) {
    EtaBounds eta;
    if (!mean_prefix.empty()) {
      eta = eta_bounds(spec, r.size(), static_cast<double>(mean_prefix[r.end] - mean_prefix[r.begin]));
    } else if (auto it = by_length.find(r.size()); it != by_length.end()) {
      eta = it->second;
    } else {
      eta = by_length[r.size()] = eta_bounds(spec, r.size());
    }
    const auto lo_sum = static_cast<double>(right[r.end] - right[r.begin]);
    const auto hi_sum = static_cast<double>(left[r.end] - left[r.begin]);
    const double slack = tol * std::max({1.0, std::abs(eta.lower), std::abs(eta.upper)});
    if (lo_sum < eta.lower - slack) out.push_back({r, lo_sum, eta.lower, false});
    if (hi_sum > eta.upper + slack) out.push_back({r, hi_sum, eta.upper, true});
  });
  return out;
}

/// Largest ratio of |sum R'_i(f_i -+)| over any interval to
/// sqrt(c_o m log n) + c_o log n, with n replaced by max(n, 2).
template <ConvexLoss M>
double check_eq11(const M& model, std::span<const double> f, double c_o) {
  const std::size_t n = f.size();
  if (model.size() != n) throw InvalidData("multiscale ratio: length mismatch");
  if (!(c_o > 0.0)) throw InvalidParameter("multiscale ratio: c_o must be > 0");
  const auto right = detail::prefix_derivatives(model, f, Side::right);
  const auto left = detail::prefix_derivatives(model, f, Side::left);
  const double log_n = std::log(static_cast<double>(std::max<std::size_t>(n, 2)));
  double worst = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = j + 1; k <= n; ++k) {
      const double m = static_cast<double>(k - j);
      const double bound = std::sqrt(c_o * m * log_n) + c_o * log_n;
      const double up = static_cast<double>(left[k] - left[j]);
      const double down = -static_cast<double>(right[k] - right[j]);
      worst = std::max(worst, std::max(up, down) / bound);
    }
  }
  return worst;
}

struct SqueezeOptions {
  IntervalKind intervals = IntervalKind::dyadic;
  SigmaMethod sigma = SigmaMethod::mad;
  // Use the scale-dependent Gaussian bound with this c instead of the
  // universal one (mean model only).
  bool scale_bounds = false;
  double c = 0.0;
  double gamma = 0.9;
  std::size_t max_iter = 10000;
  // Store every lambda vector in the trace.
  bool keep_lambdas = true;
};

struct SqueezeTrace {
  std::vector<std::vector<double>> lambdas;
  std::vector<std::size_t> violations;
  std::vector<std::size_t> squeezed_gaps;
  std::vector<std::size_t> segments;
  std::vector<std::size_t> extrema;

  [[nodiscard]] std::size_t iterations() const { return violations.size(); }
};

struct SqueezeResult {
  Fit fit;
  LambdaVector lambda;
  BoundSpec bounds;
  SqueezeTrace trace;
};

/// The bound family matched to a model, with sigma estimated from the data.
inline BoundSpec default_bounds(const ModelSpec& spec, std::span<const double> y, const SqueezeOptions& opt = {}) {
  BoundSpec b;
  b.n = y.size();
  b.beta = spec.beta;
  b.c = opt.c;
  switch (spec.kind) {
    case ModelKind::mean:
    case ModelKind::huber:
      b.kind = opt.scale_bounds ? BoundKind::gaussian_scale : BoundKind::gaussian_universal;
      b.sigma = sigma_hat(y, opt.sigma);
      break;
    case ModelKind::quantile:
      b.kind = BoundKind::binomial_rank;
      break;
    case ModelKind::poisson:
      b.kind = BoundKind::poisson;
      break;
    case ModelKind::bernoulli:
      b.kind = BoundKind::bernoulli;
      break;
  }
  return b;
}

namespace detail {

// A constant penalty large enough that the fit is constant: the constant
// fit's derivative cumsums then stay strictly inside the tube.
inline double initial_penalty(const ModelSpec& spec, std::span<const double> y) {
  long double worst = 0.0L;
  long double s = 0.0L;
  if (spec.kind == ModelKind::quantile) {
    const RankLoss<> rl(rank_vector(y), spec.beta);
    const double r = rl.lower_inverse(rl.segment({0, y.size()}), 0.0);
    for (std::size_t i = 0; i < y.size(); ++i) {
      s += rl.derivative(i, r);
      worst = std::max(worst, std::abs(s));
    }
  } else if (spec.kind == ModelKind::huber) {
    const PseudoHuberLoss h({y.begin(), y.end()}, spec.delta);
    const double c = h.lower_inverse(h.segment({0, y.size()}), 0.0);
    for (std::size_t i = 0; i < y.size(); ++i) {
      s += h.derivative(i, c);
      worst = std::max(worst, std::abs(s));
    }
  } else {
    long double mean = 0.0L;
    for (double v : y) mean += v;
    mean /= static_cast<long double>(y.size());
    for (double v : y) {
      s += v - mean;
      worst = std::max(worst, std::abs(s));
    }
  }
  return static_cast<double>(worst) + 1.0;
}

}  // namespace detail

/// Local squeezing: start from a penalty that forces a constant fit and
/// shrink it by gamma on the gaps of every interval violating the
/// multiresolution bounds (including the gap entering the interval) until
/// no interval violates them.
inline SqueezeResult local_squeeze(const DataSet& data, const ModelSpec& spec, const SqueezeOptions& opt = {}) {
  if (!(opt.gamma > 0.0 && opt.gamma < 1.0)) throw InvalidParameter("squeeze: gamma must lie in (0, 1)");
  const std::size_t n = data.size();
  const std::size_t blocks = data.blocks();
  SqueezeResult res;
  res.bounds = default_bounds(spec, data.y(), opt);
  const IntervalFamily family(opt.intervals, n);
  // observation gap g (between observations g-1 and g, 0-based) maps to the
  // block gap in front of block_of[g] unless both share a block
  std::vector<std::size_t> block_of(n);
  for (std::size_t b = 0; b < blocks; ++b) {
    const auto r = data.block(b);
    for (std::size_t i = r.begin; i < r.end; ++i) block_of[i] = b;
  }
  std::vector<double> gaps(blocks > 0 ? blocks - 1 : 0, detail::initial_penalty(spec, data.y()));
  std::vector<int> marks(n + 1);
  return with_check_model(spec, data.y(), [&](const auto& model) {
    for (std::size_t iter = 0;; ++iter) {
      if (iter >= opt.max_iter) {
        throw NonTermination("squeeze: no admissible fit after " + std::to_string(opt.max_iter) + " iterations");
      }
      const LambdaVector lambda(blocks, gaps);
      Fit fit = fit_model(spec, data, lambda);
      const auto violations = check_multiresolution(model, fit.values, family, res.bounds);
      if (opt.keep_lambdas) res.trace.lambdas.push_back(gaps);
      res.trace.violations.push_back(violations.size());
      res.trace.segments.push_back(fit.segments.size());
      res.trace.extrema.push_back(count_extrema(fit.values));
      if (violations.empty()) {
        res.trace.squeezed_gaps.push_back(0);
        res.fit = std::move(fit);
        res.lambda = lambda;
        return std::move(res);
      }
      // union of observation gaps j-1..k per violating interval, 1-based
      std::fill(marks.begin(), marks.end(), 0);
      for (const auto& v : violations) {
        ++marks[v.interval.begin];
        --marks[v.interval.end + 1 <= n ? v.interval.end + 1 : n];
      }
      std::size_t squeezed = 0;
      int depth = 0;
      std::vector<char> hit(gaps.size(), 0);
      for (std::size_t g = 0; g < n; ++g) {
        depth += marks[g];
        if (depth <= 0 || g == 0) continue;
        if (block_of[g - 1] == block_of[g]) continue;
        const std::size_t bg = block_of[g] - 1;
        if (!hit[bg]) {
          hit[bg] = 1;
          gaps[bg] *= opt.gamma;
          ++squeezed;
        }
      }
      // a violation can only sit on intervals whose gaps are all within a
      // block when the data are tied; nothing left to squeeze then
      if (squeezed == 0) throw NonTermination("squeeze: violating intervals carry no penalised gap");
      res.trace.squeezed_gaps.push_back(squeezed);
    }
  });
}

inline SqueezeResult local_squeeze(std::span<const double> y, const ModelSpec& spec, const SqueezeOptions& opt = {}) {
  return local_squeeze(DataSet::from_y({y.begin(), y.end()}), spec, opt);
}

}  // namespace tautline
