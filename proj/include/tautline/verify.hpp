#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tautline/data.hpp"
#include "tautline/error.hpp"
#include "tautline/loss.hpp"
#include "tautline/random.hpp"
#include "tautline/taut_string.hpp"

namespace tautline {

/// Outcome of an optimality check. `j` and `k` are 1-based and locate the
/// worst violation (k alone for cumulative-sum conditions, j = 0 then).
struct Certificate {
  bool pass = true;
  double worst_violation = 0.0;
  std::size_t j = 0;
  std::size_t k = 0;
  std::string condition;
  double tolerance = 0.0;

  void record(double violation, std::size_t at_j, std::size_t at_k) {
    if (violation > worst_violation) {
      worst_violation = violation;
      j = at_j;
      k = at_k;
    }
  }
  void finish() { pass = worst_violation <= tolerance; }
};

/// Absolute tolerance for derivative sums: tol * max(1, max lambda).
inline double certificate_tolerance(const LambdaVector& lambda, double tol = 1e-8) {
  return tol * std::max(1.0, lambda.max());
}

namespace detail {

inline double sign_lower(double z) { return z > 0.0 ? 1.0 : -1.0; }
inline double sign_upper(double z) { return z >= 0.0 ? 1.0 : -1.0; }

template <ConvexLoss M>
std::vector<long double> prefix_derivatives(const M& model, std::span<const double> f, Side side) {
  std::vector<long double> p(f.size() + 1, 0.0L);
  for (std::size_t i = 0; i < f.size(); ++i) p[i + 1] = p[i] + model.derivative(i, f[i], side);
  return p;
}

inline void require_length(std::size_t model_n, const LambdaVector& lambda, std::span<const double> f) {
  if (f.size() != model_n || lambda.points() != model_n) throw InvalidData("certificate: length mismatch");
}

}  // namespace detail

/// Both families of inequalities obtained from the directional derivatives
/// along +/- the indicator of {j..k}, for every 1 <= j <= k <= n, with
/// one-sided derivatives. Necessary and sufficient for optimality.
///
/// For fixed k the binding j maximizes (resp. minimizes) a running
/// quantity, so the check is linear in n.
template <ConvexLoss M>
Certificate check_lemma21(const M& model, const LambdaVector& lambda, std::span<const double> f, double tol = 1e-8) {
  const std::size_t n = f.size();
  detail::require_length(model.size(), lambda, f);
  Certificate c;
  c.condition = "directional derivatives along interval indicators";
  c.tolerance = certificate_tolerance(lambda, tol);
  const auto pr = detail::prefix_derivatives(model, f, Side::right);
  const auto pl = detail::prefix_derivatives(model, f, Side::left);
  // For j: A_j = P+(j-1) + lambda_{j-1} sign_lower(f_{j-1} - f_j), B_j likewise with sign_upper.
  long double best_a = -std::numeric_limits<long double>::infinity();
  long double best_b = std::numeric_limits<long double>::infinity();
  std::size_t arg_a = 0;
  std::size_t arg_b = 0;
  for (std::size_t k = 1; k <= n; ++k) {
    const std::size_t j = k;
    const double lj = lambda.gap(j - 1);
    const double diff_j = j >= 2 ? f[j - 2] - f[j - 1] : 0.0;
    const long double a = pr[j - 1] + lj * detail::sign_lower(diff_j);
    const long double b = pl[j - 1] + lj * detail::sign_upper(diff_j);
    if (a > best_a) {
      best_a = a;
      arg_a = j;
    }
    if (b < best_b) {
      best_b = b;
      arg_b = j;
    }
    const double lk = lambda.gap(k);
    const double diff_k = k < n ? f[k] - f[k - 1] : 0.0;
    // sum_{j..k} R'(f+) >= lambda_{j-1} sl(.) + lambda_k sl(.)
    const long double v1 = best_a - (pr[k] - lk * detail::sign_lower(diff_k));
    // sum_{j..k} R'(f-) <= lambda_{j-1} su(.) + lambda_k su(.)
    const long double v2 = (pl[k] - lk * detail::sign_upper(diff_k)) - best_b;
    c.record(static_cast<double>(v1), arg_a, k);
    c.record(static_cast<double>(v2), arg_b, k);
  }
  c.finish();
  return c;
}

/// Cumulative-sum characterization for differentiable losses: every partial
/// sum lies in [-lambda_k, lambda_k], equals +lambda_k before an upward jump,
/// -lambda_k before a downward jump, and the total is zero.
template <ConvexLoss M>
Certificate check_lemma22(const M& model, const LambdaVector& lambda, std::span<const double> f, double tol = 1e-8) {
  if constexpr (!M::differentiable) {
    throw UnsupportedCertificate("cumulative-sum certificate needs a differentiable loss; use check_lemma21");
  } else {
    const std::size_t n = f.size();
    detail::require_length(model.size(), lambda, f);
    Certificate c;
    c.condition = "cumulative derivative sums";
    c.tolerance = certificate_tolerance(lambda, tol);
    long double s = 0.0L;
    for (std::size_t k = 1; k <= n; ++k) {
      s += model.derivative(k - 1, f[k - 1], Side::right);
      const double sum = static_cast<double>(s);
      const double lk = lambda.gap(k);
      double v = std::abs(sum) - lk;
      if (k == n) v = std::abs(sum);
      else if (f[k - 1] < f[k]) v = std::max(v, std::abs(sum - lk));
      else if (f[k - 1] > f[k]) v = std::max(v, std::abs(sum + lk));
      c.record(v, 0, k);
    }
    c.finish();
    return c;
  }
}

/// The tube condition |sum_{i<=k} R'_i(f_i)| <= lambda_k for all k.
template <ConvexLoss M>
Certificate check_tube(const M& model, const LambdaVector& lambda, std::span<const double> f, double tol = 1e-8) {
  if constexpr (!M::differentiable) {
    throw UnsupportedCertificate("tube condition needs a differentiable loss");
  } else {
    detail::require_length(model.size(), lambda, f);
    Certificate c;
    c.condition = "tube";
    c.tolerance = certificate_tolerance(lambda, tol);
    long double s = 0.0L;
    for (std::size_t k = 1; k <= f.size(); ++k) {
      s += model.derivative(k - 1, f[k - 1], Side::right);
      c.record(static_cast<double>(std::abs(s)) - lambda.gap(k), 0, k);
    }
    c.finish();
    return c;
  }
}

enum class ExtremaConvention {
  // Every constant run above (below) its existing neighbours, except a
  // run covering all of 1..n.
  literal,
  // As literal, but runs touching index 1 or n are not counted.
  interior,
};

struct Extrema {
  std::vector<IndexRange> maxima;
  std::vector<IndexRange> minima;

  [[nodiscard]] std::size_t count() const { return maxima.size() + minima.size(); }
};

/// Local maxima and minima of f. Neighbouring values within `tol` of the
/// first value of their run are treated as equal.
inline Extrema find_extrema(std::span<const double> f, double tol = 1e-9,
                            ExtremaConvention convention = ExtremaConvention::literal) {
  Extrema e;
  const std::size_t n = f.size();
  std::vector<IndexRange> runs;
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i == n || std::abs(f[i] - f[begin]) > tol) {
      runs.push_back({begin, i});
      begin = i;
    }
  }
  if (runs.size() <= 1) return e;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const bool first = r == 0;
    const bool last = r + 1 == runs.size();
    if (convention == ExtremaConvention::interior && (first || last)) continue;
    const double v = f[runs[r].begin];
    const bool above_left = first || v > f[runs[r - 1].begin];
    const bool above_right = last || v > f[runs[r + 1].begin];
    const bool below_left = first || v < f[runs[r - 1].begin];
    const bool below_right = last || v < f[runs[r + 1].begin];
    if (above_left && above_right) e.maxima.push_back(runs[r]);
    if (below_left && below_right) e.minima.push_back(runs[r]);
  }
  return e;
}

inline std::size_t count_extrema(std::span<const double> f, double tol = 1e-9,
                                 ExtremaConvention convention = ExtremaConvention::literal) {
  return find_extrema(f, tol, convention).count();
}

namespace detail {

template <RegularLoss M>
std::vector<double> pava(const M& model, IndexRange range, bool increasing) {
  struct Block {
    IndexRange range;
    typename M::Segment summary;
    double value;
  };
  std::vector<Block> stack;
  const auto violates = [&](double left, double right) { return increasing ? left > right : left < right; };
  for (std::size_t i = range.begin; i < range.end; ++i) {
    const auto s = model.segment({i, i + 1});
    stack.push_back({{i, i + 1}, s, model.lower_inverse(s, 0.0)});
    while (stack.size() >= 2 && violates(stack[stack.size() - 2].value, stack.back().value)) {
      Block last = std::move(stack.back());
      stack.pop_back();
      Block& prev = stack.back();
      prev.summary = model.join(prev.summary, last.summary);
      prev.range.end = last.range.end;
      prev.value = model.lower_inverse(prev.summary, 0.0);
    }
  }
  std::vector<double> out;
  out.reserve(range.size());
  for (const auto& b : stack) out.resize(out.size() + b.range.size(), b.value);
  return out;
}

}  // namespace detail

/// Minimizer of sum_{i in range} R_i(f_i) over non-decreasing f, by
/// pool-adjacent-violators with block values at the pooled derivative root.
template <RegularLoss M>
std::vector<double> isotonic_oracle(const M& model, IndexRange range) {
  return detail::pava(model, range, true);
}

template <RegularLoss M>
std::vector<double> antitonic_oracle(const M& model, IndexRange range) {
  return detail::pava(model, range, false);
}

/// Optimality conditions for a monotone fit `f` of the observations in
/// `range`: for a run starting at j, the partial sums of R'(f-) from j stay
/// <= 0; for a run ending at k, the partial sums of R'(f+) ending at k stay
/// >= 0 (mirrored for antitonic fits).
template <ConvexLoss M>
Certificate check_monotone_optimality(const M& model, IndexRange range, std::span<const double> f, bool increasing,
                                      double tol = 1e-10) {
  if (f.size() != range.size()) throw InvalidData("monotone certificate: length mismatch");
  const std::size_t m = f.size();
  std::vector<double> v(m);
  std::vector<double> dl(m);
  std::vector<double> dr(m);
  for (std::size_t t = 0; t < m; ++t) {
    const std::size_t src = increasing ? t : m - 1 - t;
    const std::size_t i = range.begin + src;
    v[t] = f[src];
    // Reversing the index order turns an antitonic problem into an isotonic one.
    dl[t] = model.derivative(i, f[src], Side::left);
    dr[t] = model.derivative(i, f[src], Side::right);
  }
  Certificate c;
  c.condition = increasing ? "isotonic optimality" : "antitonic optimality";
  c.tolerance = tol;
  const auto at = [&](std::size_t t) { return increasing ? range.begin + t + 1 : range.begin + m - t; };
  for (std::size_t t = 0; t < m; ++t) {
    if (t > 0 && v[t] < v[t - 1]) {
      c.record(std::numeric_limits<double>::infinity(), at(t - 1), at(t));
      continue;
    }
  }
  std::size_t begin = 0;
  for (std::size_t t = 1; t <= m; ++t) {
    if (t < m && v[t] == v[begin]) continue;
    // Run [begin, t): (13) with j = begin and every k in the run.
    long double s = 0.0L;
    for (std::size_t k = begin; k < t; ++k) {
      s += dl[k];
      c.record(static_cast<double>(s), at(begin), at(k));
    }
    // (14) with k = t-1 and every j in the run.
    s = 0.0L;
    for (std::size_t j = t; j-- > begin;) {
      s += dr[j];
      c.record(static_cast<double>(-s), at(j), at(t - 1));
    }
    begin = t;
  }
  c.finish();
  return c;
}

/// Monotone stretches of a fit that are bounded by strict jumps on both
/// sides and lie strictly inside 1..n, as (range, increasing) pairs.
inline std::vector<std::pair<IndexRange, bool>> interior_monotone_runs(std::span<const double> f) {
  std::vector<std::pair<IndexRange, bool>> out;
  const auto runs = constant_runs(f);
  if (runs.size() < 3) return out;
  for (bool increasing : {true, false}) {
    const auto up = [&](std::size_t r) {
      const double a = f[runs[r].begin];
      const double b = f[runs[r + 1].begin];
      return increasing ? a < b : a > b;
    };
    std::size_t r = 0;
    while (r + 1 < runs.size()) {
      if (!up(r)) {
        ++r;
        continue;
      }
      std::size_t s = r;
      while (s + 1 < runs.size() && up(s)) ++s;
      // Constant runs r..s form a maximal strictly monotone chain; the
      // stretch without its end runs is bounded by strict jumps.
      if (s >= r + 2) out.push_back({{runs[r + 1].begin, runs[s - 1].end}, increasing});
      r = s;
    }
  }
  return out;
}

/// Every interior monotone stretch of the fit (with lambda constant across
/// it and its two bounding gaps) coincides with the monotone least-loss fit.
template <RegularLoss M>
Certificate check_theorem24(const M& model, const LambdaVector& lambda, std::span<const double> f, double tol = 1e-8) {
  Certificate c;
  c.condition = "monotone stretches match the monotone oracle";
  c.tolerance = tol;
  for (const auto& [range, increasing] : interior_monotone_runs(f)) {
    if (!lambda.is_constant_on(range.begin, range.end)) continue;
    const auto oracle = increasing ? isotonic_oracle(model, range) : antitonic_oracle(model, range);
    for (std::size_t t = 0; t < oracle.size(); ++t) {
      const double scale = std::max(1.0, std::abs(oracle[t]));
      c.record(std::abs(oracle[t] - f[range.begin + t]) / scale, range.begin + 1, range.end);
    }
  }
  c.finish();
  return c;
}

enum class BruteForceMode { enumerate, descent };

struct BruteForceSpec {
  BruteForceMode mode = BruteForceMode::descent;
  // Candidate values for enumeration; descent uses their range for starts.
  std::vector<double> candidates;
  int starts = 5;
  int grid = 20;
  double tol = 1e-10;
  std::uint64_t seed = 1;
};

struct BruteForceResult {
  double value = std::numeric_limits<double>::infinity();
  std::vector<double> argmin;
};

namespace detail {

template <ConvexLoss M>
BruteForceResult enumerate_min(const M& model, const LambdaVector& lambda, std::vector<double> cand) {
  const std::size_t n = model.size();
  if (n > 7) throw SizeLimitExceeded("enumeration limited to n <= 7");
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  if (cand.empty()) throw InvalidData("enumeration needs candidate values");
  BruteForceResult best;
  std::vector<double> f(n);
  std::vector<long double> partial(n + 1, 0.0L);
  // Depth-first over positions with the objective accumulated incrementally.
  const auto rec = [&](auto&& self, std::size_t i) -> void {
    if (i == n) {
      if (partial[n] < best.value) {
        best.value = static_cast<double>(partial[n]);
        best.argmin = f;
      }
      return;
    }
    for (double z : cand) {
      f[i] = z;
      long double t = partial[i] + model.value(i, z);
      if (i > 0) t += static_cast<long double>(lambda.gap(i)) * std::abs(z - f[i - 1]);
      partial[i + 1] = t;
      self(self, i + 1);
    }
  };
  rec(rec, 0);
  return best;
}

// Golden-section search of a convex function on [a, b].
template <class F>
double golden_min(const F& phi, double a, double b, double tol) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - r * (b - a);
  double d = a + r * (b - a);
  double fc = phi(c);
  double fd = phi(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = phi(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = phi(d);
    }
  }
  return 0.5 * (a + b);
}

template <ConvexLoss M>
BruteForceResult descent_min(const M& model, const LambdaVector& lambda, const BruteForceSpec& spec) {
  const std::size_t n = model.size();
  if (n > 12) throw SizeLimitExceeded("descent oracle limited to n <= 12");
  if (spec.candidates.empty()) throw InvalidData("descent oracle needs a value range");
  const auto [lo, hi] = min_max(spec.candidates);
  const double width = std::max(hi - lo, 1.0);
  Rng rng(spec.seed);
  BruteForceResult best;
  // Local objective change for shifting f_j..f_k by s.
  const auto shifted = [&](const std::vector<double>& f, std::size_t j, std::size_t k, double s) {
    long double t = 0.0L;
    for (std::size_t i = j; i <= k; ++i) t += model.value(i, f[i] + s);
    if (j > 0) t += static_cast<long double>(lambda.gap(j)) * std::abs(f[j] + s - f[j - 1]);
    if (k + 1 < n) t += static_cast<long double>(lambda.gap(k + 1)) * std::abs(f[k + 1] - f[k] - s);
    return static_cast<double>(t);
  };
  for (int start = 0; start < spec.starts; ++start) {
    std::vector<double> f(n);
    for (std::size_t i = 0; i < n; ++i) {
      const int g = start == 0 ? spec.grid / 2 : static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.grid)));
      f[i] = lo + (hi - lo) * g / std::max(1, spec.grid - 1);
    }
    double current = objective(model, lambda, f);
    double step = width;
    for (int sweep = 0; sweep < 100000; ++sweep) {
      const double before = current;
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = j; k < n; ++k) {
          const double base = shifted(f, j, k, 0.0);
          const double s =
              golden_min([&](double x) { return shifted(f, j, k, x); }, -step, step, std::max(spec.tol, 1e-14 * width));
          if (shifted(f, j, k, s) < base) {
            for (std::size_t i = j; i <= k; ++i) f[i] += s;
          }
        }
      }
      current = objective(model, lambda, f);
      const double gain = before - current;
      if (gain <= spec.tol * std::max(1.0, std::abs(current))) {
        if (step <= 1e-3 * width) break;
        step *= 0.1;
      } else {
        step = std::min(width, step * 2.0);
      }
    }
    if (current < best.value) {
      best.value = current;
      best.argmin = f;
    }
  }
  return best;
}

}  // namespace detail

/// Independent minimizer of T for tiny problems: exhaustive search over a
/// candidate set, or exact line searches along every interval-shift
/// direction until no direction improves.
template <ConvexLoss M>
BruteForceResult brute_force_min(const M& model, const LambdaVector& lambda, const BruteForceSpec& spec) {
  if (lambda.points() != model.size()) throw InvalidData("brute force: length mismatch");
  if (spec.mode == BruteForceMode::enumerate) return detail::enumerate_min(model, lambda, spec.candidates);
  return detail::descent_min(model, lambda, spec);
}

struct TubeSearchResult {
  std::size_t feasible = 0;
  std::size_t attempts = 0;
  std::size_t fit_extrema = 0;
  std::size_t min_extrema = std::numeric_limits<std::size_t>::max();
  // Draws whose max over a local maximum of the fit (min over a local
  // minimum) fell short of the fit's.
  std::size_t extremum_violations = 0;

  [[nodiscard]] bool holds() const { return min_extrema >= fit_extrema && extremum_violations == 0; }
};

/// Random search for tube-feasible vectors with fewer local extrema than
/// the fit. Draws come from two samplers: partial sums drawn inside the
/// tube and mapped back through the pointwise inverses (always feasible),
/// and uniform perturbations of the fit closed by solving for the last
/// coordinate (kept only if feasible).
template <RegularLoss M>
TubeSearchResult random_tube_search(const M& model, const LambdaVector& lambda, std::span<const double> fit,
                                    std::size_t trials, Rng& rng, std::size_t max_attempts = 0) {
  static_assert(M::differentiable, "tube search needs a differentiable loss");
  const std::size_t n = fit.size();
  if (max_attempts == 0) max_attempts = 50 * trials;
  TubeSearchResult res;
  const Extrema ext = find_extrema(fit, 0.0);
  res.fit_extrema = ext.count();
  std::vector<double> fit_sums(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) fit_sums[i + 1] = fit_sums[i] + model.derivative(i, fit[i], Side::right);
  const auto [lo, hi] = detail::min_max(fit);
  const double scale = std::max(hi - lo, 1.0);
  const double slack = certificate_tolerance(lambda, 1e-9);
  std::vector<double> f(n);
  std::vector<double> s(n + 1, 0.0);
  while (res.feasible < trials && res.attempts < max_attempts) {
    ++res.attempts;
    bool feasible = true;
    if (res.attempts % 2 == 1) {
      const double w = rng.uniform();
      for (std::size_t k = 1; k < n; ++k) {
        const double lk = lambda.gap(k);
        s[k] = (1.0 - w) * fit_sums[k] + w * rng.uniform(-lk, lk);
      }
      s[n] = 0.0;
      for (std::size_t i = 0; i < n; ++i) f[i] = model.lower_inverse(model.segment({i, i + 1}), s[i + 1] - s[i]);
    } else {
      const double amp = scale * std::pow(10.0, rng.uniform(-6.0, 0.0));
      long double sum = 0.0L;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        f[i] = fit[i] + rng.uniform(-amp, amp);
        sum += model.derivative(i, f[i], Side::right);
      }
      f[n - 1] = model.lower_inverse(model.segment({n - 1, n}), static_cast<double>(-sum));
    }
    long double run = 0.0L;
    for (std::size_t k = 1; k <= n && feasible; ++k) {
      run += model.derivative(k - 1, f[k - 1], Side::right);
      feasible = std::abs(static_cast<double>(run)) <= lambda.gap(k) + slack;
    }
    if (!feasible) continue;
    ++res.feasible;
    res.min_extrema = std::min(res.min_extrema, count_extrema(f, 0.0));
    bool ok = true;
    for (const auto& r : ext.maxima) {
      const double m = *std::max_element(f.begin() + static_cast<std::ptrdiff_t>(r.begin), f.begin() + static_cast<std::ptrdiff_t>(r.end));
      ok = ok && m >= fit[r.begin] - 1e-9 * std::max(1.0, std::abs(fit[r.begin]));
    }
    for (const auto& r : ext.minima) {
      const double m = *std::min_element(f.begin() + static_cast<std::ptrdiff_t>(r.begin), f.begin() + static_cast<std::ptrdiff_t>(r.end));
      ok = ok && m <= fit[r.begin] + 1e-9 * std::max(1.0, std::abs(fit[r.begin]));
    }
    if (!ok) ++res.extremum_violations;
  }
  if (res.feasible == 0) res.min_extrema = 0;
  return res;
}

}  // namespace tautline
