#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <span>
#include <tuple>
#include <string>
#include <utility>
#include <vector>

#include "tautline/data.hpp"
#include "tautline/error.hpp"

namespace tautline {

/// A family of convex per-observation losses R_0, ..., R_{n-1}.
template <class M>
concept ConvexLoss = requires(const M& m, std::size_t i, double z) {
  { m.size() } -> std::convertible_to<std::size_t>;
  { m.value(i, z) } -> std::convertible_to<double>;
  { m.derivative(i, z, Side::right) } -> std::convertible_to<double>;
  { M::differentiable } -> std::convertible_to<bool>;
};

/// A convex loss whose pooled derivative over any index range is continuous
/// and onto the real line, so both generalized inverses always exist.
///
/// `Segment` summarizes an index range; `join` combines two adjacent
/// summaries. Algorithm I only ever touches a range through its summary.
template <class M>
concept RegularLoss = ConvexLoss<M> && requires(const M& m, const typename M::Segment& s, IndexRange r, double t) {
  { m.segment(r) } -> std::same_as<typename M::Segment>;
  { m.join(s, s) } -> std::same_as<typename M::Segment>;
  { m.pooled_derivative(s, t) } -> std::convertible_to<double>;
  { m.lower_inverse(s, t) } -> std::convertible_to<double>;
  { m.upper_inverse(s, t) } -> std::convertible_to<double>;
};

template <class M>
concept HasExactIntegral = requires(const M& m, std::size_t i, double a, double b) {
  { m.integral(i, a, b) } -> std::convertible_to<double>;
};

/// Sum of one-sided derivatives over `r` by direct summation.
template <ConvexLoss M>
double pooled_derivative(const M& m, IndexRange r, double z, Side side) {
  double s = 0.0;
  for (std::size_t i = r.begin; i < r.end; ++i) s += m.derivative(i, z, side);
  return s;
}

template <RegularLoss M>
double lower_inverse(const M& m, IndexRange r, double t) {
  return m.lower_inverse(m.segment(r), t);
}

template <RegularLoss M>
double upper_inverse(const M& m, IndexRange r, double t) {
  return m.upper_inverse(m.segment(r), t);
}

namespace detail {

enum class InverseKind { lower, upper };

/// Generalized inverse of a nondecreasing function `d`.
///
/// lower: min{z : d(z) >= t}; upper: max{z : d(z) <= t}. The bracket is
/// expanded geometrically from `guess` and then bisected down to adjacent
/// doubles, so flat pieces of `d` resolve to their exact endpoint.
template <class D>
double invert_monotone(const D& d, double t, double guess, InverseKind kind) {
  const auto inside = [&](double z) { return kind == InverseKind::lower ? d(z) >= t : d(z) > t; };
  constexpr double limit = 1e300;
  double lo = guess;
  double hi = guess;
  double step = std::max(1.0, std::abs(guess));
  if (inside(guess)) {
    for (;;) {
      lo = guess - step;
      if (!inside(lo)) break;
      hi = lo;
      step *= 2.0;
      if (step > limit) throw CoercivityError("pooled derivative is bounded below; level " + std::to_string(t) + " unattainable");
    }
  } else {
    for (;;) {
      hi = guess + step;
      if (inside(hi)) break;
      lo = hi;
      step *= 2.0;
      if (step > limit) throw CoercivityError("pooled derivative is bounded above; level " + std::to_string(t) + " unattainable");
    }
  }
  // Invariant: !inside(lo), inside(hi).
  for (int iter = 0; iter < 4096; ++iter) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    (inside(mid) ? hi : lo) = mid;
  }
  // A strict crossing between adjacent doubles has no exact root; both
  // inverses then agree on the closer endpoint so lower <= upper holds.
  const double dlo = d(lo);
  const double dhi = d(hi);
  if (dlo < t && dhi > t) return (t - dlo <= dhi - t) ? lo : hi;
  return kind == InverseKind::lower ? hi : lo;
}

inline std::pair<double, double> min_max(std::span<const double> y) {
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  return {*lo, *hi};
}

// 16-point Gauss-Legendre nodes and weights on [-1, 1] (positive half).
inline constexpr std::array<double, 8> gl16_nodes = {
    0.0950125098376374401853193, 0.2816035507792589132304605, 0.4580167776572273863424194,
    0.6178762444026437484466718, 0.7554044083550030338951012, 0.8656312023878317438804679,
    0.9445750230732325760779884, 0.9894009349916499325961542};
inline constexpr std::array<double, 8> gl16_weights = {
    0.1894506104550684962853967, 0.1826034150449235888667637, 0.1691565193950025381893121,
    0.1495959888165767320815017, 0.1246289712555338720524763, 0.0951585116824927848099251,
    0.0622535239386478928628438, 0.0271524594117540948517806};

template <class F>
double gauss_legendre16(const F& f, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double s = 0.0;
  for (std::size_t k = 0; k < gl16_nodes.size(); ++k) {
    const double dx = half * gl16_nodes[k];
    s += gl16_weights[k] * (f(mid - dx) + f(mid + dx));
  }
  return s * half;
}

}  // namespace detail

/// R_i(z) = (z - y_i)^2 / 2.
class QuadraticLoss {
 public:
  static constexpr bool differentiable = true;

  struct Segment {
    IndexRange range;
    long double sum = 0.0L;
  };

  explicit QuadraticLoss(std::vector<double> y) : y_(std::move(y)), prefix_(y_.size() + 1, 0.0L) {
    if (y_.empty()) throw InvalidData("quadratic loss: no observations");
    for (std::size_t i = 0; i < y_.size(); ++i) prefix_[i + 1] = prefix_[i] + y_[i];
  }

  [[nodiscard]] std::size_t size() const { return y_.size(); }
  [[nodiscard]] std::span<const double> responses() const { return y_; }

  [[nodiscard]] double value(std::size_t i, double z) const {
    const double u = z - y_[i];
    return 0.5 * u * u;
  }
  [[nodiscard]] double derivative(std::size_t i, double z, Side = Side::right) const { return z - y_[i]; }
  [[nodiscard]] double integral(std::size_t i, double a, double b) const {
    const double ua = a - y_[i];
    const double ub = b - y_[i];
    return (ub * ub * ub - ua * ua * ua) / 6.0;
  }

  [[nodiscard]] Segment segment(IndexRange r) const { return {r, prefix_[r.end] - prefix_[r.begin]}; }
  [[nodiscard]] Segment join(const Segment& a, const Segment& b) const {
    return {{a.range.begin, b.range.end}, a.sum + b.sum};
  }
  [[nodiscard]] double pooled_derivative(const Segment& s, double z) const {
    return static_cast<double>(static_cast<long double>(s.range.size()) * z - s.sum);
  }
  [[nodiscard]] double lower_inverse(const Segment& s, double t) const {
    return static_cast<double>((s.sum + t) / static_cast<long double>(s.range.size()));
  }
  [[nodiscard]] double upper_inverse(const Segment& s, double t) const { return lower_inverse(s, t); }

 private:
  std::vector<double> y_;
  std::vector<long double> prefix_;
};

/// R_i(z) = sqrt(delta^2 + (z - y_i)^2) + min(z - c1, 0)^2 + max(z - c2, 0)^2
/// with c1 = min y, c2 = max y. The quadratic tails make the derivative
/// onto the real line without moving the minimizer, which stays inside
/// [min y, max y].
class PseudoHuberLoss {
 public:
  static constexpr bool differentiable = true;
  using Segment = IndexRange;

  PseudoHuberLoss(std::vector<double> y, double delta) : y_(std::move(y)), delta_(delta) {
    if (!(delta > 0.0) || !std::isfinite(delta)) throw InvalidParameter("pseudo-Huber: delta must be > 0");
    if (y_.empty()) throw InvalidData("pseudo-Huber loss: no observations");
    std::tie(c1_, c2_) = detail::min_max(y_);
  }

  [[nodiscard]] std::size_t size() const { return y_.size(); }
  [[nodiscard]] double delta() const { return delta_; }
  [[nodiscard]] std::span<const double> responses() const { return y_; }

  [[nodiscard]] double value(std::size_t i, double z) const {
    const double u = z - y_[i];
    const double lo = std::min(z - c1_, 0.0);
    const double hi = std::max(z - c2_, 0.0);
    return std::hypot(delta_, u) + lo * lo + hi * hi;
  }
  [[nodiscard]] double derivative(std::size_t i, double z, Side = Side::right) const {
    const double u = z - y_[i];
    return u / std::hypot(delta_, u) + 2.0 * std::min(z - c1_, 0.0) + 2.0 * std::max(z - c2_, 0.0);
  }

  [[nodiscard]] Segment segment(IndexRange r) const { return r; }
  [[nodiscard]] Segment join(const Segment& a, const Segment& b) const { return {a.begin, b.end}; }
  [[nodiscard]] double pooled_derivative(const Segment& s, double z) const {
    return tautline::pooled_derivative(*this, s, z, Side::right);
  }
  [[nodiscard]] double lower_inverse(const Segment& s, double t) const {
    return detail::invert_monotone([&](double z) { return pooled_derivative(s, z); }, t, guess(),
                                   detail::InverseKind::lower);
  }
  [[nodiscard]] double upper_inverse(const Segment& s, double t) const {
    return detail::invert_monotone([&](double z) { return pooled_derivative(s, z); }, t, guess(),
                                   detail::InverseKind::upper);
  }

 private:
  [[nodiscard]] double guess() const { return 0.5 * (c1_ + c2_); }

  std::vector<double> y_;
  double delta_;
  double c1_ = 0.0;
  double c2_ = 0.0;
};

/// Check loss rho_beta(z - y_i) = |u|/2 - (beta - 1/2) u for quantile
/// regression. Not differentiable at the data, so it carries one-sided
/// derivatives only and has no inverses.
class CheckLoss {
 public:
  static constexpr bool differentiable = false;

  CheckLoss(std::vector<double> y, double beta) : y_(std::move(y)), beta_(beta) {
    if (!(beta > 0.0 && beta < 1.0)) throw InvalidParameter("check loss: beta must lie in (0, 1)");
    if (y_.empty()) throw InvalidData("check loss: no observations");
  }

  [[nodiscard]] std::size_t size() const { return y_.size(); }
  [[nodiscard]] double beta() const { return beta_; }
  [[nodiscard]] std::span<const double> responses() const { return y_; }

  [[nodiscard]] double value(std::size_t i, double z) const { return rho(z - y_[i]); }
  // R'(z+) = 1{y <= z} - beta, R'(z-) = 1{y < z} - beta.
  [[nodiscard]] double derivative(std::size_t i, double z, Side side) const {
    const bool below = side == Side::right ? y_[i] <= z : y_[i] < z;
    return (below ? 1.0 : 0.0) - beta_;
  }
  [[nodiscard]] double integral(std::size_t i, double a, double b) const {
    // Antiderivative of rho(t - y) is piecewise quadratic with a kink at y.
    const auto anti = [&](double z) {
      const double u = z - y_[i];
      return u >= 0.0 ? 0.5 * (1.0 - beta_) * u * u : -0.5 * beta_ * u * u;
    };
    return anti(b) - anti(a);
  }

  [[nodiscard]] double rho(double u) const { return u >= 0.0 ? (1.0 - beta_) * u : -beta_ * u; }

 private:
  std::vector<double> y_;
  double beta_;
};

enum class Family { poisson, bernoulli };

inline std::string to_string(Family f) { return f == Family::poisson ? "poisson" : "bernoulli"; }

namespace expfam_detail {

inline double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double log1pexp(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace expfam_detail

/// b'(z): mean as a function of the natural parameter.
inline double mean_function(Family family, double z) {
  return family == Family::poisson ? std::exp(z) : expfam_detail::logistic(z);
}

/// (b')^{-1}(mu) for mu inside the open mean range.
inline double natural_parameter(Family family, double mu) {
  if (family == Family::poisson) {
    if (!(mu > 0.0)) throw CoercivityError("poisson: mean " + std::to_string(mu) + " outside (0, inf)");
    return std::log(mu);
  }
  if (!(mu > 0.0 && mu < 1.0)) throw CoercivityError("bernoulli: mean " + std::to_string(mu) + " outside (0, 1)");
  return std::log(mu) - std::log1p(-mu);
}

/// Negative log-likelihood R_i(z) = b(z) - z y_i of a one-parameter
/// exponential family in natural parametrization.
class ExpFamLoss {
 public:
  static constexpr bool differentiable = true;

  struct Segment {
    IndexRange range;
    double sum = 0.0;
  };

  ExpFamLoss(std::vector<double> y, Family family) : y_(std::move(y)), family_(family), prefix_(y_.size() + 1, 0.0) {
    if (y_.empty()) throw InvalidData("exponential family loss: no observations");
    for (std::size_t i = 0; i < y_.size(); ++i) {
      const double v = y_[i];
      const bool ok = family == Family::poisson ? (v >= 0.0 && v == std::floor(v)) : (v == 0.0 || v == 1.0);
      if (!ok) {
        throw InvalidData(to_string(family) + ": response " + std::to_string(v) + " at row " + std::to_string(i + 1) +
                          " outside the support");
      }
      prefix_[i + 1] = prefix_[i] + v;
    }
  }

  [[nodiscard]] std::size_t size() const { return y_.size(); }
  [[nodiscard]] Family family() const { return family_; }
  [[nodiscard]] std::span<const double> responses() const { return y_; }

  [[nodiscard]] double value(std::size_t i, double z) const { return cumulant(z) - z * y_[i]; }
  [[nodiscard]] double derivative(std::size_t i, double z, Side = Side::right) const {
    return mean_function(family_, z) - y_[i];
  }

  [[nodiscard]] Segment segment(IndexRange r) const { return {r, prefix_[r.end] - prefix_[r.begin]}; }
  [[nodiscard]] Segment join(const Segment& a, const Segment& b) const {
    return {{a.range.begin, b.range.end}, a.sum + b.sum};
  }
  [[nodiscard]] double pooled_derivative(const Segment& s, double z) const {
    return static_cast<double>(s.range.size()) * mean_function(family_, z) - s.sum;
  }
  // The pooled derivative is l * b'(z) - S, so the inverse is closed form
  // whenever (t + S) / l is an attainable mean.
  [[nodiscard]] double lower_inverse(const Segment& s, double t) const {
    return natural_parameter(family_, (t + s.sum) / static_cast<double>(s.range.size()));
  }
  [[nodiscard]] double upper_inverse(const Segment& s, double t) const { return lower_inverse(s, t); }

 private:
  [[nodiscard]] double cumulant(double z) const {
    return family_ == Family::poisson ? std::exp(z) : expfam_detail::log1pexp(z);
  }

  std::vector<double> y_;
  Family family_;
  std::vector<double> prefix_;
};

/// Sliding-average approximation of an arbitrary convex loss:
/// R_eps(z) = (1/2eps) int_{z-eps}^{z+eps} R(t) dt + max(z - 1/eps, 0)^2/2 + min(z + 1/eps, 0)^2/2.
/// Continuously differentiable with derivative onto the real line.
template <ConvexLoss Base>
class SmoothedLoss {
 public:
  static constexpr bool differentiable = true;
  using Segment = IndexRange;

  SmoothedLoss(Base base, double eps) : base_(std::move(base)), eps_(eps) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw InvalidParameter("smoothing: eps must be > 0");
  }

  [[nodiscard]] std::size_t size() const { return base_.size(); }
  [[nodiscard]] double eps() const { return eps_; }
  [[nodiscard]] const Base& base() const { return base_; }

  [[nodiscard]] double value(std::size_t i, double z) const {
    const double a = z - eps_;
    const double b = z + eps_;
    double avg = 0.0;
    if constexpr (HasExactIntegral<Base>) {
      avg = base_.integral(i, a, b) / (2.0 * eps_);
    } else {
      avg = detail::gauss_legendre16([&](double t) { return base_.value(i, t); }, a, b) / (2.0 * eps_);
    }
    const double hi = std::max(z - 1.0 / eps_, 0.0);
    const double lo = std::min(z + 1.0 / eps_, 0.0);
    return avg + 0.5 * hi * hi + 0.5 * lo * lo;
  }

  [[nodiscard]] double derivative(std::size_t i, double z, Side = Side::right) const {
    const double slope = (base_.value(i, z + eps_) - base_.value(i, z - eps_)) / (2.0 * eps_);
    return slope + std::max(z - 1.0 / eps_, 0.0) + std::min(z + 1.0 / eps_, 0.0);
  }

  [[nodiscard]] Segment segment(IndexRange r) const { return r; }
  [[nodiscard]] Segment join(const Segment& a, const Segment& b) const { return {a.begin, b.end}; }
  [[nodiscard]] double pooled_derivative(const Segment& s, double z) const {
    return tautline::pooled_derivative(*this, s, z, Side::right);
  }
  [[nodiscard]] double lower_inverse(const Segment& s, double t) const {
    return detail::invert_monotone([&](double z) { return pooled_derivative(s, z); }, t, 0.0,
                                   detail::InverseKind::lower);
  }
  [[nodiscard]] double upper_inverse(const Segment& s, double t) const {
    return detail::invert_monotone([&](double z) { return pooled_derivative(s, z); }, t, 0.0,
                                   detail::InverseKind::upper);
  }

 private:
  Base base_;
  double eps_;
};

template <ConvexLoss Base>
SmoothedLoss<Base> smooth_loss(Base base, double eps) {
  return SmoothedLoss<Base>(std::move(base), eps);
}

namespace detail {
template <class B, bool = RegularLoss<B>>
struct segment_of {
  using type = void;
};
template <class B>
struct segment_of<B, true> {
  using type = typename B::Segment;
};
}  // namespace detail

/// Tie blocks as super-observations: block b pools the losses of the
/// observations in [offsets[b], offsets[b+1]).
template <ConvexLoss Base>
class BlockedLoss {
 public:
  static constexpr bool differentiable = Base::differentiable;

  BlockedLoss(Base base, std::vector<std::size_t> offsets) : base_(std::move(base)), offsets_(std::move(offsets)) {
    if (offsets_.size() < 2 || offsets_.front() != 0 || offsets_.back() != base_.size()) {
      throw InvalidData("block offsets must run from 0 to n");
    }
  }

  [[nodiscard]] std::size_t size() const { return offsets_.size() - 1; }
  [[nodiscard]] const Base& base() const { return base_; }
  [[nodiscard]] IndexRange observations(IndexRange blocks) const {
    return {offsets_[blocks.begin], offsets_[blocks.end]};
  }

  [[nodiscard]] double value(std::size_t b, double z) const {
    double s = 0.0;
    for (std::size_t i = offsets_[b]; i < offsets_[b + 1]; ++i) s += base_.value(i, z);
    return s;
  }
  [[nodiscard]] double derivative(std::size_t b, double z, Side side) const {
    return tautline::pooled_derivative(base_, IndexRange{offsets_[b], offsets_[b + 1]}, z, side);
  }

  // Only instantiated when Base is regular.
  [[nodiscard]] auto segment(IndexRange r) const
    requires RegularLoss<Base>
  {
    return base_.segment(observations(r));
  }
  template <class S>
  [[nodiscard]] S join(const S& a, const S& b) const
    requires RegularLoss<Base>
  {
    return base_.join(a, b);
  }
  template <class S>
  [[nodiscard]] double pooled_derivative(const S& s, double z) const
    requires RegularLoss<Base>
  {
    return base_.pooled_derivative(s, z);
  }
  template <class S>
  [[nodiscard]] double lower_inverse(const S& s, double t) const
    requires RegularLoss<Base>
  {
    return base_.lower_inverse(s, t);
  }
  template <class S>
  [[nodiscard]] double upper_inverse(const S& s, double t) const
    requires RegularLoss<Base>
  {
    return base_.upper_inverse(s, t);
  }

  using Segment = typename detail::segment_of<Base>::type;

 private:
  Base base_;
  std::vector<std::size_t> offsets_;
};

}  // namespace tautline
