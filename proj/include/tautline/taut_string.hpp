#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <span>
#include <utility>
#include <vector>

#include "tautline/data.hpp"
#include "tautline/error.hpp"
#include "tautline/loss.hpp"

namespace tautline {

/// Result of a penalized fit.
struct Fit {
  std::vector<double> values;
  // Maximal constant runs of `values`.
  std::vector<IndexRange> segments;
  // Partial sums of R'_i(values_i -) and R'_i(values_i +) for k = 1..n.
  std::vector<double> cumsum_left;
  std::vector<double> cumsum_right;
  double objective = 0.0;

  // Segment id of each observation, 0-based.
  [[nodiscard]] std::vector<std::size_t> segment_ids() const {
    std::vector<std::size_t> id(values.size());
    for (std::size_t s = 0; s < segments.size(); ++s) {
      for (std::size_t i = segments[s].begin; i < segments[s].end; ++i) id[i] = s;
    }
    return id;
  }
};

/// Maximal runs of exactly equal values.
inline std::vector<IndexRange> constant_runs(std::span<const double> f) {
  std::vector<IndexRange> runs;
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= f.size(); ++i) {
    if (i == f.size() || f[i] != f[begin]) {
      runs.push_back({begin, i});
      begin = i;
    }
  }
  return runs;
}

/// T(f) = sum_i R_i(f_i) + sum_j lambda_j |f_{j+1} - f_j|.
template <ConvexLoss M>
double objective(const M& model, const LambdaVector& lambda, std::span<const double> f) {
  long double t = 0.0L;
  for (std::size_t i = 0; i < f.size(); ++i) t += model.value(i, f[i]);
  for (std::size_t j = 1; j < f.size(); ++j) t += static_cast<long double>(lambda.gap(j)) * std::abs(f[j] - f[j - 1]);
  return static_cast<double>(t);
}

/// Interval that contains every minimizer of T for losses rho(z - Y_i)
/// with rho minimized only at 0: [min Y, max Y], open when strict.
inline std::pair<double, double> range_bounds(std::span<const double> y, bool require_open = false) {
  if (y.empty()) throw InvalidData("range bounds: no observations");
  const auto [lo, hi] = detail::min_max(y);
  if (require_open && !(lo < hi)) throw DegenerateRange("range bounds: constant responses give a closed singleton range");
  return {lo, hi};
}

template <ConvexLoss M>
void fill_cumsums(const M& model, Fit& fit) {
  const std::size_t n = fit.values.size();
  fit.cumsum_left.assign(n, 0.0);
  fit.cumsum_right.assign(n, 0.0);
  long double l = 0.0L;
  long double r = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    r += model.derivative(i, fit.values[i], Side::right);
    l += M::differentiable ? model.derivative(i, fit.values[i], Side::right) : model.derivative(i, fit.values[i], Side::left);
    fit.cumsum_left[i] = static_cast<double>(l);
    fit.cumsum_right[i] = static_cast<double>(r);
  }
}

/// State of the lower/upper candidate pair after step K.
struct CandidatePair {
  std::size_t K = 0;
  std::size_t k_o = 0;
  double Lambda_o = 0.0;
  // f and g on 1..K; both equal the agreed prefix on 1..k_o.
  std::vector<double> f;
  std::vector<double> g;
  std::vector<IndexRange> f_segments;
  std::vector<IndexRange> g_segments;
};

/// The sequential construction of the lower candidate f (antitonic beyond
/// k_o) and the upper candidate g (isotonic beyond k_o).
///
/// Indices in the public interface are 1-based counts: K observations have
/// been processed and the first k_o of them are settled. Every segment of g
/// ending at e satisfies sum_{i<=e} R'_i(g_i) = lambda_e, every segment of f
/// the same with -lambda_e.
template <RegularLoss Model>
class TautStringSolver {
 public:
  using Summary = typename Model::Segment;

  struct Piece {
    IndexRange range;
    double value;
    Summary summary;
  };

  TautStringSolver(const Model& model, const LambdaVector& lambda) : model_(model), lambda_(lambda), n_(model.size()) {
    if (n_ == 0) throw InvalidData("taut string: no observations");
    if (lambda.points() != n_) {
      throw InvalidParameter("taut string: lambda has " + std::to_string(lambda.points()) + " points, model has " +
                             std::to_string(n_));
    }
  }

  [[nodiscard]] std::size_t n() const { return n_; }
  [[nodiscard]] std::size_t K() const { return K_; }
  [[nodiscard]] std::size_t k_o() const { return prefix_.size(); }
  [[nodiscard]] double Lambda_o() const { return Lambda_o_; }
  [[nodiscard]] bool done() const { return K_ == n_; }
  [[nodiscard]] const std::deque<Piece>& f_pieces() const { return f_; }
  [[nodiscard]] const std::deque<Piece>& g_pieces() const { return g_; }

  // Step 1.
  void initialize() {
    K_ = 1;
    f_.clear();
    g_.clear();
    prefix_.clear();
    Lambda_o_ = 0.0;
    const IndexRange r{0, 1};
    const Summary s = model_.segment(r);
    g_.push_back({r, model_.upper_inverse(s, lambda_.gap(1)), s});
    f_.push_back({r, model_.lower_inverse(s, -lambda_.gap(1)), s});
    settle_front();
  }

  // Step K+1 without the final modification.
  void extend_g() {
    const std::size_t e = K_ + 1;
    const IndexRange r{K_, e};
    const Summary s = model_.segment(r);
    g_.push_back({r, upper_value(s, K_, e), s});
    while (g_.size() >= 2 && g_[g_.size() - 2].value > g_.back().value) {
      Piece last = std::move(g_.back());
      g_.pop_back();
      Piece& prev = g_.back();
      prev.summary = model_.join(prev.summary, last.summary);
      prev.range.end = e;
      prev.value = upper_value(prev.summary, prev.range.begin, e);
    }
  }

  void extend_f() {
    const std::size_t e = K_ + 1;
    const IndexRange r{K_, e};
    const Summary s = model_.segment(r);
    f_.push_back({r, lower_value(s, K_, e), s});
    while (f_.size() >= 2 && f_[f_.size() - 2].value < f_.back().value) {
      Piece last = std::move(f_.back());
      f_.pop_back();
      Piece& prev = f_.back();
      prev.summary = model_.join(prev.summary, last.summary);
      prev.range.end = e;
      prev.value = lower_value(prev.summary, prev.range.begin, e);
    }
  }

  // Restores g_{k_o+1} >= f_{k_o+1} after both candidates were extended to K.
  void final_modify() {
    while (f_.front().value > g_.front().value) {
      if (g_.size() == 1 && f_.size() >= 2) {
        // f's leftmost segment becomes part of the solution; g restarts after it.
        settle(f_.front(), -lambda_.gap(f_.front().range.end));
        f_.pop_front();
        const IndexRange r{k_o(), K_};
        const Summary s = model_.segment(r);
        g_.front() = {r, upper_value(s, r.begin, r.end), s};
      } else if (f_.size() == 1 && g_.size() >= 2) {
        settle(g_.front(), lambda_.gap(g_.front().range.end));
        g_.pop_front();
        const IndexRange r{k_o(), K_};
        const Summary s = model_.segment(r);
        f_.front() = {r, lower_value(s, r.begin, r.end), s};
      } else {
        // Two constant candidates cross only through rounding.
        std::swap(f_.front().value, g_.front().value);
      }
    }
  }

  // Moves leading indices where f and g agree into the settled prefix.
  void settle_front() {
    while (!f_.empty() && !g_.empty() && f_.front().value == g_.front().value) {
      Piece& pf = f_.front();
      Piece& pg = g_.front();
      const std::size_t e = std::min(pf.range.end, pg.range.end);
      const bool f_ends = pf.range.end == e;
      const double value = pf.value;
      const double lambda_o = f_ends ? -lambda_.gap(e) : lambda_.gap(e);
      prefix_.resize(e, value);
      Lambda_o_ = lambda_o;
      trim_front(f_, e);
      trim_front(g_, e);
    }
  }

  void advance() {
    if (K_ == 0) {
      initialize();
      return;
    }
    if (done()) return;
    extend_g();
    extend_f();
    close_step();
  }

  // Completes step K+1 after both candidates were extended.
  void close_step() {
    ++K_;
    final_modify();
    settle_front();
  }

  void run() {
    if (K_ == 0) initialize();
    while (!done()) advance();
  }

  [[nodiscard]] CandidatePair snapshot() const {
    CandidatePair p;
    p.K = K_;
    p.k_o = k_o();
    p.Lambda_o = Lambda_o_;
    p.f = prefix_;
    p.g = prefix_;
    for (const auto& piece : f_) {
      p.f.resize(piece.range.end, piece.value);
      p.f_segments.push_back(piece.range);
    }
    for (const auto& piece : g_) {
      p.g.resize(piece.range.end, piece.value);
      p.g_segments.push_back(piece.range);
    }
    return p;
  }

  // Tail value r on k_o+1..n once K = n.
  [[nodiscard]] double tail_value() const {
    if (f_.empty()) throw std::logic_error("taut string: no tail to extract");
    const double lo = f_.front().value;
    const double hi = g_.front().value;
    if (prefix_.empty()) {
      const double r = model_.lower_inverse(model_.segment({0, n_}), 0.0);
      return std::clamp(r, lo, hi);
    }
    return Lambda_o_ < 0.0 ? hi : lo;
  }

  [[nodiscard]] std::vector<double> solution() const {
    if (!done()) throw std::logic_error("taut string: solution requested before K = n");
    std::vector<double> f = prefix_;
    if (f.size() < n_) f.resize(n_, tail_value());
    return f;
  }

 private:
  double upper_value(const Summary& s, std::size_t begin, std::size_t end) const {
    return model_.upper_inverse(s, lambda_.gap(end) - base(begin));
  }
  double lower_value(const Summary& s, std::size_t begin, std::size_t end) const {
    return model_.lower_inverse(s, -lambda_.gap(end) - lower_base(begin));
  }
  // Partial sum of g up to 0-based index begin (exclusive).
  double base(std::size_t begin) const { return begin > k_o() ? lambda_.gap(begin) : Lambda_o_; }
  double lower_base(std::size_t begin) const { return begin > k_o() ? -lambda_.gap(begin) : Lambda_o_; }

  void settle(const Piece& piece, double lambda_o) {
    prefix_.resize(piece.range.end, piece.value);
    Lambda_o_ = lambda_o;
  }

  void trim_front(std::deque<Piece>& stack, std::size_t e) {
    Piece& p = stack.front();
    if (p.range.end == e) {
      stack.pop_front();
    } else {
      p.range.begin = e;
      p.summary = model_.segment(p.range);
    }
  }

  const Model& model_;
  const LambdaVector& lambda_;
  std::size_t n_;
  std::size_t K_ = 0;
  std::vector<double> prefix_;
  double Lambda_o_ = 0.0;
  std::deque<Piece> f_;
  std::deque<Piece> g_;
};

/// Minimizer values of T for a regular loss.
template <RegularLoss M>
std::vector<double> taut_string_values(const M& model, const LambdaVector& lambda) {
  TautStringSolver<M> solver(model, lambda);
  solver.run();
  return solver.solution();
}

template <ConvexLoss M>
Fit make_fit(const M& model, const LambdaVector& lambda, std::vector<double> values) {
  Fit fit;
  fit.values = std::move(values);
  fit.segments = constant_runs(fit.values);
  fill_cumsums(model, fit);
  fit.objective = objective(model, lambda, fit.values);
  return fit;
}

/// Algorithm I.
template <RegularLoss M>
Fit fit_taut(const M& model, const LambdaVector& lambda) {
  return make_fit(model, lambda, taut_string_values(model, lambda));
}

/// Algorithm I on tied design points: each block of equal x acts as one
/// observation with the summed loss, and `lambda` has one gap per pair of
/// adjacent blocks.
template <RegularLoss M>
Fit fit_taut(const M& model, const LambdaVector& lambda, const DataSet& data) {
  if (model.size() != data.size()) throw InvalidData("model and data differ in length");
  if (!data.has_ties()) return fit_taut(model, lambda);
  const BlockedLoss<M> blocked(model, {data.offsets().begin(), data.offsets().end()});
  const auto per_block = taut_string_values(blocked, lambda);
  Fit fit;
  fit.values = data.expand(per_block);
  fit.segments = constant_runs(fit.values);
  fill_cumsums(model, fit);
  fit.objective = objective(blocked, lambda, per_block);
  return fit;
}

}  // namespace tautline
