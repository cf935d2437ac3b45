#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tautline/error.hpp"

namespace tautline {

// Which one-sided derivative R'(z-) or R'(z+) to evaluate.
enum class Side { left, right };

// Half-open range [begin, end) of 0-based observation indices.
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  [[nodiscard]] std::size_t size() const { return end - begin; }
  [[nodiscard]] bool empty() const { return end <= begin; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

/// Per-gap penalties for n points.
///
/// Gap k (1 <= k <= n-1) sits between points k and k+1 in 1-based numbering.
/// `gap(0)` and `gap(n)` return 0, so sums such as lambda_{j-1} need no
/// special cases at the boundaries.
class LambdaVector {
 public:
  LambdaVector() = default;

  LambdaVector(std::size_t points, std::vector<double> gaps) : points_(points), gaps_(std::move(gaps)) {
    if (points_ == 0) throw InvalidParameter("lambda: at least one point required");
    if (gaps_.size() != points_ - 1) {
      throw InvalidParameter("lambda: expected " + std::to_string(points_ - 1) + " gap penalties, got " +
                             std::to_string(gaps_.size()));
    }
    for (double v : gaps_) {
      if (!(v > 0.0) || !std::isfinite(v)) throw InvalidParameter("lambda: every gap penalty must be finite and > 0");
    }
  }

  static LambdaVector constant(std::size_t points, double value) {
    if (points == 0) throw InvalidParameter("lambda: at least one point required");
    return LambdaVector(points, std::vector<double>(points - 1, value));
  }

  [[nodiscard]] std::size_t points() const { return points_; }
  [[nodiscard]] std::span<const double> gaps() const { return gaps_; }

  // lambda_k for 0 <= k <= n with lambda_0 = lambda_n = 0.
  [[nodiscard]] double gap(std::size_t k) const { return (k == 0 || k >= points_) ? 0.0 : gaps_[k - 1]; }

  [[nodiscard]] double max() const {
    return gaps_.empty() ? 0.0 : *std::max_element(gaps_.begin(), gaps_.end());
  }

  [[nodiscard]] bool is_constant_on(std::size_t first_gap, std::size_t last_gap) const {
    for (std::size_t k = first_gap; k <= last_gap; ++k) {
      if (gap(k) != gap(first_gap)) return false;
    }
    return true;
  }

 private:
  std::size_t points_ = 0;
  std::vector<double> gaps_;
};

/// Regression input with tie blocks.
///
/// `x` holds the distinct design points, `y` one response per original
/// observation, and `offsets` the block boundaries i(0)=0 < i(1) < ... < i(m)=n
/// so block b covers observations [offsets[b], offsets[b+1]).
class DataSet {
 public:
  DataSet() = default;

  static DataSet from_y(std::vector<double> y) {
    std::vector<double> x(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i + 1);
    return from_xy(x, std::move(y));
  }

  static DataSet from_xy(std::span<const double> x, std::vector<double> y) {
    if (x.size() != y.size()) throw InvalidData("x and y differ in length");
    if (y.empty()) throw InvalidData("no observations");
    DataSet d;
    d.y_ = std::move(y);
    d.offsets_.push_back(0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!std::isfinite(x[i]) || !std::isfinite(d.y_[i])) {
        throw InvalidData("non-finite value at row " + std::to_string(i + 1));
      }
      if (i > 0 && x[i] < x[i - 1]) {
        throw InvalidData("x must be non-decreasing (row " + std::to_string(i + 1) + ")");
      }
      if (i == 0 || x[i] != x[i - 1]) {
        if (i > 0) d.offsets_.push_back(i);
        d.x_.push_back(x[i]);
      }
    }
    d.offsets_.push_back(x.size());
    return d;
  }

  [[nodiscard]] std::size_t size() const { return y_.size(); }
  [[nodiscard]] std::size_t blocks() const { return x_.size(); }
  [[nodiscard]] bool has_ties() const { return blocks() != size(); }
  [[nodiscard]] std::span<const double> x() const { return x_; }
  [[nodiscard]] std::span<const double> y() const { return y_; }
  [[nodiscard]] std::span<const std::size_t> offsets() const { return offsets_; }
  [[nodiscard]] IndexRange block(std::size_t b) const { return {offsets_[b], offsets_[b + 1]}; }

  // Broadcasts one value per block back to one value per observation.
  [[nodiscard]] std::vector<double> expand(std::span<const double> per_block) const {
    std::vector<double> out(size());
    for (std::size_t b = 0; b < blocks(); ++b) {
      std::fill(out.begin() + static_cast<std::ptrdiff_t>(offsets_[b]),
                out.begin() + static_cast<std::ptrdiff_t>(offsets_[b + 1]), per_block[b]);
    }
    return out;
  }

 private:
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<std::size_t> offsets_;
};

}  // namespace tautline
