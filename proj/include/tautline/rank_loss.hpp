#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numeric>
#include <span>
#include <vector>

#include "tautline/data.hpp"
#include "tautline/error.hpp"

namespace tautline {

/// A permutation Z of 1..n with #{i : y_i < y_j} + 1 <= Z_j <= #{i : y_i <= y_j}.
struct RankVector {
  std::vector<std::uint32_t> z;

  [[nodiscard]] std::size_t size() const { return z.size(); }
};

/// Ranks with ties broken by original index (a stable sort), which always
/// satisfies the bracketing condition above.
inline RankVector rank_vector(std::span<const double> y) {
  std::vector<std::size_t> order(y.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return y[a] < y[b]; });
  RankVector r;
  r.z.resize(y.size());
  for (std::size_t k = 0; k < order.size(); ++k) r.z[order[k]] = static_cast<std::uint32_t>(k + 1);
  return r;
}

namespace detail {

class RankBitVector {
 public:
  explicit RankBitVector(std::size_t n = 0) : words_((n >> 6) + 1, 0), cumulative_((n >> 6) + 2, 0) {}

  void set(std::size_t i) { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }

  void finalize() {
    for (std::size_t w = 0; w < words_.size(); ++w) {
      cumulative_[w + 1] = cumulative_[w] + static_cast<std::uint32_t>(std::popcount(words_[w]));
    }
  }

  // Number of set bits in [0, i).
  [[nodiscard]] std::size_t rank1(std::size_t i) const {
    const std::uint64_t mask = (std::uint64_t{1} << (i & 63)) - 1;
    return cumulative_[i >> 6] + static_cast<std::size_t>(std::popcount(words_[i >> 6] & mask));
  }
  [[nodiscard]] std::size_t rank0(std::size_t i) const { return i - rank1(i); }

 private:
  std::vector<std::uint64_t> words_;
  std::vector<std::uint32_t> cumulative_;
};

}  // namespace detail

/// Wavelet matrix over integer values in [0, 2^levels): k-th smallest and
/// rank counts inside any index range in O(levels) time, n*levels bits.
class WaveletMatrix {
 public:
  WaveletMatrix() = default;

  explicit WaveletMatrix(std::vector<std::uint32_t> values) : size_(values.size()) {
    std::uint32_t top = 0;
    for (auto v : values) top = std::max(top, v);
    levels_ = std::max(1, static_cast<int>(std::bit_width(top)));
    bits_.reserve(static_cast<std::size_t>(levels_));
    zeros_.reserve(static_cast<std::size_t>(levels_));
    std::vector<std::uint32_t> next(values.size());
    for (int level = levels_ - 1; level >= 0; --level) {
      detail::RankBitVector bv(size_);
      std::size_t zeros = 0;
      for (std::size_t i = 0; i < size_; ++i) {
        if ((values[i] >> level) & 1U) {
          bv.set(i);
        } else {
          ++zeros;
        }
      }
      bv.finalize();
      std::size_t lo = 0;
      std::size_t hi = zeros;
      for (std::size_t i = 0; i < size_; ++i) {
        if ((values[i] >> level) & 1U) {
          next[hi++] = values[i];
        } else {
          next[lo++] = values[i];
        }
      }
      values.swap(next);
      bits_.push_back(std::move(bv));
      zeros_.push_back(zeros);
    }
  }

  [[nodiscard]] std::size_t size() const { return size_; }

  // k-th smallest (0-based k) of the values at positions [b, e).
  [[nodiscard]] std::uint32_t kth_smallest(std::size_t b, std::size_t e, std::size_t k) const {
    std::uint32_t value = 0;
    for (int d = 0; d < levels_; ++d) {
      const auto& bv = bits_[static_cast<std::size_t>(d)];
      const std::size_t zb = bv.rank0(b);
      const std::size_t ze = bv.rank0(e);
      const std::size_t zeros_in_range = ze - zb;
      if (k < zeros_in_range) {
        b = zb;
        e = ze;
      } else {
        k -= zeros_in_range;
        const std::size_t z = zeros_[static_cast<std::size_t>(d)];
        b = z + (b - zb);
        e = z + (e - ze);
        value |= std::uint32_t{1} << (levels_ - 1 - d);
      }
    }
    return value;
  }

  // Number of values < v at positions [b, e).
  [[nodiscard]] std::size_t count_less(std::size_t b, std::size_t e, std::int64_t v) const {
    if (v <= 0) return 0;
    if (v >= (std::int64_t{1} << levels_)) return e - b;
    std::size_t result = 0;
    for (int d = 0; d < levels_; ++d) {
      const auto& bv = bits_[static_cast<std::size_t>(d)];
      const std::size_t zb = bv.rank0(b);
      const std::size_t ze = bv.rank0(e);
      if ((v >> (levels_ - 1 - d)) & 1) {
        result += ze - zb;
        const std::size_t z = zeros_[static_cast<std::size_t>(d)];
        b = z + (b - zb);
        e = z + (e - ze);
      } else {
        b = zb;
        e = ze;
      }
    }
    return result;
  }

 private:
  std::size_t size_ = 0;
  int levels_ = 1;
  std::vector<detail::RankBitVector> bits_;
  std::vector<std::size_t> zeros_;
};

/// Order statistics of a segment's ranks answered from one shared wavelet
/// matrix. Segments are plain index ranges, so joining is O(1).
class WaveletRanks {
 public:
  using Segment = IndexRange;

  explicit WaveletRanks(const RankVector& ranks) {
    std::vector<std::uint32_t> shifted(ranks.z.size());
    for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] = ranks.z[i] - 1;
    index_ = std::make_shared<const WaveletMatrix>(std::move(shifted));
  }

  [[nodiscard]] Segment segment(IndexRange r) const { return r; }
  [[nodiscard]] Segment join(const Segment& a, const Segment& b) const { return {a.begin, b.end}; }
  [[nodiscard]] static std::size_t size(const Segment& s) { return s.size(); }
  // i-th smallest rank (1-based i) in the segment.
  [[nodiscard]] std::uint32_t kth(const Segment& s, std::size_t i) const {
    return index_->kth_smallest(s.begin, s.end, i - 1) + 1;
  }
  // Number of ranks <= v in the segment.
  [[nodiscard]] std::size_t count_le(const Segment& s, std::int64_t v) const {
    return index_->count_less(s.begin, s.end, v);
  }

 private:
  std::shared_ptr<const WaveletMatrix> index_;
};

/// The ranks of one segment held as a sorted list.
struct SegmentRanks {
  IndexRange range;
  std::vector<std::uint32_t> sorted;
};

/// Merge-sort bookkeeping: each segment keeps its sorted ranks and two
/// adjacent segments combine with one linear merge.
class MergeSortRanks {
 public:
  using Segment = SegmentRanks;

  explicit MergeSortRanks(const RankVector& ranks) : z_(std::make_shared<const std::vector<std::uint32_t>>(ranks.z)) {}

  [[nodiscard]] Segment segment(IndexRange r) const {
    SegmentRanks s{r, {z_->begin() + static_cast<std::ptrdiff_t>(r.begin), z_->begin() + static_cast<std::ptrdiff_t>(r.end)}};
    std::sort(s.sorted.begin(), s.sorted.end());
    return s;
  }
  [[nodiscard]] Segment join(const Segment& a, const Segment& b) const {
    SegmentRanks s{{a.range.begin, b.range.end}, {}};
    s.sorted.resize(a.sorted.size() + b.sorted.size());
    std::merge(a.sorted.begin(), a.sorted.end(), b.sorted.begin(), b.sorted.end(), s.sorted.begin());
    return s;
  }
  [[nodiscard]] static std::size_t size(const Segment& s) { return s.sorted.size(); }
  [[nodiscard]] std::uint32_t kth(const Segment& s, std::size_t i) const { return s.sorted[i - 1]; }
  [[nodiscard]] std::size_t count_le(const Segment& s, std::int64_t v) const {
    if (v < 1) return 0;
    return static_cast<std::size_t>(
        std::upper_bound(s.sorted.begin(), s.sorted.end(), static_cast<std::uint32_t>(std::min<std::int64_t>(v, UINT32_MAX))) -
        s.sorted.begin());
  }

 private:
  std::shared_ptr<const std::vector<std::uint32_t>> z_;
};

/// Smoothed rank loss for quantile regression on the rank scale.
///
/// The derivative of R~_i is -beta on [0, Z_i - 1], a unit ramp on
/// [Z_i - 1, Z_i], 1 - beta on [Z_i, n], and continues with slope one
/// outside [0, n]. Pooled inverses are closed form in the order statistics
/// of the segment's ranks.
template <class Ranks = WaveletRanks>
class RankLoss {
 public:
  static constexpr bool differentiable = true;
  using Segment = typename Ranks::Segment;

  RankLoss(RankVector ranks, double beta) : z_(std::move(ranks)), beta_(beta), index_(z_) {
    if (!(beta > 0.0 && beta < 1.0)) throw InvalidParameter("rank loss: beta must lie in (0, 1)");
    if (z_.z.empty()) throw InvalidData("rank loss: no observations");
  }

  [[nodiscard]] std::size_t size() const { return z_.size(); }
  [[nodiscard]] double beta() const { return beta_; }
  [[nodiscard]] const RankVector& ranks() const { return z_; }
  [[nodiscard]] const Ranks& index() const { return index_; }

  [[nodiscard]] double derivative(std::size_t i, double z, Side = Side::right) const {
    const double n = static_cast<double>(size());
    const double zi = z_.z[i];
    if (z <= 0.0) return z - beta_;
    if (z <= zi - 1.0) return -beta_;
    if (z <= zi) return z - zi + 1.0 - beta_;
    if (z <= n) return 1.0 - beta_;
    return z - n + 1.0 - beta_;
  }

  // Antiderivative of the derivative above, normalized to R~_i(0) = 0.
  [[nodiscard]] double value(std::size_t i, double z) const {
    const double n = static_cast<double>(size());
    const double zi = z_.z[i];
    if (z <= 0.0) return 0.5 * z * z - beta_ * z;
    if (z <= zi - 1.0) return -beta_ * z;
    if (z <= zi) {
      const double u = z - zi + 1.0;
      return -beta_ * z + 0.5 * u * u;
    }
    if (z <= n) return -beta_ * z + 0.5 + (z - zi);
    const double u = z - n;
    return -beta_ * z + 0.5 + (n - zi) + u + 0.5 * u * u;
  }

  [[nodiscard]] Segment segment(IndexRange r) const { return index_.segment(r); }
  [[nodiscard]] Segment join(const Segment& a, const Segment& b) const { return index_.join(a, b); }

  [[nodiscard]] double pooled_derivative(const Segment& s, double z) const {
    const double l = static_cast<double>(Ranks::size(s));
    const double n = static_cast<double>(size());
    if (z <= 0.0) return l * (z - beta_);
    if (z >= n) return l * (z - n + 1.0 - beta_);
    const double fl = std::floor(z);
    const auto k = static_cast<std::int64_t>(fl);
    double d = -l * beta_ + static_cast<double>(index_.count_le(s, k));
    const double frac = z - fl;
    if (frac > 0.0 && index_.count_le(s, k + 1) > index_.count_le(s, k)) d += frac;
    return d;
  }

  [[nodiscard]] double lower_inverse(const Segment& s, double t) const {
    const std::size_t l = Ranks::size(s);
    const double ld = static_cast<double>(l);
    const double lb = ld * beta_;
    if (t <= -lb) return t / ld + beta_;
    if (t > ld - lb) return static_cast<double>(size()) + t / ld - 1.0 + beta_;
    // branch i with i - 1 - l*beta < t <= i - l*beta
    const auto i = clamp_branch(std::ceil(t + lb), l);
    return static_cast<double>(index_.kth(s, i)) + t - static_cast<double>(i) + lb;
  }

  [[nodiscard]] double upper_inverse(const Segment& s, double t) const {
    const std::size_t l = Ranks::size(s);
    const double ld = static_cast<double>(l);
    const double lb = ld * beta_;
    if (t < -lb) return t / ld + beta_;
    if (t >= ld - lb) return static_cast<double>(size()) + t / ld - 1.0 + beta_;
    // branch i with i - 1 - l*beta <= t < i - l*beta
    const auto i = clamp_branch(std::floor(t + lb) + 1.0, l);
    return static_cast<double>(index_.kth(s, i)) + t - static_cast<double>(i) + lb;
  }

 private:
  static std::size_t clamp_branch(double i, std::size_t l) {
    if (i < 1.0) return 1;
    if (i > static_cast<double>(l)) return l;
    return static_cast<std::size_t>(i);
  }

  RankVector z_;
  double beta_;
  Ranks index_;
};

}  // namespace tautline
