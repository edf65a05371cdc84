#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tasep {

/// Largest lattice for which the 2^n-state master equation is built.
inline constexpr int kMaxMasterSites = 20;
/// Patterns are stored in a single machine word.
inline constexpr int kMaxPatternBits = 64;

/// Rates of an open TASEP chain. Sites are numbered n-1 (entry) down to 0
/// (exit); hop(i) is the rate of a jump from site i to site i-1.
class LatticeParams {
public:
  LatticeParams(int n, double alpha, double beta, std::vector<double> hops);

  /// Same interior rate on every bond.
  static LatticeParams homogeneous(int n, double alpha, double beta, double h = 1.0);

  int sites() const noexcept { return n_; }
  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }
  /// Hop rate across bond i -> i-1, 1 <= i <= n-1.
  double hop(int i) const { return hops_.at(static_cast<std::size_t>(i - 1)); }
  std::span<const double> hops() const noexcept { return hops_; }
  bool uniform_hops(double value, double tol = 0.0) const noexcept;

  /// alpha + beta + sum of hop rates; bounds every exit rate from above.
  double total_rate() const noexcept { return total_rate_; }

private:
  int n_;
  double alpha_;
  double beta_;
  std::vector<double> hops_;
  double total_rate_;
};

/// Occupation pattern of `len` consecutive sites. Bit j is the occupancy of
/// the j-th site counted from the right end of the window. Leading zeros are
/// significant, so the length is always carried along.
struct BitPattern {
  unsigned len = 0;
  std::uint64_t bits = 0;

  constexpr BitPattern() = default;
  BitPattern(unsigned length, std::uint64_t value);

  static BitPattern empty() { return {}; }
  /// Parses a string such as "0110" (leftmost character = highest bit).
  static BitPattern parse(std::string_view digits);

  bool bit(unsigned j) const noexcept { return ((bits >> j) & 1u) != 0; }
  bool is_empty() const noexcept { return len == 0; }
  std::string to_string() const;

  friend bool operator==(const BitPattern&, const BitPattern&) = default;
};

constexpr std::uint64_t low_mask(unsigned k) noexcept {
  return k >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << k) - 1);
}

/// Drops the i leftmost (highest) bits.
BitPattern left_truncate(const BitPattern& b, unsigned i);
/// Drops the i rightmost (lowest) bits.
BitPattern right_truncate(const BitPattern& b, unsigned i);
/// Keeps the i leftmost bits; throws std::invalid_argument when i > len.
BitPattern left_crop(const BitPattern& b, unsigned i);
/// Keeps the i rightmost bits; throws std::invalid_argument when i > len.
BitPattern right_crop(const BitPattern& b, unsigned i);
/// `a` followed by `b`; `a` occupies the high bits.
BitPattern concat(const BitPattern& a, const BitPattern& b);

/// Identifies the l-point function of pattern b on sites d .. d+l-1.
struct LpfIndex {
  int order = 0;
  int site = 0;
  BitPattern pattern;

  friend bool operator==(const LpfIndex&, const LpfIndex&) = default;
};

std::string to_string(const LpfIndex& idx);

/// Flat storage order for l-point functions: order ascending, then site
/// offset ascending, then the pattern value ascending.
class IndexLayout {
public:
  IndexLayout(int n, int max_order);

  int sites() const noexcept { return n_; }
  int max_order() const noexcept { return max_order_; }
  std::size_t size() const noexcept { return offsets_.back(); }

  /// First flat offset of order l (1 <= l <= max_order + 1).
  std::size_t order_offset(int l) const noexcept { return offsets_[static_cast<std::size_t>(l)]; }
  /// Number of entries of order l: (n - l + 1) * 2^l.
  std::size_t order_count(int l) const noexcept;

  /// Checked flat index; throws std::out_of_range.
  std::size_t flat(int l, int d, const BitPattern& b) const;
  std::size_t flat(const LpfIndex& idx) const { return flat(idx.order, idx.site, idx.pattern); }

  /// Unchecked variant for inner loops.
  std::size_t at(int l, int d, std::uint64_t b) const noexcept {
    return offsets_[static_cast<std::size_t>(l)] + (static_cast<std::size_t>(d) << l) + b;
  }

  LpfIndex unflatten(std::size_t offset) const;

  friend bool operator==(const IndexLayout& a, const IndexLayout& b) noexcept {
    return a.n_ == b.n_ && a.max_order_ == b.max_order_;
  }

private:
  int n_;
  int max_order_;
  std::vector<std::size_t> offsets_;  // offsets_[l] for l = 0 .. max_order + 1
};

/// Closed forms for the layout size: 2^{n+2} - 2n - 4 for the full system and
/// (n - m + 2) 2^{m+1} - 2n - 4 for the order-m truncation.
std::size_t full_dimension(int n);
std::size_t truncated_dimension(int n, int m);
/// Dimension of the consistent affine space of order m: (n - m + 2) 2^{m-1} - 1.
std::size_t consistent_space_dimension(int n, int m);

}  // namespace tasep
