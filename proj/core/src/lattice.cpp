#include "tasep/lattice.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tasep {

LatticeParams::LatticeParams(int n, double alpha, double beta, std::vector<double> hops)
    : n_(n), alpha_(alpha), beta_(beta), hops_(std::move(hops)) {
  if (n_ < 1) throw std::invalid_argument("lattice size n must be at least 1");
  if (!(alpha_ > 0.0) || !std::isfinite(alpha_))
    throw std::invalid_argument("entry rate alpha must be positive");
  if (!(beta_ > 0.0) || !std::isfinite(beta_))
    throw std::invalid_argument("exit rate beta must be positive");
  if (hops_.size() != static_cast<std::size_t>(n_ - 1))
    throw std::invalid_argument("expected n-1 = " + std::to_string(n_ - 1) + " hop rates, got " +
                                std::to_string(hops_.size()));
  for (std::size_t i = 0; i < hops_.size(); ++i) {
    if (!(hops_[i] > 0.0) || !std::isfinite(hops_[i]))
      throw std::invalid_argument("hop rate h_" + std::to_string(i + 1) + " must be positive");
  }
  total_rate_ = alpha_ + beta_ + std::accumulate(hops_.begin(), hops_.end(), 0.0);
}

LatticeParams LatticeParams::homogeneous(int n, double alpha, double beta, double h) {
  return LatticeParams(n, alpha, beta, std::vector<double>(n > 0 ? static_cast<std::size_t>(n - 1) : 0, h));
}

bool LatticeParams::uniform_hops(double value, double tol) const noexcept {
  for (double h : hops_) {
    if (std::abs(h - value) > tol) return false;
  }
  return true;
}

BitPattern::BitPattern(unsigned length, std::uint64_t value) : len(length), bits(value) {
  if (length > static_cast<unsigned>(kMaxPatternBits))
    throw std::invalid_argument("bit pattern longer than 64 bits");
  if ((value & ~low_mask(length)) != 0)
    throw std::invalid_argument("bit pattern value does not fit in " + std::to_string(length) + " bits");
}

BitPattern BitPattern::parse(std::string_view digits) {
  if (digits.size() > static_cast<std::size_t>(kMaxPatternBits))
    throw std::invalid_argument("bit pattern longer than 64 bits");
  std::uint64_t v = 0;
  for (char c : digits) {
    if (c != '0' && c != '1') throw std::invalid_argument("bit pattern must consist of 0 and 1");
    v = (v << 1) | static_cast<std::uint64_t>(c - '0');
  }
  return {static_cast<unsigned>(digits.size()), v};
}

std::string BitPattern::to_string() const {
  if (len == 0) return "()";
  std::string s(len, '0');
  for (unsigned j = 0; j < len; ++j) {
    if (bit(j)) s[len - 1 - j] = '1';
  }
  return s;
}

BitPattern left_truncate(const BitPattern& b, unsigned i) {
  if (i >= b.len) return {};
  const unsigned k = b.len - i;
  return {k, b.bits & low_mask(k)};
}

BitPattern right_truncate(const BitPattern& b, unsigned i) {
  if (i >= b.len) return {};
  return {b.len - i, b.bits >> i};
}

BitPattern left_crop(const BitPattern& b, unsigned i) {
  if (i > b.len) throw std::invalid_argument("left_crop: cannot keep more bits than the pattern has");
  if (i == 0) return {};
  return {i, b.bits >> (b.len - i)};
}

BitPattern right_crop(const BitPattern& b, unsigned i) {
  if (i > b.len) throw std::invalid_argument("right_crop: cannot keep more bits than the pattern has");
  return {i, b.bits & low_mask(i)};
}

BitPattern concat(const BitPattern& a, const BitPattern& b) {
  const unsigned k = a.len + b.len;
  if (k > static_cast<unsigned>(kMaxPatternBits)) throw std::invalid_argument("concat: result longer than 64 bits");
  if (b.len == 64) return b;  // a is empty here
  return {k, (a.bits << b.len) | b.bits};
}

std::string to_string(const LpfIndex& idx) {
  return "[" + std::to_string(idx.order) + "," + std::to_string(idx.site) + "," + idx.pattern.to_string() + "]";
}

IndexLayout::IndexLayout(int n, int max_order) : n_(n), max_order_(max_order) {
  if (n < 1) throw std::invalid_argument("IndexLayout: n must be at least 1");
  if (max_order < 1 || max_order > n)
    throw std::invalid_argument("IndexLayout: max_order must satisfy 1 <= max_order <= n");
  if (max_order > 40) throw std::invalid_argument("IndexLayout: order too large to store");
  offsets_.assign(static_cast<std::size_t>(max_order) + 2, 0);
  for (int l = 1; l <= max_order; ++l) {
    offsets_[static_cast<std::size_t>(l) + 1] = offsets_[static_cast<std::size_t>(l)] + order_count(l);
  }
}

std::size_t IndexLayout::order_count(int l) const noexcept {
  return static_cast<std::size_t>(n_ - l + 1) << l;
}

std::size_t IndexLayout::flat(int l, int d, const BitPattern& b) const {
  if (l < 1 || l > max_order_) throw std::out_of_range("flat: order out of range");
  if (d < 0 || d > n_ - l) throw std::out_of_range("flat: site offset out of range");
  if (b.len != static_cast<unsigned>(l)) throw std::out_of_range("flat: pattern length differs from order");
  return at(l, d, b.bits);
}

LpfIndex IndexLayout::unflatten(std::size_t offset) const {
  if (offset >= size()) throw std::out_of_range("unflatten: offset beyond layout size");
  int l = 1;
  while (offsets_[static_cast<std::size_t>(l) + 1] <= offset) ++l;
  const std::size_t local = offset - offsets_[static_cast<std::size_t>(l)];
  const int d = static_cast<int>(local >> l);
  const std::uint64_t b = local & low_mask(static_cast<unsigned>(l));
  return {l, d, BitPattern(static_cast<unsigned>(l), b)};
}

std::size_t full_dimension(int n) {
  return (std::size_t{1} << (n + 2)) - 2 * static_cast<std::size_t>(n) - 4;
}

std::size_t truncated_dimension(int n, int m) {
  return static_cast<std::size_t>(n - m + 2) * (std::size_t{1} << (m + 1)) - 2 * static_cast<std::size_t>(n) - 4;
}

std::size_t consistent_space_dimension(int n, int m) {
  return static_cast<std::size_t>(n - m + 2) * (std::size_t{1} << (m - 1)) - 1;
}

}  // namespace tasep
