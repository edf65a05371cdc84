#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tasep/lattice.hpp"
#include "tasep/master.hpp"

namespace tasep {

/// Flat vector of l-point functions, values[layout.at(l, d, b)] is the
/// probability that sites d .. d+l-1 show pattern b.
struct CorrelationVector {
  IndexLayout layout;
  std::vector<double> values;

  explicit CorrelationVector(IndexLayout lay) : layout(lay), values(lay.size(), 0.0) {}
  CorrelationVector(IndexLayout lay, std::vector<double> v);

  int sites() const noexcept { return layout.sites(); }
  int max_order() const noexcept { return layout.max_order(); }
  std::size_t size() const noexcept { return values.size(); }

  double operator()(int l, int d, std::uint64_t b) const noexcept { return values[layout.at(l, d, b)]; }
  double& operator()(int l, int d, std::uint64_t b) noexcept { return values[layout.at(l, d, b)]; }
  double at(const LpfIndex& idx) const { return values[layout.flat(idx)]; }

  double min_component() const noexcept;
  double max_component() const noexcept;
};

/// Marginals of z on every window of length <= max_order.
CorrelationVector embed(const MasterState& z, int max_order);

/// Marginals of the product measure with site occupation probabilities p
/// (p[i] for site i), computed without forming the 2^n-state vector.
CorrelationVector embed_product(std::span<const double> p, int max_order);

/// Max-norm violation of the normalisation x[1,d,0] + x[1,d,1] = 1 and of
/// every four-equation block linking order l to order l-1, 2 <= l <= max_order.
double consistency_residual(const CorrelationVector& x);

/// Same equations with zero right-hand side for order one, i.e. membership
/// of a direction in the tangent space of the consistent affine space.
double tangent_residual(const CorrelationVector& v);

/// Constraint rows of the consistency system as (row, column, value)
/// triplets plus the right-hand side; shared by residual checks and the
/// Newton coordinate construction.
struct ConsistencySystem {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::array<double, 3>> entries;  // row, col, value
  std::vector<double> rhs;
};
ConsistencySystem consistency_system(const IndexLayout& layout);

using Block4 = std::array<double, 4>;

/// The rank-3 matrix [[1,0,1,0],[0,1,0,1],[1,1,0,0],[0,0,1,1]].
inline constexpr std::array<Block4, 4> kConsistencyMatrix{{
    {1, 0, 1, 0},
    {0, 1, 0, 1},
    {1, 1, 0, 0},
    {0, 0, 1, 1},
}};
/// Kernel direction of the consistency matrix.
inline constexpr Block4 kConsistencyKernel{1, -1, -1, 1};

Block4 apply_consistency_matrix(const Block4& x) noexcept;

/// Sign-preserving special solution: (0, a3, a1, a4 - a1) if a4 >= a1,
/// otherwise (a1 - a4, a2, a4, 0). Requires a1 + a2 = a3 + a4.
Block4 particular_block_solution(const Block4& a);

/// Solves A_C x = a. Non-negative data gives a non-negative solution; strictly
/// positive data is shifted along the kernel by half of the largest shift
/// that keeps every entry above 1e-15, which makes it strictly positive.
/// Throws std::invalid_argument if |a1 + a2 - a3 - a4| > 1e-10.
Block4 solve_consistency_block(const Block4& a);

/// Extends a consistent order-m vector by one order; the result is
/// consistent and projects back to x. Throws std::invalid_argument when x
/// has consistency residual above 1e-8 or already has order n.
CorrelationVector lift(const CorrelationVector& x);
/// Repeated lift up to `order`.
CorrelationVector lift_to(const CorrelationVector& x, int order);

/// Transition channels that change the probability of a window pattern.
enum class TermKind {
  EntryGain,             // particle enters site n-1 at the window's left end
  ExitGain,              // particle leaves site 0 at the window's right end
  InternalHopGain,       // hop inside the window produces the pattern
  UpstreamHopGain,       // particle hops into the window from site d+l
  DownstreamHopGain,     // particle hops out of the window into site d-1
  EntryLoss,
  ExitLoss,
  InternalHopLoss,
  UpstreamHopLoss,       // site d+l holds a particle that hops into the window
  DownstreamHopLoss,     // particle at site d hops out to the empty site d-1
};

constexpr bool is_gain(TermKind k) noexcept {
  return k == TermKind::EntryGain || k == TermKind::ExitGain || k == TermKind::InternalHopGain ||
         k == TermKind::UpstreamHopGain || k == TermKind::DownstreamHopGain;
}

/// Enumerates the terms of d/dt <l,d,b> in terms of l- and (l+1)-point
/// functions. `visit(kind, signed_rate, order, site, pattern_bits)` is
/// called once per present term. Guards are checked before any pattern is
/// formed, so out-of-range windows never appear.
template <class Visitor>
void for_each_term(const LatticeParams& p, int l, int d, std::uint64_t b, Visitor&& visit) {
  const int n = p.sites();
  const unsigned ul = static_cast<unsigned>(l);
  const bool top = ((b >> (ul - 1)) & 1u) != 0;  // occupancy of site d+l-1
  const bool bottom = (b & 1u) != 0;            // occupancy of site d
  const bool touches_entry = l + d == n;
  const bool touches_exit = d == 0;
  const bool has_upstream = l + d < n;
  const bool has_downstream = d > 0;

  if (touches_entry && top) visit(TermKind::EntryGain, p.alpha(), l, d, b & low_mask(ul - 1));
  if (touches_exit && !bottom) visit(TermKind::ExitGain, p.beta(), l, d, b | 1u);
  for (int j = 1; j < l; ++j) {
    const bool bj = ((b >> j) & 1u) != 0;
    const bool bjm = ((b >> (j - 1)) & 1u) != 0;
    if (!bj && bjm) visit(TermKind::InternalHopGain, p.hop(j + d), l, d, b ^ (std::uint64_t{3} << (j - 1)));
  }
  if (has_upstream && top)
    visit(TermKind::UpstreamHopGain, p.hop(l + d), l + 1, d,
          (std::uint64_t{2} << (ul - 1)) | (b & low_mask(ul - 1)));
  if (has_downstream && !bottom)
    visit(TermKind::DownstreamHopGain, p.hop(d), l + 1, d - 1, ((b >> 1) << 2) | 2u);

  if (touches_entry && !top) visit(TermKind::EntryLoss, -p.alpha(), l, d, b);
  if (touches_exit && bottom) visit(TermKind::ExitLoss, -p.beta(), l, d, b);
  for (int j = 1; j < l; ++j) {
    const bool bj = ((b >> j) & 1u) != 0;
    const bool bjm = ((b >> (j - 1)) & 1u) != 0;
    if (bj && !bjm) visit(TermKind::InternalHopLoss, -p.hop(j + d), l, d, b);
  }
  if (has_upstream && !top) visit(TermKind::UpstreamHopLoss, -p.hop(l + d), l + 1, d, (std::uint64_t{1} << ul) | b);
  if (has_downstream && bottom) visit(TermKind::DownstreamHopLoss, -p.hop(d), l + 1, d - 1, b << 1);
}

/// One component of the exact vector field; `value(order, site, bits)`
/// supplies the l- and (l+1)-point functions.
template <class Getter>
double vector_field_component(const LatticeParams& p, int l, int d, std::uint64_t b, Getter&& value) {
  double acc = 0.0;
  for_each_term(p, l, d, b, [&](TermKind, double rate, int lo, int dd, std::uint64_t bb) {
    acc += rate * value(lo, dd, bb);
  });
  return acc;
}

/// Exact vector field of the l-point hierarchy. For an input of order M < n
/// the result has order M-1 (the highest order whose derivative is closed
/// over the input); for M = n it has order n. Throws std::invalid_argument
/// for M = 1 < n or mismatched parameters.
CorrelationVector vector_field_f(const LatticeParams& params, const CorrelationVector& y);

struct LowerBoundReport {
  bool holds = true;
  std::optional<LpfIndex> witness;  // first violating index
  double worst_slack = 0.0;         // min over components of f + c*y
};

/// Checks f[l,d,b](y) >= -c y[l,d,b] - 1e-12 for every computed component.
LowerBoundReport lower_bound_check(const LatticeParams& params, const CorrelationVector& y);

}  // namespace tasep
