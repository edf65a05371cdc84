#pragma once

#include <cstdint>
#include <vector>

#include "tasep/correlations.hpp"
#include "tasep/lattice.hpp"

namespace tasep {

/// Components at or below this value count as zero.
inline constexpr double kZeroThreshold = 1e-12;
/// Closure denominators at or below this value give a zero closure value.
inline constexpr double kClosureDenominatorFloor = 1e-14;

/// Throws std::invalid_argument unless 1 <= m < n.
void validate_closure_order(int n, int m);

/// Keeps the components of order <= m.
CorrelationVector project(const CorrelationVector& y, int m);

/// Cluster-approximation value of the (m+1)-point function of pattern b at
/// site d, for an order-m vector x:
///   x[m,d+1,b>>1] * x[m,d,b mod 2^m] / x[m-1,d+1,middle bits],
/// with the order-0 denominator equal to one. Evaluated as
/// factor1 * clamp(factor2 / den, 0, 1), and 0 once den <= 1e-14.
double closure_value(const CorrelationVector& x, int d, std::uint64_t b) noexcept;

/// Returns the order-(m+1) vector whose first m orders are x and whose last
/// order holds the closure values. Throws std::invalid_argument if m >= n or
/// any component lies outside [-1e-12, 1 + 1e-12].
CorrelationVector cluster_extend(const CorrelationVector& x);

/// Order-m mean-field vector field g(x) = Q_m f(P(x)), with m = x.max_order().
/// Throws std::invalid_argument when m >= n, when x has consistency
/// residual above 1e-6, or when a component is outside [0, 1] by more than
/// 1e-12.
CorrelationVector vector_field_g(const LatticeParams& params, const CorrelationVector& x);

/// Same field without input checks, writing layout.size() values to out.
/// Used inside integrators where intermediate stages may leave C slightly.
void vector_field_g_into(const LatticeParams& params, const IndexLayout& layout, const double* x, double* out);

/// Checks g[l,d,b](x) >= -c x[l,d,b] - 1e-12 for every component.
LowerBoundReport lower_bound_check_g(const LatticeParams& params, const CorrelationVector& x);

/// Indices whose value is <= threshold, in flat order.
std::vector<LpfIndex> zero_index_set(const CorrelationVector& x, double threshold = kZeroThreshold);

/// True when every component lies in [-tol, 1 + tol].
bool in_unit_box(const CorrelationVector& x, double tol = kZeroThreshold) noexcept;

}  // namespace tasep
