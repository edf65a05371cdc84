#include "tasep/correlations.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace tasep {

CorrelationVector::CorrelationVector(IndexLayout lay, std::vector<double> v) : layout(lay), values(std::move(v)) {
  if (values.size() != layout.size())
    throw std::invalid_argument("CorrelationVector: expected " + std::to_string(layout.size()) + " values, got " +
                                std::to_string(values.size()));
}

double CorrelationVector::min_component() const noexcept {
  return values.empty() ? 0.0 : *std::min_element(values.begin(), values.end());
}

double CorrelationVector::max_component() const noexcept {
  return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

CorrelationVector embed(const MasterState& z, int max_order) {
  const int n = z.n;
  if (z.z.size() != (std::size_t{1} << n)) throw std::invalid_argument("embed: state size is not 2^n");
  CorrelationVector y(IndexLayout(n, max_order));
  for (int l = 1; l <= max_order; ++l) {
    const std::uint64_t mask = low_mask(static_cast<unsigned>(l));
    for (int d = 0; d <= n - l; ++d) {
      const std::size_t base = y.layout.at(l, d, 0);
      for (std::size_t c = 0; c < z.z.size(); ++c) y.values[base + ((c >> d) & mask)] += z.z[c];
    }
  }
  return y;
}

CorrelationVector embed_product(std::span<const double> p, int max_order) {
  const int n = static_cast<int>(p.size());
  CorrelationVector y(IndexLayout(n, max_order));
  for (int l = 1; l <= max_order; ++l) {
    for (int d = 0; d <= n - l; ++d) {
      for (std::uint64_t b = 0; b < (std::uint64_t{1} << l); ++b) {
        double v = 1.0;
        for (int j = 0; j < l; ++j) {
          const double pj = p[static_cast<std::size_t>(d + j)];
          v *= ((b >> j) & 1u) ? pj : 1.0 - pj;
        }
        y(l, d, b) = v;
      }
    }
  }
  return y;
}

namespace {

struct ConsistencyRow {
  std::array<std::size_t, 3> idx{};
  std::array<double, 3> coef{};
  int count = 0;
  double rhs = 0.0;
};

// Visits the normalisation rows followed by the four block rows for every
// order 2..max_order, site offset and inner pattern.
template <class Visitor>
void for_each_consistency_row(const IndexLayout& lay, Visitor&& visit) {
  const int n = lay.sites();
  for (int d = 0; d < n; ++d) {
    visit(ConsistencyRow{{lay.at(1, d, 0), lay.at(1, d, 1), 0}, {1.0, 1.0, 0.0}, 2, 1.0});
  }
  for (int l = 2; l <= lay.max_order(); ++l) {
    const std::uint64_t hi = std::uint64_t{1} << (l - 1);
    const std::uint64_t hi_lower = std::uint64_t{1} << (l - 2);
    for (int d = 0; d <= n - l; ++d) {
      for (std::uint64_t b = 0; b < hi_lower; ++b) {
        const std::size_t p0b0 = lay.at(l, d, b << 1);
        const std::size_t p0b1 = lay.at(l, d, (b << 1) | 1u);
        const std::size_t p1b0 = lay.at(l, d, hi | (b << 1));
        const std::size_t p1b1 = lay.at(l, d, hi | (b << 1) | 1u);
        visit(ConsistencyRow{{p0b0, p1b0, lay.at(l - 1, d, b << 1)}, {1.0, 1.0, -1.0}, 3, 0.0});
        visit(ConsistencyRow{{p0b1, p1b1, lay.at(l - 1, d, (b << 1) | 1u)}, {1.0, 1.0, -1.0}, 3, 0.0});
        visit(ConsistencyRow{{p0b0, p0b1, lay.at(l - 1, d + 1, b)}, {1.0, 1.0, -1.0}, 3, 0.0});
        visit(ConsistencyRow{{p1b0, p1b1, lay.at(l - 1, d + 1, hi_lower | b)}, {1.0, 1.0, -1.0}, 3, 0.0});
      }
    }
  }
}

double residual_impl(const CorrelationVector& x, bool homogeneous) {
  double worst = 0.0;
  for_each_consistency_row(x.layout, [&](const ConsistencyRow& r) {
    double s = -(homogeneous ? 0.0 : r.rhs);
    for (int k = 0; k < r.count; ++k) s += r.coef[static_cast<std::size_t>(k)] * x.values[r.idx[static_cast<std::size_t>(k)]];
    worst = std::max(worst, std::abs(s));
    if (std::isnan(s)) worst = std::numeric_limits<double>::infinity();
  });
  return worst;
}

}  // namespace

double consistency_residual(const CorrelationVector& x) { return residual_impl(x, false); }

double tangent_residual(const CorrelationVector& v) { return residual_impl(v, true); }

ConsistencySystem consistency_system(const IndexLayout& layout) {
  ConsistencySystem sys;
  sys.cols = layout.size();
  for_each_consistency_row(layout, [&](const ConsistencyRow& r) {
    for (int k = 0; k < r.count; ++k) {
      sys.entries.push_back({static_cast<double>(sys.rows), static_cast<double>(r.idx[static_cast<std::size_t>(k)]),
                             r.coef[static_cast<std::size_t>(k)]});
    }
    sys.rhs.push_back(r.rhs);
    ++sys.rows;
  });
  return sys;
}

Block4 apply_consistency_matrix(const Block4& x) noexcept {
  Block4 out{};
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) out[i] += kConsistencyMatrix[i][j] * x[j];
  }
  return out;
}

namespace {

constexpr double kBlockSolvabilityTol = 1e-10;
constexpr double kPositiveMargin = 1e-15;

void require_solvable(const Block4& a, double tol) {
  const double gap = a[0] + a[1] - a[2] - a[3];
  if (!(std::abs(gap) <= tol))
    throw std::invalid_argument("consistency block not solvable: a1 + a2 - a3 - a4 = " + std::to_string(gap));
}

Block4 particular_unchecked(const Block4& a) noexcept {
  if (a[3] >= a[0]) return {0.0, a[2], a[0], a[3] - a[0]};
  return {a[0] - a[3], a[1], a[3], 0.0};
}

Block4 solve_block(const Block4& a, double tol) {
  require_solvable(a, tol);
  Block4 x = particular_unchecked(a);
  const bool positive = std::all_of(a.begin(), a.end(), [](double v) { return v > 0.0; });
  if (!positive) return x;
  double max_shift = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < 4; ++i) {
    if (kConsistencyKernel[i] < 0.0) max_shift = std::min(max_shift, x[i] - kPositiveMargin);
  }
  if (max_shift > 0.0) {
    const double s = 0.5 * max_shift;
    for (std::size_t i = 0; i < 4; ++i) x[i] += s * kConsistencyKernel[i];
  }
  return x;
}

}  // namespace

Block4 particular_block_solution(const Block4& a) {
  require_solvable(a, kBlockSolvabilityTol);
  return particular_unchecked(a);
}

Block4 solve_consistency_block(const Block4& a) { return solve_block(a, kBlockSolvabilityTol); }

CorrelationVector lift(const CorrelationVector& x) {
  const int n = x.sites();
  const int m = x.max_order();
  if (m >= n) throw std::invalid_argument("lift: vector already holds all orders");
  const double res = consistency_residual(x);
  if (!(res <= 1e-8)) throw std::invalid_argument("lift: input is not consistent (residual " + std::to_string(res) + ")");

  CorrelationVector y(IndexLayout(n, m + 1));
  std::copy(x.values.begin(), x.values.end(), y.values.begin());
  const std::uint64_t hi = std::uint64_t{1} << m;          // top bit of an (m+1)-pattern
  const std::uint64_t inner = std::uint64_t{1} << (m - 1); // number of (m-1)-patterns
  for (int d = 0; d + m < n; ++d) {
    for (std::uint64_t b = 0; b < inner; ++b) {
      const Block4 a{x(m, d, b << 1), x(m, d, (b << 1) | 1u), x(m, d + 1, b), x(m, d + 1, inner | b)};
      // The block data inherit the input's residual; allow a few multiples of it.
      const Block4 sol = solve_block(a, 4e-8);
      y(m + 1, d, b << 1) = sol[0];
      y(m + 1, d, (b << 1) | 1u) = sol[1];
      y(m + 1, d, hi | (b << 1)) = sol[2];
      y(m + 1, d, hi | (b << 1) | 1u) = sol[3];
    }
  }
  return y;
}

CorrelationVector lift_to(const CorrelationVector& x, int order) {
  if (order < x.max_order() || order > x.sites()) throw std::invalid_argument("lift_to: order out of range");
  CorrelationVector y = x;
  while (y.max_order() < order) y = lift(y);
  return y;
}

CorrelationVector vector_field_f(const LatticeParams& params, const CorrelationVector& y) {
  const int n = y.sites();
  const int m = y.max_order();
  if (params.sites() != n) throw std::invalid_argument("vector_field_f: lattice size mismatch");
  const int out_order = m == n ? n : m - 1;
  if (out_order < 1) throw std::invalid_argument("vector_field_f: need at least two orders below n");
  CorrelationVector out(IndexLayout(n, out_order));
  auto get = [&y](int lo, int dd, std::uint64_t bb) { return y(lo, dd, bb); };
  for (int l = 1; l <= out_order; ++l) {
    for (int d = 0; d <= n - l; ++d) {
      for (std::uint64_t b = 0; b < (std::uint64_t{1} << l); ++b) {
        out(l, d, b) = vector_field_component(params, l, d, b, get);
      }
    }
  }
  return out;
}

LowerBoundReport lower_bound_check(const LatticeParams& params, const CorrelationVector& y) {
  const CorrelationVector f = vector_field_f(params, y);
  const double c = params.total_rate();
  LowerBoundReport rep;
  rep.worst_slack = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double slack = f.values[i] + c * y.values[i];
    rep.worst_slack = std::min(rep.worst_slack, slack);
    if (slack < -1e-12 && rep.holds) {
      rep.holds = false;
      rep.witness = f.layout.unflatten(i);
    }
  }
  return rep;
}

}  // namespace tasep
