#include "tasep/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace tasep {

void validate_closure_order(int n, int m) {
  if (m < 1 || m >= n)
    throw std::invalid_argument("closure order m=" + std::to_string(m) + " must satisfy 1 <= m < n=" +
                                std::to_string(n));
}

CorrelationVector project(const CorrelationVector& y, int m) {
  if (m < 1 || m > y.max_order())
    throw std::invalid_argument("project: order " + std::to_string(m) + " not available");
  IndexLayout lay(y.sites(), m);
  return CorrelationVector(lay, std::vector<double>(y.values.begin(),
                                                    y.values.begin() + static_cast<std::ptrdiff_t>(lay.size())));
}

namespace {

inline double closure_raw(const IndexLayout& lay, const double* x, int d, std::uint64_t b) noexcept {
  const int m = lay.max_order();
  const auto um = static_cast<unsigned>(m);
  const double upper = x[lay.at(m, d + 1, b >> 1)];
  const double lower = x[lay.at(m, d, b & low_mask(um))];
  if (m == 1) return upper * std::clamp(lower, 0.0, 1.0);
  const double den = x[lay.at(m - 1, d + 1, (b >> 1) & low_mask(um - 1))];
  if (den <= kClosureDenominatorFloor) return 0.0;
  return upper * std::clamp(lower / den, 0.0, 1.0);
}

void check_range(const CorrelationVector& x, const char* who) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x.values[i];
    if (!(v >= -kZeroThreshold && v <= 1.0 + kZeroThreshold))
      throw std::invalid_argument(std::string(who) + ": component " + to_string(x.layout.unflatten(i)) + " = " +
                                  std::to_string(v) + " outside [0, 1]");
  }
}

}  // namespace

double closure_value(const CorrelationVector& x, int d, std::uint64_t b) noexcept {
  return closure_raw(x.layout, x.values.data(), d, b);
}

CorrelationVector cluster_extend(const CorrelationVector& x) {
  const int n = x.sites();
  const int m = x.max_order();
  validate_closure_order(n, m);
  check_range(x, "cluster_extend");
  CorrelationVector y(IndexLayout(n, m + 1));
  std::copy(x.values.begin(), x.values.end(), y.values.begin());
  for (int d = 0; d + m < n; ++d) {
    for (std::uint64_t b = 0; b < (std::uint64_t{1} << (m + 1)); ++b) y(m + 1, d, b) = closure_value(x, d, b);
  }
  return y;
}

void vector_field_g_into(const LatticeParams& params, const IndexLayout& lay, const double* x, double* out) {
  const int n = lay.sites();
  const int m = lay.max_order();
  auto get = [&](int lo, int dd, std::uint64_t bb) {
    return lo <= m ? x[lay.at(lo, dd, bb)] : closure_raw(lay, x, dd, bb);
  };
  for (int l = 1; l <= m; ++l) {
    for (int d = 0; d <= n - l; ++d) {
      for (std::uint64_t b = 0; b < (std::uint64_t{1} << l); ++b)
        out[lay.at(l, d, b)] = vector_field_component(params, l, d, b, get);
    }
  }
}

CorrelationVector vector_field_g(const LatticeParams& params, const CorrelationVector& x) {
  const int n = x.sites();
  validate_closure_order(n, x.max_order());
  if (params.sites() != n) throw std::invalid_argument("vector_field_g: lattice size mismatch");
  const double res = consistency_residual(x);
  if (!(res <= 1e-6))
    throw std::invalid_argument("vector_field_g: input is not consistent (residual " + std::to_string(res) + ")");
  check_range(x, "vector_field_g");
  CorrelationVector out(x.layout);
  vector_field_g_into(params, x.layout, x.values.data(), out.values.data());
  return out;
}

LowerBoundReport lower_bound_check_g(const LatticeParams& params, const CorrelationVector& x) {
  const CorrelationVector g = vector_field_g(params, x);
  const double c = params.total_rate();
  LowerBoundReport rep;
  rep.worst_slack = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double slack = g.values[i] + c * x.values[i];
    rep.worst_slack = std::min(rep.worst_slack, slack);
    if (slack < -1e-12 && rep.holds) {
      rep.holds = false;
      rep.witness = g.layout.unflatten(i);
    }
  }
  return rep;
}

std::vector<LpfIndex> zero_index_set(const CorrelationVector& x, double threshold) {
  std::vector<LpfIndex> out;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x.values[i] <= threshold) out.push_back(x.layout.unflatten(i));
  }
  return out;
}

bool in_unit_box(const CorrelationVector& x, double tol) noexcept {
  return std::all_of(x.values.begin(), x.values.end(), [tol](double v) { return v >= -tol && v <= 1.0 + tol; });
}

}  // namespace tasep
