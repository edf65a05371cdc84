#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "tasep/lattice.hpp"
#include "tasep/ode.hpp"

namespace tasep {

/// Probability vector over the 2^n occupation configurations; bit i of the
/// configuration index is the occupancy of site i.
struct MasterState {
  int n = 0;
  std::vector<double> z;

  static MasterState uniform(int n);
  static MasterState point_mass(int n, std::uint64_t configuration);

  std::size_t size() const noexcept { return z.size(); }
  double probability_sum() const noexcept;
  double min_component() const noexcept;
};

/// Transition-rate matrix of the master equation dz/dt = A z. Column j holds
/// the rates out of configuration j; columns sum to zero.
class GeneratorMatrix {
public:
  using Sparse = Eigen::SparseMatrix<double, Eigen::ColMajor>;

  GeneratorMatrix(int n, Sparse entries) : n_(n), a_(std::move(entries)) {}

  int sites() const noexcept { return n_; }
  std::size_t states() const noexcept { return static_cast<std::size_t>(a_.cols()); }
  const Sparse& sparse() const noexcept { return a_; }
  double rate(std::uint64_t to, std::uint64_t from) const;

  /// out = A z.
  void apply(const std::vector<double>& z, std::vector<double>& out) const;
  /// Dense copy; only meant for small oracles (n <= 12).
  Eigen::MatrixXd to_dense() const;

private:
  int n_;
  Sparse a_;
};

/// Encodes entry (rate alpha into site n-1), hops 10 -> 01 across bond i
/// (rate h_i) and exit from site 0 (rate beta). Throws std::invalid_argument
/// for n > kMaxMasterSites.
GeneratorMatrix build_generator(const LatticeParams& params);

/// z(t) for z(0) = z0. Tolerances default to rtol 1e-8, atol 1e-10; throws
/// IntegrationError on step failure. No projection back onto the simplex.
MasterState evolve_master(const GeneratorMatrix& a, const MasterState& z0, double t,
                          const OdeTolerances& tol = {});

/// Unique stationary distribution. Solves the bordered system in which the
/// first balance equation is replaced by the normalisation. Throws
/// std::runtime_error if that system is singular.
MasterState stationary_master(const GeneratorMatrix& a);

/// beta times the occupation probability of site 0.
double production_rate(const LatticeParams& params, const MasterState& z);

/// Occupation probability of each site, indexed by site number.
std::vector<double> site_densities(const MasterState& z);

}  // namespace tasep
