#include "tasep/master.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <stdexcept>
#include <string>

#include <Eigen/SparseLU>
#include <unsupported/Eigen/IterativeSolvers>

namespace tasep {

MasterState MasterState::uniform(int n) {
  if (n < 1 || n > kMaxMasterSites) throw std::invalid_argument("MasterState: n out of range");
  const std::size_t count = std::size_t{1} << n;
  return {n, std::vector<double>(count, 1.0 / static_cast<double>(count))};
}

MasterState MasterState::point_mass(int n, std::uint64_t configuration) {
  if (n < 1 || n > kMaxMasterSites) throw std::invalid_argument("MasterState: n out of range");
  const std::size_t count = std::size_t{1} << n;
  if (configuration >= count) throw std::invalid_argument("MasterState: configuration out of range");
  MasterState s{n, std::vector<double>(count, 0.0)};
  s.z[configuration] = 1.0;
  return s;
}

double MasterState::probability_sum() const noexcept {
  return std::accumulate(z.begin(), z.end(), 0.0);
}

double MasterState::min_component() const noexcept {
  return z.empty() ? 0.0 : *std::min_element(z.begin(), z.end());
}

double GeneratorMatrix::rate(std::uint64_t to, std::uint64_t from) const {
  return a_.coeff(static_cast<Eigen::Index>(to), static_cast<Eigen::Index>(from));
}

void GeneratorMatrix::apply(const std::vector<double>& z, std::vector<double>& out) const {
  out.resize(z.size());
  Eigen::Map<const Eigen::VectorXd> zin(z.data(), static_cast<Eigen::Index>(z.size()));
  Eigen::Map<Eigen::VectorXd> zout(out.data(), static_cast<Eigen::Index>(out.size()));
  zout.noalias() = a_ * zin;
}

Eigen::MatrixXd GeneratorMatrix::to_dense() const {
  if (n_ > 12) throw std::invalid_argument("GeneratorMatrix::to_dense: lattice too large");
  return Eigen::MatrixXd(a_);
}

GeneratorMatrix build_generator(const LatticeParams& params) {
  const int n = params.sites();
  if (n > kMaxMasterSites)
    throw std::invalid_argument("master equation limited to n <= " + std::to_string(kMaxMasterSites));
  const std::uint64_t count = std::uint64_t{1} << n;
  const std::uint64_t entry_bit = std::uint64_t{1} << (n - 1);

  GeneratorMatrix::Sparse a(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(count));
  a.reserve(Eigen::VectorXi::Constant(static_cast<Eigen::Index>(count), n + 2));

  std::vector<std::pair<std::uint64_t, double>> out;
  out.reserve(static_cast<std::size_t>(n) + 1);
  for (std::uint64_t c = 0; c < count; ++c) {
    out.clear();
    if ((c & entry_bit) == 0) out.emplace_back(c | entry_bit, params.alpha());
    for (int i = 1; i < n; ++i) {
      if (((c >> i) & 1u) != 0 && ((c >> (i - 1)) & 1u) == 0)
        out.emplace_back(c ^ (std::uint64_t{3} << (i - 1)), params.hop(i));
    }
    if ((c & 1u) != 0) out.emplace_back(c & ~std::uint64_t{1}, params.beta());

    double leave = 0.0;
    for (const auto& [to, r] : out) leave += r;
    // Insert in row order within the column.
    out.emplace_back(c, -leave);
    std::sort(out.begin(), out.end());
    const auto col = static_cast<Eigen::Index>(c);
    for (const auto& [to, r] : out) a.insert(static_cast<Eigen::Index>(to), col) = r;
  }
  a.makeCompressed();
  return GeneratorMatrix(n, std::move(a));
}

MasterState evolve_master(const GeneratorMatrix& a, const MasterState& z0, double t, const OdeTolerances& tol) {
  if (z0.size() != a.states()) throw std::invalid_argument("evolve_master: state size does not match generator");
  if (t < 0.0) throw std::invalid_argument("evolve_master: negative time");
  MasterState out = z0;
  integrate_dopri5([&a](const std::vector<double>& z, std::vector<double>& dz) { a.apply(z, dz); }, out.z, 0.0, t,
                   tol);
  return out;
}

namespace {

constexpr int kDenseStationaryMaxSites = 10;
constexpr int kSparseDirectMaxSites = 14;

GeneratorMatrix::Sparse bordered_sparse(const GeneratorMatrix& a) {
  const auto& s = a.sparse();
  const Eigen::Index dim = s.rows();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(s.nonZeros() + dim));
  for (Eigen::Index col = 0; col < s.outerSize(); ++col) {
    trip.emplace_back(0, col, 1.0);
    for (GeneratorMatrix::Sparse::InnerIterator it(s, col); it; ++it) {
      if (it.row() != 0) trip.emplace_back(it.row(), col, it.value());
    }
  }
  GeneratorMatrix::Sparse b(dim, dim);
  b.setFromTriplets(trip.begin(), trip.end());
  b.makeCompressed();
  return b;
}

}  // namespace

MasterState stationary_master(const GeneratorMatrix& a) {
  const int n = a.sites();
  const auto dim = static_cast<Eigen::Index>(a.states());
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
  rhs(0) = 1.0;
  Eigen::VectorXd z;

  if (n <= kDenseStationaryMaxSites) {
    Eigen::MatrixXd b = a.to_dense();
    b.row(0).setOnes();
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(b);
    if (!(lu.rcond() > 1e-14)) throw std::runtime_error("stationary_master: bordered system is singular");
    z = lu.solve(rhs);
    for (int sweep = 0; sweep < 2; ++sweep) z += lu.solve(rhs - b * z);
  } else if (n <= kSparseDirectMaxSites) {
    const auto b = bordered_sparse(a);
    Eigen::SparseLU<GeneratorMatrix::Sparse, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(b);
    if (lu.info() != Eigen::Success) throw std::runtime_error("stationary_master: sparse factorisation failed");
    z = lu.solve(rhs);
    for (int sweep = 0; sweep < 2; ++sweep) z += lu.solve(rhs - b * z);
  } else {
    std::clog << "warning: stationary_master: n=" << n
              << " uses restarted GMRES; accuracy is bounded by the iterative tolerance\n";
    const auto b = bordered_sparse(a);
    Eigen::GMRES<GeneratorMatrix::Sparse, Eigen::IncompleteLUT<double>> solver;
    solver.preconditioner().setDroptol(1e-6);
    solver.preconditioner().setFillfactor(20);
    solver.set_restart(80);
    solver.setTolerance(1e-15);
    solver.setMaxIterations(20000);
    solver.compute(b);
    if (solver.info() != Eigen::Success) throw std::runtime_error("stationary_master: preconditioner setup failed");
    z = solver.solve(rhs);
    if (solver.info() != Eigen::Success && solver.error() > 1e-10)
      throw std::runtime_error("stationary_master: GMRES did not converge");
  }

  if (!z.allFinite()) throw std::runtime_error("stationary_master: non-finite solution");
  MasterState out{n, std::vector<double>(z.data(), z.data() + z.size())};
  return out;
}

double production_rate(const LatticeParams& params, const MasterState& z) {
  double occ = 0.0;
  for (std::size_t c = 1; c < z.z.size(); c += 2) occ += z.z[c];
  return params.beta() * occ;
}

std::vector<double> site_densities(const MasterState& z) {
  std::vector<double> rho(static_cast<std::size_t>(z.n), 0.0);
  for (std::size_t c = 0; c < z.z.size(); ++c) {
    for (int i = 0; i < z.n; ++i) {
      if ((c >> i) & 1u) rho[static_cast<std::size_t>(i)] += z.z[c];
    }
  }
  return rho;
}

}  // namespace tasep
