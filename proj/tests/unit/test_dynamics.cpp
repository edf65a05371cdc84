#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "tasep/dynamics.hpp"
#include "tasep/meanfield.hpp"

using namespace tasep;

namespace {

IntegrateOptions tight() {
  IntegrateOptions o;
  o.tol.rtol = 1e-11;
  o.tol.atol = 1e-13;
  return o;
}

}  // namespace

TEST(Systems, DimensionsAndNames) {
  EXPECT_EQ(state_dimension(SystemSpec::master(), 4), 16u);
  EXPECT_EQ(state_dimension(SystemSpec::full(), 4), full_dimension(4));
  EXPECT_EQ(state_dimension(SystemSpec::meanfield(2), 5), truncated_dimension(5, 2));
  EXPECT_EQ(SystemSpec::meanfield(3).name(), "mf:3");
  EXPECT_EQ(SystemSpec::full().name(), "full");
  EXPECT_THROW(state_dimension(SystemSpec::meanfield(5), 5), std::invalid_argument);
}

TEST(Integrate, FullSystemTracksMasterEquation) {
  const auto p = LatticeParams::homogeneous(5, 0.6, 0.8);
  const auto z0 = MasterState::uniform(5);
  const auto traj = integrate(SystemSpec::full(), p, embed(z0, 5).values, 1.0, tight());
  const auto expected = embed(MasterState{5, oracle::exp_evolve(p, z0.z, 1.0)}, 5);
  EXPECT_LT(oracle::max_abs_diff(traj.final_state, expected.values), 1e-7);
}

TEST(Integrate, FullAndMasterAgreeAlongTrajectory) {
  std::mt19937_64 rng(31);
  for (int n = 2; n <= 6; ++n) {
    std::uniform_real_distribution<double> u(0.3, 1.5);
    std::vector<double> hops(static_cast<std::size_t>(n - 1));
    for (double& h : hops) h = u(rng);
    const LatticeParams p(n, u(rng), u(rng), hops);
    const auto z0 = oracle::random_simplex(n, rng);
    for (double t : {0.5, 2.0, 5.0}) {
      const auto full = integrate(SystemSpec::full(), p, embed(MasterState{n, z0}, n).values, t, tight());
      const auto master = integrate(SystemSpec::master(), p, z0, t, tight());
      const auto e = embed(MasterState{n, master.final_state}, n);
      EXPECT_LT(oracle::max_abs_diff(full.final_state, e.values), 1e-8) << "n=" << n << " t=" << t;
    }
  }
}

TEST(Integrate, MeanFieldStaysConsistentAndBounded) {
  const auto p = LatticeParams::homogeneous(6, 0.7, 0.3);
  const auto sys = SystemSpec::meanfield(2);
  const auto traj = integrate(sys, p, uniform_start(sys, 6), 20.0);
  for (const auto& dg : traj.diagnostics) {
    EXPECT_LT(dg.consistency_residual, 1e-8);
    EXPECT_GE(dg.min_component, -1e-12);
    EXPECT_LE(dg.max_component, 1 + 1e-12);
    EXPECT_LT(dg.probability_sum_error, 1e-8);
  }
}

TEST(Integrate, DecayBoundHolds) {
  const auto p = LatticeParams::homogeneous(5, 0.9, 0.5);
  for (const auto& sys : {SystemSpec::full(), SystemSpec::meanfield(2), SystemSpec::meanfield(3)}) {
    const auto traj = integrate(sys, p, point_mass_start(sys, 5, 0b10110), 3.0);
    for (const auto& dg : traj.diagnostics) EXPECT_LT(dg.decay_bound_violation, 1e-9) << sys.name();
  }
}

TEST(Integrate, ZeroSetOnlyShrinks) {
  const auto p = LatticeParams::homogeneous(5, 1, 1);
  const auto sys = SystemSpec::meanfield(3);
  const auto lay = state_layout(sys, 5);
  const auto traj = integrate(sys, p, point_mass_start(sys, 5, 0), 2.0);
  auto prev = zero_index_set(CorrelationVector(lay, traj.states.front()));
  for (const auto& s : traj.states) {
    const auto now = zero_index_set(CorrelationVector(lay, s));
    for (const auto& idx : now)
      EXPECT_NE(std::find(prev.begin(), prev.end(), idx), prev.end()) << to_string(idx);
    prev = now;
  }
}

TEST(Integrate, EquilibriumIsStationary) {
  const auto p = LatticeParams::homogeneous(5, 0.4, 0.7);
  const auto sys = SystemSpec::meanfield(2);
  const auto rep = steady_state(sys, p, uniform_start(sys, 5));
  ASSERT_TRUE(rep.converged);
  const auto traj = integrate(sys, p, rep.equilibrium, 5.0);
  EXPECT_LT(oracle::max_abs_diff(traj.final_state, rep.equilibrium), 1e-9);
}

TEST(Integrate, RejectsBadStart) {
  const auto p = LatticeParams::homogeneous(4, 1, 1);
  const auto sys = SystemSpec::meanfield(2);
  auto x = uniform_start(sys, 4);
  EXPECT_THROW(integrate(sys, p, std::vector<double>(3, 0.0), 1.0), std::invalid_argument);
  x[0] += 1e-3;
  EXPECT_THROW(integrate(sys, p, x, 1.0), std::invalid_argument);
}

TEST(Steady, FullSystemMatchesStationaryDistribution) {
  for (int n : {3, 4, 5}) {
    const auto p = LatticeParams::homogeneous(n, 0.6, 0.9);
    const auto rep = steady_state(SystemSpec::full(), p, uniform_start(SystemSpec::full(), n));
    ASSERT_TRUE(rep.converged);
    const auto expected = embed(MasterState{n, oracle::null_space_stationary(p)}, n);
    EXPECT_LT(oracle::max_abs_diff(rep.equilibrium, expected.values), 1e-9);
  }
}

TEST(Steady, MasterSolveMatchesNullSpace) {
  const auto p = LatticeParams::homogeneous(4, 0.3, 0.5);
  const auto rep = steady_state(SystemSpec::master(), p, uniform_start(SystemSpec::master(), 4));
  ASSERT_TRUE(rep.converged);
  EXPECT_LT(oracle::max_abs_diff(rep.equilibrium, oracle::null_space_stationary(p)), 1e-12);
}

TEST(Steady, OrderOneHasConstantFlux) {
  const auto p = LatticeParams::homogeneous(8, 0.3, 0.6);
  const auto sys = SystemSpec::meanfield(1);
  const auto rep = steady_state(sys, p, uniform_start(sys, 8));
  ASSERT_TRUE(rep.converged);
  const auto rho = density_profile(sys, 8, rep.equilibrium);
  const double j_in = p.alpha() * (1 - rho[7]);
  for (int d = 0; d < 7; ++d)
    EXPECT_NEAR(p.hop(d + 1) * rho[static_cast<std::size_t>(d + 1)] * (1 - rho[static_cast<std::size_t>(d)]), j_in, 1e-9);
  EXPECT_NEAR(p.beta() * rho[0], j_in, 1e-9);
}

TEST(Steady, InteriorEquilibria) {
  for (double a : {0.2, 1.0})
    for (int m : {2, 3}) {
      const auto p = LatticeParams::homogeneous(7, a, 0.5);
      const auto sys = SystemSpec::meanfield(m);
      const auto rep = steady_state(sys, p, uniform_start(sys, 7));
      ASSERT_TRUE(rep.converged);
      EXPECT_LT(rep.residual_norm, 1e-10);
      EXPECT_GT(rep.interior_margin, 0.0);
    }
}

TEST(Escape, EmptyAndFullStartsAtSmallSize) {
  const auto p = LatticeParams::homogeneous(4, 1, 1);
  for (int m : {2, 3}) {
    const auto sys = SystemSpec::meanfield(m);
    for (std::uint64_t c : {0u, 15u}) {
      const auto x0 = CorrelationVector(state_layout(sys, 4), point_mass_start(sys, 4, c));
      const auto rep = boundary_escape_test(p, x0);
      EXPECT_TRUE(rep.escaped) << "m=" << m << " c=" << c << " min=" << rep.min_component;
      EXPECT_GT(rep.zeros_before, 0u);
    }
  }
}

TEST(Escape, InteriorStartIsTrivial) {
  const auto p = LatticeParams::homogeneous(5, 1, 1);
  const auto sys = SystemSpec::meanfield(2);
  const auto rep = boundary_escape_test(p, CorrelationVector(state_layout(sys, 5), uniform_start(sys, 5)));
  EXPECT_TRUE(rep.escaped);
  EXPECT_EQ(rep.zeros_before, 0u);
}

TEST(Density, PointMassProfile) {
  const auto rho = density_profile(MasterState::point_mass(3, 0b101));
  EXPECT_EQ(rho, (std::vector<double>{1, 0, 1}));
  const auto sys = SystemSpec::meanfield(2);
  EXPECT_EQ(density_profile(sys, 3, point_mass_start(sys, 3, 0b101)), (std::vector<double>{1, 0, 1}));
}

TEST(Comparison, HigherOrdersApproachMaster) {
  const auto p = LatticeParams::homogeneous(8, 0.15, 0.15);
  const auto table = order_m_comparison(p, {1, 2, 3});
  ASSERT_EQ(table.max_abs_error.size(), 3u);
  for (bool ok : table.converged) EXPECT_TRUE(ok);
  EXPECT_GT(table.max_abs_error[0], table.max_abs_error[1]);
  EXPECT_GT(table.max_abs_error[1], table.max_abs_error[2]);
}

TEST(Comparison, MaximalCurrentAgreement) {
  const auto p = LatticeParams::homogeneous(8, 0.75, 0.75);
  const auto table = order_m_comparison(p, {2, 3});
  for (double e : table.max_abs_error) EXPECT_LT(e, 0.05);
}
