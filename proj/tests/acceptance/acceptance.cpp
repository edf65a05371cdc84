// Acceptance run: one PASS/FAIL line per criterion with the measured value
// next to its threshold. Exit status is nonzero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "oracles.hpp"
#include "tasep/consistency_basis.hpp"
#include "tasep/dynamics.hpp"
#include "tasep/master.hpp"
#include "tasep/meanfield.hpp"
#include "tasep/ssa.hpp"

using namespace tasep;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

CorrelationVector embed_z(const std::vector<double>& z, int n, int order) { return embed(MasterState{n, z}, order); }

std::vector<double> apply_a(const LatticeParams& p, const std::vector<double>& z) {
  std::vector<double> out;
  build_generator(p).apply(z, out);
  return out;
}

LatticeParams random_params(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.1, 2.0);
  std::vector<double> hops(static_cast<std::size_t>(n - 1));
  for (double& h : hops) h = u(rng);
  return LatticeParams(n, u(rng), u(rng), hops);
}

Outcome defining_identity() {
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int n = 3; n <= 6; ++n) {
    for (int k = 0; k < 50; ++k) {
      const auto p = random_params(n, rng);
      const auto z = oracle::random_simplex(n, rng);
      const auto f = vector_field_f(p, embed_z(z, n, n));
      worst = std::max(worst, oracle::max_abs_diff(f.values, embed_z(apply_a(p, z), n, n).values));
    }
  }
  return {worst < 1e-12, fmt("max |f(Ez) - EAz| = %.3g (< 1e-12)", worst)};
}

Outcome consistency_characterisation() {
  std::mt19937_64 rng(102);
  std::normal_distribution<double> g(0.0, 1.0);
  double embed_res = 0.0, preimage = 0.0;
  for (int n = 1; n <= 5; ++n) {
    for (int k = 0; k < 20; ++k) embed_res = std::max(embed_res, consistency_residual(embed_z(oracle::random_simplex(n, rng), n, n)));
    const IndexLayout lay(n, n);
    const Eigen::MatrixXd e = oracle::embedding_matrix(n, n);
    const auto basis = consistency_basis(lay);
    const auto anchor = embed(MasterState::uniform(n), n);
    const Eigen::Map<const Eigen::VectorXd> a(anchor.values.data(), static_cast<Eigen::Index>(anchor.size()));
    for (int k = 0; k < 20; ++k) {
      // Small moves from the uniform anchor stay within the image of the simplex.
      Eigen::VectorXd w(static_cast<Eigen::Index>(basis.dimension()));
      for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = g(rng);
      w *= 0.5 * std::ldexp(1.0, -n) / std::max(1.0, w.norm());
      const Eigen::VectorXd x = a + basis.basis * w;
      const Eigen::VectorXd z = e.colPivHouseholderQr().solve(x);
      double err = (e * z - x).cwiseAbs().maxCoeff();
      err = std::max(err, std::abs(z.sum() - 1.0));
      err = std::max(err, std::max(0.0, -z.minCoeff()));
      preimage = std::max(preimage, err);
    }
  }
  return {embed_res < 1e-12 && preimage < 1e-8,
          fmt("embed residual %.3g (< 1e-12), pre-image defect %.3g (< 1e-8)", embed_res, preimage)};
}

Outcome dimension_counts() {
  int mismatches = 0, cases = 0;
  for (int n = 3; n <= 10; ++n) {
    const auto pn = std::size_t{1} << (n + 2);
    mismatches += IndexLayout(n, n).size() != pn - 2 * static_cast<std::size_t>(n) - 4;
    for (int m = 2; m < n; ++m) {
      ++cases;
      const IndexLayout lay(n, m);
      const long long size = static_cast<long long>(n - m + 2) * (1LL << (m + 1)) - 2LL * n - 4;
      const long long null = static_cast<long long>(n - m + 2) * (1LL << (m - 1)) - 1;
      mismatches += static_cast<long long>(lay.size()) != size;
      mismatches += static_cast<long long>(consistency_null_dimension(lay)) != null;
    }
  }
  return {mismatches == 0, fmt("%d mismatches over %d (n, m) pairs", mismatches, cases)};
}

Outcome invariance() {
  std::mt19937_64 rng(104);
  const auto p = LatticeParams::homogeneous(6, 0.8, 0.4);
  double lo = 1.0, hi = 0.0, res = 0.0;
  for (int m : {2, 3}) {
    for (int k = 0; k < 20; ++k) {
      const auto traj = integrate(SystemSpec::meanfield(m), p, embed_z(oracle::random_simplex(6, rng), 6, m).values,
                                  10.0 / p.total_rate());
      for (const auto& dg : traj.diagnostics) {
        lo = std::min(lo, dg.min_component);
        hi = std::max(hi, dg.max_component);
        res = std::max(res, dg.consistency_residual);
      }
    }
  }
  return {lo >= -1e-9 && hi <= 1 + 1e-9 && res < 1e-7,
          fmt("components in [%.3g, %.12g] (within [-1e-9, 1+1e-9]), residual %.3g (< 1e-7)", lo, hi, res)};
}

Outcome repellent_boundary() {
  std::mt19937_64 rng(105);
  const int n = 6;
  const auto p = LatticeParams::homogeneous(n, 1, 1);
  std::vector<std::uint64_t> starts{0, (1u << n) - 1};
  std::uniform_int_distribution<std::uint64_t> pick(1, (1u << n) - 2);
  while (starts.size() < 12) starts.push_back(pick(rng));
  double worst = 1.0;
  std::string where;
  int failed = 0;
  for (int m : {2, 3}) {
    const auto sys = SystemSpec::meanfield(m);
    for (std::uint64_t c : starts) {
      const auto rep = boundary_escape_test(p, CorrelationVector(state_layout(sys, n), point_mass_start(sys, n, c)));
      if (!rep.escaped) {
        ++failed;
        if (rep.min_component < worst) {
          worst = rep.min_component;
          where = fmt("m=%d start=%llu at %s", m, static_cast<unsigned long long>(c),
                      rep.weakest ? to_string(*rep.weakest).c_str() : "?");
        }
      }
    }
  }
  if (failed == 0) return {true, "all 24 starts strictly positive at t = 1/c (> 1e-13)"};
  return {false, fmt("%d of 24 starts stay <= 1e-13 at t = 1/c; smallest %.3g (%s)", failed, worst, where.c_str())};
}

Outcome lower_bounds() {
  std::mt19937_64 rng(106);
  const auto p = LatticeParams::homogeneous(6, 0.6, 0.9);
  int violations = 0;
  double slack = INFINITY;
  for (int m : {2, 3}) {
    for (int k = 0; k < 200; ++k) {
      const auto rep = lower_bound_check_g(p, embed_z(oracle::random_simplex(6, rng), 6, m));
      violations += !rep.holds;
      slack = std::min(slack, rep.worst_slack);
    }
  }
  return {violations == 0, fmt("%d violations at 400 points, min g + c x = %.3g (>= -1e-12)", violations, slack)};
}

Outcome interior_stationary_point() {
  double worst_res = 0.0, worst_margin = 1.0;
  int failures = 0;
  for (int n : {6, 8})
    for (int m : {1, 2, 3})
      for (auto [a, b] : {std::pair{0.15, 0.15}, std::pair{0.75, 0.75}, std::pair{0.3, 0.7}}) {
        const auto p = LatticeParams::homogeneous(n, a, b);
        const auto sys = SystemSpec::meanfield(m);
        const auto rep = steady_state(sys, p, uniform_start(sys, n));
        failures += !(rep.converged && rep.residual_norm < 1e-11 && rep.interior_margin > 0.0);
        worst_res = std::max(worst_res, rep.residual_norm);
        worst_margin = std::min(worst_margin, rep.interior_margin);
      }
  return {failures == 0,
          fmt("%d failures of 18; max |g| = %.3g (< 1e-11), min interior margin %.3g (> 0)", failures, worst_res, worst_margin)};
}

std::vector<double> density_errors(double a, double b) {
  const auto p = LatticeParams::homogeneous(8, a, b);
  const auto exact = density_profile(MasterState{8, oracle::null_space_stationary(p)});
  std::vector<double> errs;
  for (int m : {1, 2, 3}) {
    const auto sys = SystemSpec::meanfield(m);
    const auto rep = steady_state(sys, p, uniform_start(sys, 8));
    errs.push_back(oracle::max_abs_diff(density_profile(sys, 8, rep.equilibrium), exact));
  }
  return errs;
}

Outcome critical_line_trend() {
  const auto e = density_errors(0.15, 0.15);
  return {e[0] > e[1] && e[1] > e[2] && e[2] < e[0] / 2,
          fmt("errors m=1,2,3: %.4g > %.4g > %.4g, and m=3 < m=1 / 2 = %.4g", e[0], e[1], e[2], e[0] / 2)};
}

Outcome maximal_current_agreement() {
  const auto e = density_errors(0.75, 0.75);
  const double worst = std::max({e[0], e[1], e[2]});
  return {worst < 0.05, fmt("errors m=1,2,3: %.4g, %.4g, %.4g (< 0.05)", e[0], e[1], e[2])};
}

Outcome ssa_cross_check() {
  double worst_z = 0.0, flux_z = 0.0;
  for (int n : {3, 5}) {
    const auto p = LatticeParams::homogeneous(n, 1, 1);
    const auto exact = density_profile(MasterState{n, oracle::null_space_stationary(p)});
    SsaConfig cfg{p};
    cfg.n_samples = 32;
    cfg.t_burn = 20.0 * n;
    cfg.t_measure = 1e4 / p.total_rate();
    cfg.seed = 110;
    const auto est = simulate(cfg);
    for (int d = 0; d < n; ++d) {
      const auto i = static_cast<std::size_t>(d);
      worst_z = std::max(worst_z, std::abs(est.density[i] - exact[i]) / est.density_se[i]);
    }
    flux_z = std::max(flux_z, std::abs(est.flux_gap) / est.flux_gap_se);
  }
  return {worst_z < 3 && flux_z < 3, fmt("max density deviation %.2f se (< 3), flux gap %.2f se (< 3)", worst_z, flux_z)};
}

Outcome closure_exactness() {
  std::mt19937_64 rng(111);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const auto p = random_params(6, rng);
    const auto z = oracle::product_distribution(oracle::random_probabilities(6, rng));
    const auto g = vector_field_g(p, project(embed_z(z, 6, 6), 2));
    const auto ref = project(embed_z(apply_a(p, z), 6, 6), 2);
    worst = std::max(worst, oracle::max_abs_diff(g.values, ref.values));
  }
  return {worst < 1e-12, fmt("max |g - Q E A z| = %.3g (< 1e-12)", worst)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"defining identity", defining_identity},
      {"consistency characterisation", consistency_characterisation},
      {"dimension counts", dimension_counts},
      {"invariance", invariance},
      {"repellent boundary", repellent_boundary},
      {"lower bounds", lower_bounds},
      {"interior stationary point", interior_stationary_point},
      {"order-m trend on critical line", critical_line_trend},
      {"maximal-current agreement", maximal_current_agreement},
      {"ssa cross-check", ssa_cross_check},
      {"closure exactness on products", closure_exactness},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    std::printf("[%s] %2zu %-32s %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
