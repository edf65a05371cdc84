#include "tasep/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "tasep/consistency_basis.hpp"
#include "tasep/meanfield.hpp"

namespace tasep {

std::string SystemSpec::name() const {
  switch (kind) {
    case SystemKind::Master: return "master";
    case SystemKind::Full: return "full";
    case SystemKind::MeanField: return "mf:" + std::to_string(order);
  }
  return "unknown";
}

IndexLayout state_layout(const SystemSpec& sys, int n) {
  switch (sys.kind) {
    case SystemKind::Full: return IndexLayout(n, n);
    case SystemKind::MeanField: validate_closure_order(n, sys.order); return IndexLayout(n, sys.order);
    case SystemKind::Master: break;
  }
  throw std::invalid_argument("state_layout: the master equation has no correlation layout");
}

std::size_t state_dimension(const SystemSpec& sys, int n) {
  if (sys.kind == SystemKind::Master) {
    if (n < 1 || n > kMaxMasterSites) throw std::invalid_argument("master equation limited to n <= 20");
    return std::size_t{1} << n;
  }
  return state_layout(sys, n).size();
}

std::vector<double> uniform_start(const SystemSpec& sys, int n) {
  if (sys.kind == SystemKind::Master) return MasterState::uniform(n).z;
  const std::vector<double> half(static_cast<std::size_t>(n), 0.5);
  return embed_product(half, state_layout(sys, n).max_order()).values;
}

std::vector<double> point_mass_start(const SystemSpec& sys, int n, std::uint64_t configuration) {
  if (n < 64 && configuration >= (std::uint64_t{1} << n))
    throw std::invalid_argument("point_mass_start: configuration out of range");
  if (sys.kind == SystemKind::Master) return MasterState::point_mass(n, configuration).z;
  std::vector<double> p(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = static_cast<double>((configuration >> i) & 1u);
  return embed_product(p, state_layout(sys, n).max_order()).values;
}

namespace {

// Prepared right-hand side: the generator is built once per system.
class Rhs {
public:
  Rhs(const SystemSpec& sys, const LatticeParams& params) : sys_(sys), params_(params), layout_(1, 1) {
    if (sys.kind == SystemKind::Master) {
      gen_.emplace(build_generator(params));
    } else {
      layout_ = state_layout(sys, params.sites());
    }
  }

  std::size_t dimension() const {
    return sys_.kind == SystemKind::Master ? gen_->states() : layout_.size();
  }
  const IndexLayout& layout() const noexcept { return layout_; }

  void operator()(const std::vector<double>& x, std::vector<double>& dx) const {
    dx.resize(x.size());
    switch (sys_.kind) {
      case SystemKind::Master: gen_->apply(x, dx); return;
      case SystemKind::MeanField: vector_field_g_into(params_, layout_, x.data(), dx.data()); return;
      case SystemKind::Full: {
        const int n = layout_.sites();
        auto get = [&](int lo, int dd, std::uint64_t bb) { return x[layout_.at(lo, dd, bb)]; };
        for (int l = 1; l <= n; ++l) {
          for (int d = 0; d <= n - l; ++d) {
            for (std::uint64_t b = 0; b < (std::uint64_t{1} << l); ++b)
              dx[layout_.at(l, d, b)] = vector_field_component(params_, l, d, b, get);
          }
        }
        return;
      }
    }
  }

  // Consistency residual, or |sum z - 1| for the master equation.
  double residual(const std::vector<double>& x) const {
    if (sys_.kind == SystemKind::Master) return std::abs(std::accumulate(x.begin(), x.end(), 0.0) - 1.0);
    return consistency_residual(CorrelationVector(layout_, x));
  }

  double sum_error(const std::vector<double>& x) const {
    if (sys_.kind == SystemKind::Master) return residual(x);
    double worst = 0.0;
    const int n = layout_.sites();
    for (int l = 1; l <= layout_.max_order(); ++l) {
      for (int d = 0; d <= n - l; ++d) {
        const std::size_t base = layout_.at(l, d, 0);
        double s = 0.0;
        for (std::size_t b = 0; b < (std::size_t{1} << l); ++b) s += x[base + b];
        worst = std::max(worst, std::abs(s - 1.0));
      }
    }
    return worst;
  }

private:
  SystemSpec sys_;
  LatticeParams params_;
  IndexLayout layout_;
  std::optional<GeneratorMatrix> gen_;
};

constexpr double kStartResidual = 1e-8;
constexpr double kDriftResidual = 1e-6;

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double e : v) m = std::max(m, std::abs(e));
  if (std::any_of(v.begin(), v.end(), [](double e) { return !std::isfinite(e); }))
    return std::numeric_limits<double>::infinity();
  return m;
}

}  // namespace

void system_rhs(const SystemSpec& sys, const LatticeParams& params, const std::vector<double>& x,
                std::vector<double>& dx) {
  const Rhs rhs(sys, params);
  if (x.size() != rhs.dimension()) throw std::invalid_argument("system_rhs: state has the wrong size");
  rhs(x, dx);
}

Trajectory integrate(const SystemSpec& sys, const LatticeParams& params, const std::vector<double>& x0,
                     double t_final, const IntegrateOptions& opt) {
  const Rhs rhs(sys, params);
  if (x0.size() != rhs.dimension())
    throw std::invalid_argument("integrate: initial state has " + std::to_string(x0.size()) + " entries, expected " +
                                std::to_string(rhs.dimension()));
  if (!(t_final >= 0.0)) throw std::invalid_argument("integrate: negative final time");
  const double r0 = rhs.residual(x0);
  if (!(r0 < kStartResidual))
    throw std::invalid_argument("integrate: initial state is not consistent (residual " + std::to_string(r0) + ")");

  const double c = params.total_rate();
  Trajectory traj;
  auto observe = [&](double t, const std::vector<double>& x) {
    StepDiagnostics dg;
    dg.consistency_residual = rhs.residual(x);
    if (!(dg.consistency_residual <= kDriftResidual))
      throw ConsistencyDrift("integrate: consistency residual " + std::to_string(dg.consistency_residual) +
                                 " at t=" + std::to_string(t),
                             t);
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    dg.min_component = *lo;
    dg.max_component = *hi;
    dg.probability_sum_error = rhs.sum_error(x);
    const double decay = std::exp(-c * t);
    for (std::size_t i = 0; i < x.size(); ++i)
      dg.decay_bound_violation = std::max(dg.decay_bound_violation, x0[i] * decay - x[i]);
    traj.times.push_back(t);
    traj.diagnostics.push_back(dg);
    if (opt.record_states) traj.states.push_back(x);
  };

  std::vector<double> x = x0;
  integrate_dopri5([&rhs](const std::vector<double>& s, std::vector<double>& ds) { rhs(s, ds); }, x, 0.0, t_final,
                   opt.tol, observe);
  traj.final_state = std::move(x);
  return traj;
}

namespace {

SolverReport master_steady(const LatticeParams& params, const SteadyOptions& opt) {
  const GeneratorMatrix a = build_generator(params);
  const MasterState z = stationary_master(a);
  std::vector<double> az;
  a.apply(z.z, az);
  SolverReport rep;
  rep.residual_norm = max_abs(az);
  rep.converged = rep.residual_norm < opt.tol;
  rep.iterations = 1;
  rep.interior_margin = z.min_component();
  rep.equilibrium = z.z;
  return rep;
}

struct NewtonOutcome {
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
};

NewtonOutcome damped_newton(const Rhs& rhs, const Eigen::MatrixXd& basis, std::vector<double>& x,
                            const SteadyOptions& opt) {
  const Eigen::Index dim = basis.rows();
  const Eigen::Index k = basis.cols();
  std::vector<double> g, gp, gm, xt(x.size());
  rhs(x, g);
  NewtonOutcome out;
  out.residual = max_abs(g);

  Eigen::MatrixXd jac(k, k);
  for (; out.iterations < opt.max_newton_iterations; ++out.iterations) {
    if (out.residual < opt.tol) break;
    for (Eigen::Index j = 0; j < k; ++j) {
      for (Eigen::Index i = 0; i < dim; ++i) xt[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)] + opt.fd_step * basis(i, j);
      rhs(xt, gp);
      for (Eigen::Index i = 0; i < dim; ++i) xt[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)] - opt.fd_step * basis(i, j);
      rhs(xt, gm);
      const Eigen::Map<const Eigen::VectorXd> vp(gp.data(), dim), vm(gm.data(), dim);
      jac.col(j) = basis.transpose() * ((vp - vm) / (2.0 * opt.fd_step));
    }
    const Eigen::Map<const Eigen::VectorXd> gv(g.data(), dim);
    const Eigen::VectorXd delta = jac.colPivHouseholderQr().solve(-(basis.transpose() * gv));
    const Eigen::VectorXd step = basis * delta;
    if (!step.allFinite()) break;

    bool accepted = false;
    for (double lambda = 1.0; lambda >= opt.min_damping; lambda *= 0.5) {
      bool inside = true;
      for (Eigen::Index i = 0; i < dim; ++i) {
        const double v = x[static_cast<std::size_t>(i)] + lambda * step(i);
        xt[static_cast<std::size_t>(i)] = v;
        inside = inside && v >= -kZeroThreshold && v <= 1.0 + kZeroThreshold;
      }
      if (!inside) continue;
      rhs(xt, gp);
      const double r = max_abs(gp);
      if (r < out.residual) {
        x = xt;
        g.swap(gp);
        out.residual = r;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  out.converged = out.residual < opt.tol;
  return out;
}

}  // namespace

SolverReport steady_state(const SystemSpec& sys, const LatticeParams& params, const std::vector<double>& x0,
                          const SteadyOptions& opt) {
  if (sys.kind == SystemKind::Master) return master_steady(params, opt);

  const Rhs rhs(sys, params);
  if (x0.size() != rhs.dimension()) throw std::invalid_argument("steady_state: initial state has the wrong size");
  const double r0 = rhs.residual(x0);
  if (!(r0 < kStartResidual))
    throw std::invalid_argument("steady_state: initial state is not consistent (residual " + std::to_string(r0) + ")");
  const auto basis = shared_consistency_basis(rhs.layout());

  SolverReport rep;
  std::vector<double> x = x0;
  const double c = params.total_rate();
  for (int round = 0;; ++round) {
    const NewtonOutcome nw = damped_newton(rhs, basis->basis, x, opt);
    rep.iterations += nw.iterations;
    rep.residual_norm = nw.residual;
    if (nw.converged || round > opt.max_doublings) break;
    // Newton stalled: relax towards the attractor and try again.
    try {
      integrate_dopri5([&rhs](const std::vector<double>& s, std::vector<double>& ds) { rhs(s, ds); }, x, 0.0,
                       std::ldexp(1.0, round) / c, opt.ode);
    } catch (const IntegrationError& e) {
      x = e.last_state();
    }
    ++rep.fallback_rounds;
  }
  std::vector<double> g;
  rhs(x, g);
  rep.residual_norm = max_abs(g);
  rep.converged = rep.residual_norm < opt.tol && rhs.residual(x) < kStartResidual;
  rep.interior_margin = *std::min_element(x.begin(), x.end());
  rep.equilibrium = std::move(x);
  return rep;
}

EscapeReport boundary_escape_test(const LatticeParams& params, const CorrelationVector& x0,
                                  std::optional<double> t_probe) {
  const int n = x0.sites();
  const SystemSpec sys = x0.max_order() == n ? SystemSpec::full() : SystemSpec::meanfield(x0.max_order());
  EscapeReport rep;
  rep.zeros_before = zero_index_set(x0).size();
  const double t = t_probe.value_or(1.0 / params.total_rate());
  IntegrateOptions opt;
  opt.record_states = false;
  const Trajectory tr = integrate(sys, params, x0.values, t, opt);
  const auto it = std::min_element(tr.final_state.begin(), tr.final_state.end());
  rep.min_component = *it;
  rep.weakest = x0.layout.unflatten(static_cast<std::size_t>(it - tr.final_state.begin()));
  rep.escaped = rep.min_component > 1e-13;
  return rep;
}

std::vector<double> density_profile(const CorrelationVector& x) {
  std::vector<double> rho(static_cast<std::size_t>(x.sites()));
  for (int j = 0; j < x.sites(); ++j) rho[static_cast<std::size_t>(j)] = x(1, j, 1);
  return rho;
}

std::vector<double> density_profile(const MasterState& z) { return site_densities(z); }

std::vector<double> density_profile(const SystemSpec& sys, int n, const std::vector<double>& state) {
  if (sys.kind == SystemKind::Master) return site_densities(MasterState{n, state});
  return density_profile(CorrelationVector(state_layout(sys, n), state));
}

ComparisonTable order_m_comparison(const LatticeParams& params, const std::vector<int>& orders,
                                   std::optional<double> t_final) {
  const int n = params.sites();
  for (int m : orders) validate_closure_order(n, m);
  ComparisonTable table;
  std::optional<std::vector<double>> reference;
  if (n <= 14) {
    const GeneratorMatrix a = build_generator(params);
    const MasterState z = t_final ? evolve_master(a, MasterState::uniform(n), *t_final) : stationary_master(a);
    reference = site_densities(z);
    table.models.push_back("master");
    table.densities.push_back(*reference);
    table.converged.push_back(true);
  }
  for (int m : orders) {
    const SystemSpec sys = SystemSpec::meanfield(m);
    std::vector<double> state;
    bool ok = true;
    if (t_final) {
      IntegrateOptions opt;
      opt.record_states = false;
      state = integrate(sys, params, uniform_start(sys, n), *t_final, opt).final_state;
    } else {
      SolverReport rep = steady_state(sys, params, uniform_start(sys, n));
      ok = rep.converged;
      state = std::move(rep.equilibrium);
    }
    const auto rho = density_profile(sys, n, state);
    table.models.push_back(sys.name());
    table.densities.push_back(rho);
    table.converged.push_back(ok);
    if (reference) {
      double err = 0.0;
      for (std::size_t j = 0; j < rho.size(); ++j) err = std::max(err, std::abs(rho[j] - (*reference)[j]));
      table.max_abs_error.push_back(err);
    }
  }
  return table;
}

}  // namespace tasep
