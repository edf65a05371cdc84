#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tasep/correlations.hpp"
#include "tasep/lattice.hpp"
#include "tasep/master.hpp"
#include "tasep/ode.hpp"

namespace tasep {

enum class SystemKind { Master, Full, MeanField };

/// Which of the three ODE systems to work with. `order` is the closure
/// order m for MeanField and ignored otherwise.
struct SystemSpec {
  SystemKind kind = SystemKind::Master;
  int order = 0;

  static SystemSpec master() { return {SystemKind::Master, 0}; }
  static SystemSpec full() { return {SystemKind::Full, 0}; }
  static SystemSpec meanfield(int m) { return {SystemKind::MeanField, m}; }

  std::string name() const;
};

/// Number of state variables of the system on n sites; validates the order.
std::size_t state_dimension(const SystemSpec& sys, int n);

/// Layout of a correlation state (Full: order n, MeanField: order m).
IndexLayout state_layout(const SystemSpec& sys, int n);

/// Interior start: the uniform distribution, or its marginals.
std::vector<double> uniform_start(const SystemSpec& sys, int n);

/// Start concentrated on one occupation configuration.
std::vector<double> point_mass_start(const SystemSpec& sys, int n, std::uint64_t configuration);

/// Thrown when a correlation trajectory drifts off the consistent space.
class ConsistencyDrift : public std::runtime_error {
public:
  ConsistencyDrift(const std::string& what, double t) : std::runtime_error(what), time_(t) {}
  double time() const noexcept { return time_; }

private:
  double time_;
};

struct StepDiagnostics {
  double consistency_residual = 0.0;  // |sum z - 1| for the master equation
  double min_component = 0.0;
  double max_component = 0.0;
  double probability_sum_error = 0.0;  // max over windows of |sum_b x[l,d,b] - 1|
  /// max over components of x0 e^{-ct} - x(t), floored at zero.
  double decay_bound_violation = 0.0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> states;  // empty unless states were recorded
  std::vector<StepDiagnostics> diagnostics;
  std::vector<double> final_state;
};

struct IntegrateOptions {
  OdeTolerances tol{};
  bool record_states = true;
};

/// Integrates the chosen system from x0 over [0, t_final]. Throws
/// std::invalid_argument when x0 has the wrong size or residual >= 1e-8,
/// ConsistencyDrift when the residual exceeds 1e-6 at an accepted step and
/// IntegrationError on step failure.
Trajectory integrate(const SystemSpec& sys, const LatticeParams& params, const std::vector<double>& x0,
                     double t_final, const IntegrateOptions& opt = {});

/// Right-hand side of the chosen system, without input checks.
void system_rhs(const SystemSpec& sys, const LatticeParams& params, const std::vector<double>& x,
                std::vector<double>& dx);

struct SteadyOptions {
  double tol = 1e-11;
  int max_newton_iterations = 50;
  double fd_step = 1e-6;
  double min_damping = 0x1p-30;
  /// Fallback integration rounds: horizons 2^0/c .. 2^k/c.
  int max_doublings = 12;
  OdeTolerances ode{};
};

struct SolverReport {
  bool converged = false;
  double residual_norm = 0.0;  // max-norm of the vector field at the equilibrium
  int iterations = 0;          // Newton steps (or 1 for the direct master solve)
  int fallback_rounds = 0;
  std::vector<double> equilibrium;
  double interior_margin = 0.0;  // min component of the equilibrium
};

/// Stationary point of the chosen system. The master equation is solved
/// directly. The correlation systems use damped Newton in orthonormal
/// coordinates of the consistent affine space, with long-time integration
/// as a fallback when Newton stalls.
SolverReport steady_state(const SystemSpec& sys, const LatticeParams& params, const std::vector<double>& x0,
                          const SteadyOptions& opt = {});

struct EscapeReport {
  bool escaped = false;
  std::size_t zeros_before = 0;
  double min_component = 0.0;  // of the state at t_probe
  std::optional<LpfIndex> weakest;
};

/// Integrates the order-m model from x0 for t_probe (default 1/c) and checks
/// that every component exceeds 1e-13.
EscapeReport boundary_escape_test(const LatticeParams& params, const CorrelationVector& x0,
                                  std::optional<double> t_probe = std::nullopt);

/// Occupation probability per site, indexed by site number.
std::vector<double> density_profile(const CorrelationVector& x);
std::vector<double> density_profile(const MasterState& z);
std::vector<double> density_profile(const SystemSpec& sys, int n, const std::vector<double>& state);

struct ComparisonTable {
  std::vector<std::string> models;             // "master", then "mf:m" per order
  std::vector<std::vector<double>> densities;  // per model, indexed by site
  std::vector<double> max_abs_error;           // per mean-field order, vs master; empty without oracle
  std::vector<bool> converged;
};

/// Steady (t_final empty) or time-t density profiles of the order-m models
/// from the uniform start, with the master equation as reference when
/// n <= 14.
ComparisonTable order_m_comparison(const LatticeParams& params, const std::vector<int>& orders,
                                   std::optional<double> t_final = std::nullopt);

}  // namespace tasep
