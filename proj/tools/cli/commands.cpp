#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "tasep/consistency_basis.hpp"
#include "tasep/correlations.hpp"
#include "tasep/dynamics.hpp"
#include "tasep/master.hpp"
#include "tasep/meanfield.hpp"
#include "tasep/ssa.hpp"

namespace tasep::cli {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string phase_label(double alpha, double beta, double step) {
  // Grid points one step off the diagonal must not count, despite rounding.
  if (alpha < 0.5 && std::abs(alpha - beta) < std::max(step * (1.0 - 1e-9), 1e-9)) return "critical";
  if (alpha < std::min(beta, 0.5)) return "LD";
  if (beta < std::min(alpha, 0.5)) return "HD";
  if (std::min(alpha, beta) >= 0.5) return "MC";
  return "n/a";
}

namespace {

struct ModelResult {
  std::vector<double> density;  // indexed by site
  bool converged = true;
  double residual = 0.0;
  int iterations = 0;
  double margin = 0.0;
  double production = 0.0;
  double production_se = 0.0;
};

SsaConfig ssa_config(const ExperimentConfig& cfg) {
  const LatticeParams& p = cfg.params;
  double slowest = std::min(p.alpha(), p.beta());
  for (double h : p.hops()) slowest = std::min(slowest, h);
  SsaConfig s{p};
  s.n_samples = cfg.samples;
  s.t_burn = cfg.t_burn.value_or(10.0 * p.sites() / slowest);
  s.t_measure = cfg.t_measure.value_or(1e4 / p.total_rate());
  s.seed = cfg.seed;
  s.threads = cfg.threads;
  return s;
}

ModelResult run_model(const ModelSelector& model, const ExperimentConfig& cfg, const LatticeParams& params) {
  const int n = params.sites();
  ModelResult r;
  if (model.ssa) {
    SsaConfig sc = ssa_config(cfg);
    sc.params = params;
    const SsaEstimate est = simulate(sc);
    r.density = est.density;
    r.production = est.exit_flux;
    r.production_se = est.exit_flux_se;
    r.margin = *std::min_element(est.density.begin(), est.density.end());
    return r;
  }
  const SystemSpec& sys = model.system;
  const std::vector<double> x0 = initial_state(cfg.init, sys, n);
  std::vector<double> state;
  if (cfg.evolve) {
    IntegrateOptions opt;
    opt.record_states = false;
    state = integrate(sys, params, x0, *cfg.evolve, opt).final_state;
  } else {
    SteadyOptions opt;
    opt.tol = cfg.tol;
    SolverReport rep = steady_state(sys, params, x0, opt);
    r.converged = rep.converged;
    r.residual = rep.residual_norm;
    r.iterations = rep.iterations;
    state = std::move(rep.equilibrium);
  }
  r.density = density_profile(sys, n, state);
  r.margin = *std::min_element(state.begin(), state.end());
  r.production = params.beta() * r.density[0];
  return r;
}

// Writes to the configured file, or to `out` when no path was given.
template <class Fn>
int emit(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err, Fn&& body) {
  if (cfg.output.empty()) return body(out);
  std::ofstream file(cfg.output, std::ios::binary);
  if (!file) {
    err << "error: output: cannot open '" << cfg.output << "'\n";
    return kInvalidInput;
  }
  return body(file);
}

}  // namespace

int cmd_density(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  std::vector<ModelResult> results;
  for (const auto& m : cfg.models) results.push_back(run_model(m, cfg, cfg.params));
  int code = kSuccess;
  for (std::size_t k = 0; k < results.size(); ++k) {
    if (!results[k].converged) {
      err << "error: " << cfg.models[k].label << " did not converge (residual "
          << format_number(results[k].residual) << ")\n";
      code = kNoConvergence;
    }
  }
  const int written = emit(cfg, out, err, [&](std::ostream& os) {
    os << "site";
    for (const auto& m : cfg.models) os << ',' << m.label;
    os << '\n';
    for (int j = cfg.params.sites() - 1; j >= 0; --j) {
      os << j;
      for (const auto& r : results) os << ',' << format_number(r.density[static_cast<std::size_t>(j)]);
      os << '\n';
    }
    return kSuccess;
  });
  return written != kSuccess ? written : code;
}

int cmd_steady(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  ExperimentConfig steady = cfg;
  steady.evolve.reset();
  std::vector<ModelResult> results;
  for (const auto& m : steady.models) results.push_back(run_model(m, steady, steady.params));
  int code = kSuccess;
  const int written = emit(cfg, out, err, [&](std::ostream& os) {
    os << "model,converged,residual_norm,iterations,interior_margin,production_rate\n";
    for (std::size_t k = 0; k < results.size(); ++k) {
      const auto& r = results[k];
      os << cfg.models[k].label << ',' << (r.converged ? "true" : "false") << ',' << format_number(r.residual) << ','
         << r.iterations << ',' << format_number(r.margin) << ',' << format_number(r.production) << '\n';
      if (!r.converged) code = kNoConvergence;
    }
    return kSuccess;
  });
  if (code != kSuccess) err << "error: at least one model did not converge\n";
  return written != kSuccess ? written : code;
}

int cmd_sweep(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  struct Point {
    double alpha, beta;
    ModelResult result;
  };
  std::vector<Point> grid;
  for (double a : cfg.alphas.points()) {
    for (double b : cfg.betas.points()) grid.push_back({a, b, {}});
  }
  const ModelSelector& model = cfg.models.front();
  const int n = cfg.params.sites();
  const std::vector<double> hops(cfg.params.hops().begin(), cfg.params.hops().end());

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < grid.size();) {
      Point& pt = grid[i];
      pt.result = run_model(model, cfg, LatticeParams(n, pt.alpha, pt.beta, hops));
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                                            static_cast<unsigned>(grid.size())));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  const bool classify = cfg.params.uniform_hops(1.0);
  std::vector<double> steps;
  if (cfg.alphas.step() > 0) steps.push_back(cfg.alphas.step());
  if (cfg.betas.step() > 0) steps.push_back(cfg.betas.step());
  const double step = steps.empty() ? 0.0 : *std::min_element(steps.begin(), steps.end());
  int code = kSuccess;
  const int written = emit(cfg, out, err, [&](std::ostream& os) {
    os << "alpha,beta,production_rate,mid_density,phase,converged\n";
    for (const auto& pt : grid) {
      os << format_number(pt.alpha) << ',' << format_number(pt.beta) << ',' << format_number(pt.result.production)
         << ',' << format_number(pt.result.density[static_cast<std::size_t>(n / 2)]) << ','
         << (classify ? phase_label(pt.alpha, pt.beta, step) : "n/a") << ','
         << (pt.result.converged ? "true" : "false") << '\n';
      if (!pt.result.converged) code = kNoConvergence;
    }
    return kSuccess;
  });
  if (code != kSuccess) err << "error: some grid points did not converge\n";
  return written != kSuccess ? written : code;
}

int cmd_ssa(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  const SsaEstimate est = simulate(ssa_config(cfg));
  err << "exit flux " << format_number(est.exit_flux) << " +- " << format_number(est.exit_flux_se)
      << ", flux - beta*rho0 " << format_number(est.flux_gap) << " +- " << format_number(est.flux_gap_se) << '\n';
  return emit(cfg, out, err, [&](std::ostream& os) {
    os << "site,density,density_se\n";
    for (int j = cfg.params.sites() - 1; j >= 0; --j) {
      const auto u = static_cast<std::size_t>(j);
      os << j << ',' << format_number(est.density[u]) << ',' << format_number(est.density_se[u]) << '\n';
    }
    return kSuccess;
  });
}

namespace {

struct Suite {
  std::string name;
  bool passed = true;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
};

std::vector<double> random_simplex(int n, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> z(std::size_t{1} << n);
  double s = 0.0;
  for (double& v : z) s += (v = e(rng));
  for (double& v : z) v /= s;
  return z;
}

// Upper-bound style check: passes when measured < threshold.
Suite below(std::string name, double measured, double threshold, std::string detail = {}) {
  return {std::move(name), measured < threshold, measured, threshold, std::move(detail)};
}

CorrelationVector read_input_vector(const std::string& path, int n) {
  std::ifstream in(path);
  if (!in) throw ConfigError("input", "cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("input", std::string("invalid JSON: ") + e.what());
  }
  std::vector<double> values;
  try {
    if (j.contains("distribution")) {
      values = j.at("distribution").get<std::vector<double>>();
      if (values.size() != (std::size_t{1} << n)) throw ConfigError("input", "distribution must have 2^n entries");
      return embed(MasterState{n, values}, n);
    }
    values = j.at("correlations").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ConfigError("input", std::string("expected \"distribution\" or \"correlations\": ") + e.what());
  }
  for (int m = 1; m <= n; ++m) {
    if (IndexLayout(n, m).size() == values.size()) return CorrelationVector(IndexLayout(n, m), values);
  }
  throw ConfigError("input", "correlation vector length matches no order");
}

}  // namespace

int cmd_validate(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  const LatticeParams& p = cfg.params;
  const int n = p.sites();
  const double c = p.total_rate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.05, 0.95);
  constexpr int kSamples = 20;
  std::vector<Suite> suites;

  if (!cfg.input.empty()) {
    const CorrelationVector x = read_input_vector(cfg.input, n);
    Suite s = below("input_consistency", consistency_residual(x), 1e-9);
    if (!in_unit_box(x)) {
      s.passed = false;
      s.detail = "component outside [0, 1]";
    }
    suites.push_back(s);
  }

  const GeneratorMatrix a = build_generator(p);
  std::vector<std::vector<double>> zs;
  for (int k = 0; k < kSamples; ++k) zs.push_back(random_simplex(n, rng));

  double embed_res = 0.0, identity = 0.0, tangency_f = 0.0, slack_f = INFINITY;
  bool lower_f = true;
  for (const auto& z : zs) {
    const MasterState ms{n, z};
    const CorrelationVector y = embed(ms, n);
    embed_res = std::max(embed_res, consistency_residual(y));
    std::vector<double> az;
    a.apply(z, az);
    const CorrelationVector eaz = embed(MasterState{n, az}, n);
    const CorrelationVector f = vector_field_f(p, y);
    for (std::size_t i = 0; i < f.size(); ++i) identity = std::max(identity, std::abs(f.values[i] - eaz.values[i]));
    tangency_f = std::max(tangency_f, tangent_residual(f));
    const LowerBoundReport lb = lower_bound_check(p, y);
    lower_f = lower_f && lb.holds;
    slack_f = std::min(slack_f, lb.worst_slack);
  }
  suites.push_back(below("embedding_consistency", embed_res, 1e-12));
  suites.push_back(below("identity_f_embed", identity, 1e-12));
  suites.push_back(below("tangency_f", tangency_f, 1e-10));
  suites.push_back({"lower_bound_f", lower_f, slack_f, -1e-12, "min of f + c y"});

  const MasterState stationary = stationary_master(a);
  const std::vector<double> rho_master = site_densities(stationary);
  std::vector<double> order_errors;
  for (int m = 1; m <= cfg.m_max; ++m) {
    const std::string tag = ":m=" + std::to_string(m);
    const SystemSpec sys = SystemSpec::meanfield(m);

    double tangency_g = 0.0, worst_slack = INFINITY;
    bool lower_g = true;
    for (const auto& z : zs) {
      const CorrelationVector x = project(embed(MasterState{n, z}, n), m);
      tangency_g = std::max(tangency_g, tangent_residual(vector_field_g(p, x)));
      const LowerBoundReport lb = lower_bound_check_g(p, x);
      lower_g = lower_g && lb.holds;
      worst_slack = std::min(worst_slack, lb.worst_slack);
    }
    suites.push_back(below("tangency_g" + tag, tangency_g, 1e-10));
    suites.push_back({"lower_bound_g" + tag, lower_g, worst_slack, -1e-12, "min of g + c x"});

    double lo = INFINITY, hi = -INFINITY, drift = 0.0;
    for (int k = 0; k < 5; ++k) {
      std::vector<double> q(static_cast<std::size_t>(n));
      for (double& v : q) v = unit(rng);
      IntegrateOptions opt;
      opt.record_states = false;
      const Trajectory tr = integrate(sys, p, embed_product(q, m).values, 10.0 / c, opt);
      for (const auto& dg : tr.diagnostics) {
        lo = std::min(lo, dg.min_component);
        hi = std::max(hi, dg.max_component);
        drift = std::max(drift, dg.consistency_residual);
      }
    }
    Suite inv = below("invariance" + tag, drift, 1e-7, "max consistency residual; components in [" +
                                                           format_number(lo) + ", " + format_number(hi) + "]");
    inv.passed = inv.passed && lo >= -1e-9 && hi <= 1.0 + 1e-9;
    suites.push_back(inv);

    double escape_min = INFINITY;
    for (std::uint64_t cfg_bits : {std::uint64_t{0}, low_mask(static_cast<unsigned>(n))}) {
      const CorrelationVector x0(state_layout(sys, n), point_mass_start(sys, n, cfg_bits));
      escape_min = std::min(escape_min, boundary_escape_test(p, x0).min_component);
    }
    suites.push_back({"boundary_escape" + tag, escape_min > 1e-13, escape_min, 1e-13,
                      "min component at t=1/c from the empty and full lattice"});

    const SolverReport rep = steady_state(sys, p, uniform_start(sys, n));
    suites.push_back({"steady_interior" + tag, rep.converged && rep.interior_margin > 0.0, rep.residual_norm,
                      cfg.tol, "interior margin " + format_number(rep.interior_margin)});
    const auto rho = density_profile(sys, n, rep.equilibrium);
    double e = 0.0;
    for (std::size_t j = 0; j < rho.size(); ++j) e = std::max(e, std::abs(rho[j] - rho_master[j]));
    order_errors.push_back(e);
  }
  bool monotone = true;
  for (std::size_t k = 1; k < order_errors.size(); ++k) monotone = monotone && order_errors[k] < order_errors[k - 1];
  std::string errs;
  for (double e : order_errors) errs += (errs.empty() ? "" : ",") + format_number(e);
  suites.push_back({"order_m_trend", monotone, order_errors.back(), 0.0, "steady density errors by order: " + errs});

  ordered_json report;
  report["n"] = n;
  report["m_max"] = cfg.m_max;
  report["alpha"] = p.alpha();
  report["beta"] = p.beta();
  report["h"] = std::vector<double>(p.hops().begin(), p.hops().end());
  report["seed"] = cfg.seed;
  bool all = true;
  std::vector<std::string> failed;
  for (const auto& s : suites) {
    ordered_json j{{"name", s.name}, {"passed", s.passed}, {"measured", s.measured}, {"threshold", s.threshold}};
    if (!s.detail.empty()) j["detail"] = s.detail;
    report["suites"].push_back(j);
    if (!s.passed) {
      all = false;
      failed.push_back(s.name);
    }
  }
  report["passed"] = all;
  const int written = emit(cfg, out, err, [&](std::ostream& os) {
    os << report.dump(2) << '\n';
    return kSuccess;
  });
  if (written != kSuccess) return written;
  if (!all) {
    err << "validation failed:";
    for (const auto& f : failed) err << ' ' << f;
    err << '\n';
    return kValidationFailure;
  }
  return kSuccess;
}

namespace {

template <class T>
void bind_option(CLI::App* app, const std::string& flag, std::optional<T>& dst, const std::string& help) {
  app->add_option_function<T>(flag, [&dst](const T& v) { dst = v; }, help);
}

void add_common(CLI::App* app, RawConfig& raw, std::string& config_path, bool with_models) {
  bind_option(app, "--n", raw.n, "number of sites");
  bind_option(app, "--alpha", raw.alpha, "entry rate");
  bind_option(app, "--beta", raw.beta, "exit rate");
  bind_option(app, "--h", raw.h, "hop rates: uniform:<v> or a comma list of n-1 values");
  if (with_models) bind_option(app, "--models", raw.models, "comma list of master, full, mf:<m>, ssa");
  bind_option(app, "--init", raw.init, "uniform | empty | full | point:<bits> | file:<path>");
  bind_option(app, "--evolve", raw.evolve, "integrate up to this time");
  app->add_flag_callback("--steady", [&raw] { raw.steady = true; }, "solve for the steady state (default)");
  bind_option(app, "--tol", raw.tol, "steady-state residual tolerance");
  bind_option(app, "--seed", raw.seed, "random seed");
  bind_option(app, "--output", raw.output, "output file (default stdout)");
  app->add_option("--config", config_path, "JSON configuration; flags override its values");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"TASEP master equation, correlation hierarchy and mean-field models"};
  // -h would clash with the hop-rate flag --h.
  app.set_help_flag("--help", "print this help message and exit");
  app.require_subcommand(1);
  RawConfig raw;
  std::string config_path;

  auto* density = app.add_subcommand("density", "density profiles per model (CSV)");
  add_common(density, raw, config_path, true);
  auto* steady = app.add_subcommand("steady", "steady-state solver reports (CSV)");
  add_common(steady, raw, config_path, true);
  auto* sweep = app.add_subcommand("sweep", "production rate and phase over an (alpha, beta) grid (CSV)");
  add_common(sweep, raw, config_path, true);
  bind_option(sweep, "--alphas", raw.alphas, "alpha grid lo:hi:count");
  bind_option(sweep, "--betas", raw.betas, "beta grid lo:hi:count");
  auto* validate = app.add_subcommand("validate", "property suites against the master equation (JSON)");
  add_common(validate, raw, config_path, false);
  bind_option(validate, "--m-max", raw.m_max, "largest closure order to check");
  bind_option(validate, "--input", raw.input, "JSON file with a correlation vector or distribution to check");
  auto* ssa = app.add_subcommand("ssa", "Gillespie simulation estimates (CSV)");
  add_common(ssa, raw, config_path, false);
  bind_option(ssa, "--samples", raw.samples, "independent replicas");
  bind_option(ssa, "--t-burn", raw.t_burn, "burn-in time");
  bind_option(ssa, "--t-measure", raw.t_measure, "measurement window");
  bind_option(ssa, "--threads", raw.threads, "worker threads (0 = all cores)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidInput;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    RawConfig merged;
    if (!config_path.empty()) merged = load_config_file(config_path);
    merged.overlay(raw);
    const ExperimentConfig cfg = finalize(merged, command);
    if (command == "density") return cmd_density(cfg, out, err);
    if (command == "steady") return cmd_steady(cfg, out, err);
    if (command == "sweep") return cmd_sweep(cfg, out, err);
    if (command == "validate") return cmd_validate(cfg, out, err);
    return cmd_ssa(cfg, out, err);
  } catch (const ConfigError& e) {
    err << "error: invalid configuration: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const IntegrationError& e) {
    err << "error: integration failed: " << e.what() << '\n';
    return kNoConvergence;
  } catch (const ConsistencyDrift& e) {
    err << "error: " << e.what() << '\n';
    return kNoConvergence;
  } catch (const std::invalid_argument& e) {
    err << "error: invalid input: " << e.what() << '\n';
    return kInvalidInput;
  }
}

}  // namespace tasep::cli
