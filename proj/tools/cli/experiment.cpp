#include "experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tasep/correlations.hpp"
#include "tasep/meanfield.hpp"

namespace tasep::cli {

using nlohmann::json;

void RawConfig::overlay(const RawConfig& top) {
  auto take = [](auto& dst, const auto& src) {
    if (src) dst = src;
  };
  take(n, top.n);
  take(alpha, top.alpha);
  take(beta, top.beta);
  take(h, top.h);
  take(models, top.models);
  take(init, top.init);
  take(evolve, top.evolve);
  take(steady, top.steady);
  take(tol, top.tol);
  take(seed, top.seed);
  take(output, top.output);
  take(m_max, top.m_max);
  take(input, top.input);
  take(samples, top.samples);
  take(t_burn, top.t_burn);
  take(t_measure, top.t_measure);
  take(threads, top.threads);
  take(alphas, top.alphas);
  take(betas, top.betas);
  // Choosing one mode on the command line drops the other from the file.
  if (top.evolve && !top.steady) steady.reset();
  if (top.steady && !top.evolve) evolve.reset();
}

namespace {

json read_json(const std::string& path, const std::string& field) {
  std::ifstream in(path);
  if (!in) throw ConfigError(field, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(field, "invalid JSON in '" + path + "': " + e.what());
  }
}

std::string joined(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  std::string out;
  for (const auto& e : v) {
    if (!out.empty()) out += ',';
    if (e.is_string()) {
      out += e.get<std::string>();
    } else {
      std::ostringstream os;
      os.precision(17);
      os << e.get<double>();
      out += os.str();
    }
  }
  return out;
}

}  // namespace

RawConfig load_config_file(const std::string& path) {
  const json j = read_json(path, "config");
  if (!j.is_object()) throw ConfigError("config", "top level must be an object");
  RawConfig r;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "n") r.n = v.get<int>();
      else if (key == "alpha") r.alpha = v.get<double>();
      else if (key == "beta") r.beta = v.get<double>();
      else if (key == "h") r.h = joined(v);
      else if (key == "models") r.models = joined(v);
      else if (key == "init") r.init = v.get<std::string>();
      else if (key == "evolve") r.evolve = v.get<double>();
      else if (key == "steady") r.steady = v.get<bool>();
      else if (key == "tol") r.tol = v.get<double>();
      else if (key == "seed") r.seed = v.get<std::uint64_t>();
      else if (key == "output") r.output = v.get<std::string>();
      else if (key == "m_max") r.m_max = v.get<int>();
      else if (key == "input") r.input = v.get<std::string>();
      else if (key == "samples") r.samples = v.get<int>();
      else if (key == "t_burn") r.t_burn = v.get<double>();
      else if (key == "t_measure") r.t_measure = v.get<double>();
      else if (key == "threads") r.threads = v.get<unsigned>();
      else if (key == "alphas") r.alphas = v.get<std::string>();
      else if (key == "betas") r.betas = v.get<std::string>();
      else throw ConfigError(key, "unknown configuration key");
    }
  } catch (const json::exception& e) {
    throw ConfigError("config", std::string("wrong value type: ") + e.what());
  }
  return r;
}

std::vector<double> Grid::points() const {
  std::vector<double> pts;
  for (int i = 0; i < count; ++i) pts.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
  return pts;
}

namespace {

double parse_number(const std::string& s, const std::string& field) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(field, "'" + s + "' is not a number");
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

}  // namespace

std::vector<double> parse_hops(const std::string& spec, int n) {
  if (spec.rfind("uniform:", 0) == 0) {
    const double v = parse_number(spec.substr(8), "h");
    return std::vector<double>(static_cast<std::size_t>(std::max(n - 1, 0)), v);
  }
  std::vector<double> hops;
  for (const auto& part : split(spec, ',')) hops.push_back(parse_number(part, "h"));
  if (static_cast<int>(hops.size()) != n - 1)
    throw ConfigError("h", "expected " + std::to_string(n - 1) + " rates, got " + std::to_string(hops.size()));
  return hops;
}

std::vector<ModelSelector> parse_models(const std::string& spec, int n) {
  std::vector<ModelSelector> out;
  for (const auto& raw : split(spec, ',')) {
    ModelSelector sel;
    if (raw == "master") {
      if (n > kMaxMasterSites) throw ConfigError("models", "master requires n <= 20");
      sel.system = SystemSpec::master();
    } else if (raw == "full") {
      if (n > 12) throw ConfigError("models", "full requires n <= 12");
      sel.system = SystemSpec::full();
    } else if (raw == "ssa") {
      sel.ssa = true;
    } else if (raw.rfind("mf:", 0) == 0 || raw.rfind("meanfield:", 0) == 0) {
      const std::string digits = raw.substr(raw.find(':') + 1);
      const double m = parse_number(digits, "models");
      if (m != std::floor(m) || m < 1 || m >= n)
        throw ConfigError("models", "'" + raw + "' needs an integer order 1 <= m < n");
      sel.system = SystemSpec::meanfield(static_cast<int>(m));
    } else {
      throw ConfigError("models", "unknown model '" + raw + "'");
    }
    sel.label = sel.ssa ? "ssa" : sel.system.name();
    out.push_back(sel);
  }
  if (out.empty()) throw ConfigError("models", "no model selected");
  return out;
}

Grid parse_grid(const std::string& spec, const std::string& field) {
  const auto parts = split(spec, ':');
  Grid g;
  if (parts.size() == 1) {
    g.lo = g.hi = parse_number(parts[0], field);
  } else if (parts.size() == 3) {
    g.lo = parse_number(parts[0], field);
    g.hi = parse_number(parts[1], field);
    const double c = parse_number(parts[2], field);
    if (c != std::floor(c) || c < 1) throw ConfigError(field, "point count must be a positive integer");
    g.count = static_cast<int>(c);
    if (g.count > 1 && !(g.hi > g.lo)) throw ConfigError(field, "upper bound must exceed lower bound");
  } else {
    throw ConfigError(field, "expected lo:hi:count");
  }
  if (!(g.lo > 0.0) || !std::isfinite(g.hi)) throw ConfigError(field, "grid must lie in (0, inf)");
  return g;
}

ExperimentConfig finalize(const RawConfig& raw, const std::string& command) {
  if (!raw.n) throw ConfigError("n", "lattice size is required");
  const int n = *raw.n;
  if (n < 1 || n > kMaxPatternBits) throw ConfigError("n", "must be between 1 and 64");
  const double alpha = raw.alpha.value_or(1.0);
  const double beta = raw.beta.value_or(1.0);
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha", "must be positive");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("beta", "must be positive");
  const auto hops = parse_hops(raw.h.value_or("uniform:1"), n);
  for (double v : hops) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("h", "rates must be positive");
  }

  ExperimentConfig cfg{LatticeParams(n, alpha, beta, hops)};
  if (raw.evolve && raw.steady.value_or(false)) throw ConfigError("evolve", "choose either --evolve or --steady");
  if (raw.evolve) {
    if (!(*raw.evolve >= 0.0)) throw ConfigError("evolve", "time must be non-negative");
    cfg.evolve = raw.evolve;
  }
  cfg.init = raw.init.value_or("uniform");
  cfg.tol = raw.tol.value_or(1e-11);
  if (!(cfg.tol > 0.0)) throw ConfigError("tol", "must be positive");
  cfg.seed = raw.seed.value_or(1);
  cfg.output = raw.output.value_or("");
  cfg.input = raw.input.value_or("");
  cfg.threads = raw.threads.value_or(0);

  const std::string default_models = command == "ssa" ? "ssa" : "mf:2";
  cfg.models = parse_models(raw.models.value_or(n > 2 ? default_models : "master"), n);

  if (command == "ssa") {
    cfg.samples = raw.samples.value_or(32);
    if (cfg.samples < 1) throw ConfigError("samples", "must be >= 1");
    cfg.t_burn = raw.t_burn;
    cfg.t_measure = raw.t_measure;
    if (cfg.t_burn && !(*cfg.t_burn >= 0.0)) throw ConfigError("t-burn", "must be non-negative");
    if (cfg.t_measure && !(*cfg.t_measure > 0.0)) throw ConfigError("t-measure", "must be positive");
  }
  for (const auto& m : cfg.models) {
    if (m.ssa && cfg.evolve) throw ConfigError("models", "ssa estimates stationary averages; use --steady");
  }
  if (command == "validate") {
    if (n < 2 || n > 10) throw ConfigError("n", "validate needs 2 <= n <= 10 for the master oracle");
    cfg.m_max = raw.m_max.value_or(std::min(3, n - 1));
    if (cfg.m_max < 1 || cfg.m_max >= n) throw ConfigError("m-max", "must satisfy 1 <= m_max < n");
  }
  if (command == "sweep") {
    if (!raw.alphas) throw ConfigError("alphas", "grid is required");
    if (!raw.betas) throw ConfigError("betas", "grid is required");
    cfg.alphas = parse_grid(*raw.alphas, "alphas");
    cfg.betas = parse_grid(*raw.betas, "betas");
    if (cfg.models.size() != 1 || cfg.models.front().ssa)
      throw ConfigError("models", "sweep takes exactly one deterministic model");
    if (cfg.evolve) throw ConfigError("evolve", "sweep always solves for the steady state");
  }
  if (cfg.init != "uniform" && cfg.init != "empty" && cfg.init != "full" && cfg.init.rfind("point:", 0) != 0 &&
      cfg.init.rfind("file:", 0) != 0)
    throw ConfigError("init", "unknown initial condition '" + cfg.init + "'");
  if (cfg.init.rfind("point:", 0) == 0 && cfg.init.size() - 6 != static_cast<std::size_t>(n))
    throw ConfigError("init", "point pattern must have exactly n digits");
  return cfg;
}

std::vector<double> initial_state(const std::string& init, const SystemSpec& sys, int n) {
  if (init == "uniform") return uniform_start(sys, n);
  if (init == "empty") return point_mass_start(sys, n, 0);
  if (init == "full") return point_mass_start(sys, n, low_mask(static_cast<unsigned>(n)));
  if (init.rfind("point:", 0) == 0) {
    BitPattern b;
    try {
      b = BitPattern::parse(init.substr(6));
    } catch (const std::exception& e) {
      throw ConfigError("init", e.what());
    }
    if (static_cast<int>(b.len) != n) throw ConfigError("init", "point pattern must have exactly n digits");
    return point_mass_start(sys, n, b.bits);
  }
  if (init.rfind("file:", 0) == 0) {
    const json j = read_json(init.substr(5), "init");
    std::vector<double> values;
    try {
      if (j.contains("distribution")) {
        values = j.at("distribution").get<std::vector<double>>();
        if (values.size() != (std::size_t{1} << n))
          throw ConfigError("init", "distribution must have 2^n entries");
        if (sys.kind == SystemKind::Master) return values;
        return embed(MasterState{n, values}, state_layout(sys, n).max_order()).values;
      }
      values = j.at("correlations").get<std::vector<double>>();
    } catch (const json::exception& e) {
      throw ConfigError("init", std::string("expected \"distribution\" or \"correlations\": ") + e.what());
    }
    if (sys.kind == SystemKind::Master) throw ConfigError("init", "the master equation needs a distribution");
    int order = 0;
    for (int m = 1; m <= n; ++m) {
      if (IndexLayout(n, m).size() == values.size()) order = m;
    }
    if (order == 0) throw ConfigError("init", "correlation vector length matches no order");
    const IndexLayout want = state_layout(sys, n);
    if (order < want.max_order()) throw ConfigError("init", "correlation vector has too few orders");
    return project(CorrelationVector(IndexLayout(n, order), values), want.max_order()).values;
  }
  throw ConfigError("init", "unknown initial condition '" + init + "'");
}

}  // namespace tasep::cli
