#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tasep/dynamics.hpp"
#include "tasep/lattice.hpp"

namespace tasep::cli {

/// Invalid configuration; `field` names the offending setting.
class ConfigError : public std::runtime_error {
public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

struct ModelSelector {
  bool ssa = false;
  SystemSpec system;  // unused when ssa is set
  std::string label;
};

/// Settings as given on the command line or in a JSON file; every field is
/// optional so that flags can be layered over file values.
struct RawConfig {
  std::optional<int> n;
  std::optional<double> alpha, beta;
  std::optional<std::string> h;
  std::optional<std::string> models;
  std::optional<std::string> init;
  std::optional<double> evolve;
  std::optional<bool> steady;
  std::optional<double> tol;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output;
  std::optional<int> m_max;
  std::optional<std::string> input;
  std::optional<int> samples;
  std::optional<double> t_burn, t_measure;
  std::optional<unsigned> threads;
  std::optional<std::string> alphas, betas;

  /// Fields set in `top` replace those of *this.
  void overlay(const RawConfig& top);
};

/// Reads a JSON object whose keys are the long flag names with dashes
/// replaced by underscores ("t_measure", "m_max", ...). `h` and `models`
/// may also be arrays.
RawConfig load_config_file(const std::string& path);

struct Grid {
  double lo = 0.0, hi = 0.0;
  int count = 1;
  std::vector<double> points() const;
  double step() const noexcept { return count > 1 ? (hi - lo) / (count - 1) : 0.0; }
};

struct ExperimentConfig {
  explicit ExperimentConfig(LatticeParams p) : params(std::move(p)) {}

  LatticeParams params;
  std::vector<ModelSelector> models;
  std::string init = "uniform";
  std::optional<double> evolve;  // empty means steady state
  double tol = 1e-11;
  std::uint64_t seed = 1;
  std::string output;            // empty means stdout
  int m_max = 3;
  std::string input;
  int samples = 32;
  std::optional<double> t_burn, t_measure;
  unsigned threads = 0;
  Grid alphas, betas;
};

/// Parses "uniform:<v>" or a comma list of n-1 rates.
std::vector<double> parse_hops(const std::string& spec, int n);
/// Parses "master,full,mf:2,meanfield:3,ssa".
std::vector<ModelSelector> parse_models(const std::string& spec, int n);
/// Parses "lo:hi:count" (or a single value).
Grid parse_grid(const std::string& spec, const std::string& field);

/// Validates everything before any computation; throws ConfigError.
ExperimentConfig finalize(const RawConfig& raw, const std::string& command);

/// Initial state of `sys` from the init selector
/// (uniform | empty | full | point:<bits> | file:<path>).
std::vector<double> initial_state(const std::string& init, const SystemSpec& sys, int n);

}  // namespace tasep::cli
