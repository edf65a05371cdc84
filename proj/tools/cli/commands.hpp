#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "experiment.hpp"

namespace tasep::cli {

enum ExitCode : int {
  kSuccess = 0,
  kValidationFailure = 1,
  kNoConvergence = 2,
  kInvalidInput = 3,
};

/// Classifier for homogeneous unit hop rates: "critical" when alpha < 0.5
/// and |alpha - beta| < max(step, 1e-9), otherwise LD / HD / MC by the
/// usual boundaries alpha < min(beta, 0.5), beta < min(alpha, 0.5),
/// min(alpha, beta) >= 0.5.
std::string phase_label(double alpha, double beta, double step);

/// Formats with 12 significant digits.
std::string format_number(double v);

int cmd_density(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_steady(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_sweep(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_validate(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_ssa(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);

/// Full command-line entry point; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tasep::cli
