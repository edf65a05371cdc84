#pragma once

#include <cstdint>
#include <vector>

#include "tasep/lattice.hpp"

namespace tasep {

struct SsaConfig {
  LatticeParams params;
  int n_samples = 32;  // independent replicas
  double t_burn = 0.0;
  double t_measure = 1.0;
  std::uint64_t seed = 1;
  /// Worker threads for the replicas; 0 uses the hardware concurrency.
  unsigned threads = 0;
};

/// Time averages over [t_burn, t_burn + t_measure], averaged over replicas.
/// Standard errors are the replica standard deviation over sqrt(replicas)
/// and are zero for a single replica.
struct SsaEstimate {
  std::vector<double> density;     // indexed by site
  std::vector<double> density_se;
  std::vector<double> pair11;      // P(sites d+1 and d occupied), d = 0 .. n-2
  std::vector<double> pair11_se;
  double exit_flux = 0.0;          // exit events per unit time
  double exit_flux_se = 0.0;
  double flux_gap = 0.0;           // replica mean of exit_flux - beta * density[0]
  double flux_gap_se = 0.0;
  std::uint64_t events = 0;
  int replicas = 0;
};

/// Direct-method Gillespie simulation started from the empty lattice. Each
/// replica draws from its own mt19937_64 stream seeded by (seed, replica), so
/// results do not depend on the thread count. Throws std::invalid_argument
/// for n > 64, n_samples < 1 or negative times.
SsaEstimate simulate(const SsaConfig& config);

}  // namespace tasep
