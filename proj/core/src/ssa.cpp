#include "tasep/ssa.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <stdexcept>
#include <thread>

namespace tasep {

namespace {

struct ReplicaResult {
  std::vector<double> density;
  std::vector<double> pair11;
  double exit_flux = 0.0;
  std::uint64_t events = 0;
};

ReplicaResult run_replica(const SsaConfig& cfg, int replica) {
  const LatticeParams& p = cfg.params;
  const int n = p.sites();
  const auto un = static_cast<std::size_t>(n);
  const std::uint64_t entry_bit = std::uint64_t{1} << (n - 1);

  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(replica)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const double t_start = cfg.t_burn;
  const double t_end = cfg.t_burn + cfg.t_measure;
  ReplicaResult out;
  out.density.assign(un, 0.0);
  out.pair11.assign(un > 0 ? un - 1 : 0, 0.0);
  std::uint64_t exits = 0;

  std::uint64_t c = 0;
  double t = 0.0;
  auto accumulate = [&](double from, double to) {
    const double lo = std::max(from, t_start);
    const double hi = std::min(to, t_end);
    if (hi <= lo) return;
    const double w = hi - lo;
    for (std::size_t i = 0; i < un; ++i) {
      if ((c >> i) & 1u) out.density[i] += w;
    }
    for (std::size_t i = 0; i + 1 < un; ++i) {
      if (((c >> i) & 3u) == 3u) out.pair11[i] += w;
    }
  };

  while (t < t_end) {
    double total = 0.0;
    if ((c & entry_bit) == 0) total += p.alpha();
    for (int i = 1; i < n; ++i) {
      if (((c >> (i - 1)) & 3u) == 2u) total += p.hop(i);
    }
    if (c & 1u) total += p.beta();

    // Exponential waiting time; 1 - u keeps the argument of log positive.
    const double dt = -std::log(1.0 - unit(rng)) / total;
    accumulate(t, t + dt);
    t += dt;
    if (t >= t_end) break;

    double pick = unit(rng) * total;
    ++out.events;
    if ((c & entry_bit) == 0) {
      if (pick < p.alpha()) {
        c |= entry_bit;
        continue;
      }
      pick -= p.alpha();
    }
    bool moved = false;
    for (int i = 1; i < n && !moved; ++i) {
      if (((c >> (i - 1)) & 3u) != 2u) continue;
      if (pick < p.hop(i)) {
        c ^= std::uint64_t{3} << (i - 1);
        moved = true;
      } else {
        pick -= p.hop(i);
      }
    }
    if (moved) continue;
    // Remaining mass belongs to the exit event (also absorbs round-off).
    if (c & 1u) {
      c &= ~std::uint64_t{1};
      if (t >= t_start) ++exits;
    }
  }

  if (cfg.t_measure > 0.0) {
    for (double& v : out.density) v /= cfg.t_measure;
    for (double& v : out.pair11) v /= cfg.t_measure;
    out.exit_flux = static_cast<double>(exits) / cfg.t_measure;
  }
  return out;
}

void mean_and_se(const std::vector<double>& xs, double& mean, double& se) {
  const auto r = static_cast<double>(xs.size());
  mean = 0.0;
  for (double v : xs) mean += v;
  mean /= r;
  se = 0.0;
  if (xs.size() < 2) return;
  double ss = 0.0;
  for (double v : xs) ss += (v - mean) * (v - mean);
  se = std::sqrt(ss / (r - 1.0) / r);
}

}  // namespace

SsaEstimate simulate(const SsaConfig& cfg) {
  const int n = cfg.params.sites();
  if (n > kMaxPatternBits) throw std::invalid_argument("simulate: at most 64 sites");
  if (cfg.n_samples < 1) throw std::invalid_argument("simulate: n_samples must be >= 1");
  if (!(cfg.t_burn >= 0.0) || !(cfg.t_measure >= 0.0)) throw std::invalid_argument("simulate: negative time");

  std::vector<ReplicaResult> results(static_cast<std::size_t>(cfg.n_samples));
  unsigned workers = cfg.threads != 0 ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(cfg.n_samples));
  std::atomic<int> next{0};
  auto work = [&] {
    for (int r; (r = next.fetch_add(1)) < cfg.n_samples;) results[static_cast<std::size_t>(r)] = run_replica(cfg, r);
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  const auto un = static_cast<std::size_t>(n);
  SsaEstimate est;
  est.replicas = cfg.n_samples;
  est.density.resize(un);
  est.density_se.resize(un);
  est.pair11.resize(un - 1);
  est.pair11_se.resize(un - 1);
  std::vector<double> column(results.size());
  auto reduce = [&](auto pick, double& mean, double& se) {
    for (std::size_t r = 0; r < results.size(); ++r) column[r] = pick(results[r]);
    mean_and_se(column, mean, se);
  };
  for (std::size_t i = 0; i < un; ++i)
    reduce([i](const ReplicaResult& rr) { return rr.density[i]; }, est.density[i], est.density_se[i]);
  for (std::size_t i = 0; i + 1 < un; ++i)
    reduce([i](const ReplicaResult& rr) { return rr.pair11[i]; }, est.pair11[i], est.pair11_se[i]);
  reduce([](const ReplicaResult& rr) { return rr.exit_flux; }, est.exit_flux, est.exit_flux_se);
  const double beta = cfg.params.beta();
  reduce([beta](const ReplicaResult& rr) { return rr.exit_flux - beta * rr.density[0]; }, est.flux_gap,
         est.flux_gap_se);
  for (const auto& rr : results) est.events += rr.events;
  return est;
}

}  // namespace tasep
