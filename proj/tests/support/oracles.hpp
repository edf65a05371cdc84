#pragma once

// Independent reference computations and random generators shared by the
// unit and acceptance tests. Nothing here calls the code under test except
// for plain data types.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "tasep/correlations.hpp"
#include "tasep/lattice.hpp"

namespace oracle {

inline std::vector<double> random_simplex(int n, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> z(std::size_t{1} << n);
  double s = 0.0;
  for (double& v : z) s += (v = e(rng));
  for (double& v : z) v /= s;
  return z;
}

inline std::vector<double> random_probabilities(int n, std::mt19937_64& rng, double lo = 0.02, double hi = 0.98) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> p(static_cast<std::size_t>(n));
  for (double& v : p) v = u(rng);
  return p;
}

inline bool site_occupied(std::uint64_t c, int site) { return ((c >> site) & 1u) != 0; }

/// Marginal probability that sites d .. d+l-1 show pattern b, checked site
/// by site.
inline double marginal(const std::vector<double>& z, int n, int l, int d, std::uint64_t b) {
  double s = 0.0;
  for (std::uint64_t c = 0; c < (std::uint64_t{1} << n); ++c) {
    bool match = true;
    for (int j = 0; j < l && match; ++j) match = site_occupied(c, d + j) == (((b >> j) & 1u) != 0);
    if (match) s += z[c];
  }
  return s;
}

/// Product-measure probability of pattern b on sites d .. d+l-1.
inline double product_marginal(const std::vector<double>& p, int l, int d, std::uint64_t b) {
  double v = 1.0;
  for (int j = 0; j < l; ++j) {
    const double q = p[static_cast<std::size_t>(d + j)];
    v *= ((b >> j) & 1u) ? q : 1.0 - q;
  }
  return v;
}

inline std::vector<double> product_distribution(const std::vector<double>& p) {
  const int n = static_cast<int>(p.size());
  std::vector<double> z(std::size_t{1} << n);
  for (std::uint64_t c = 0; c < z.size(); ++c) z[c] = product_marginal(p, n, 0, c);
  return z;
}

/// Dense generator written out from the three transition rules, with
/// configurations handled as arrays of site occupancies.
inline Eigen::MatrixXd dense_generator(const tasep::LatticeParams& p) {
  const int n = p.sites();
  const auto states = static_cast<Eigen::Index>(1) << n;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(states, states);
  for (Eigen::Index from = 0; from < states; ++from) {
    std::vector<int> occ(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) occ[static_cast<std::size_t>(i)] = static_cast<int>((from >> i) & 1);
    auto index_of = [n](const std::vector<int>& o) {
      Eigen::Index c = 0;
      for (int i = n - 1; i >= 0; --i) c = 2 * c + o[static_cast<std::size_t>(i)];
      return c;
    };
    auto add = [&](const std::vector<int>& to, double rate) {
      a(index_of(to), from) += rate;
      a(from, from) -= rate;
    };
    if (occ[static_cast<std::size_t>(n - 1)] == 0) {
      auto to = occ;
      to[static_cast<std::size_t>(n - 1)] = 1;
      add(to, p.alpha());
    }
    for (int i = 1; i < n; ++i) {
      if (occ[static_cast<std::size_t>(i)] == 1 && occ[static_cast<std::size_t>(i - 1)] == 0) {
        auto to = occ;
        to[static_cast<std::size_t>(i)] = 0;
        to[static_cast<std::size_t>(i - 1)] = 1;
        add(to, p.hop(i));
      }
    }
    if (occ[0] == 1) {
      auto to = occ;
      to[0] = 0;
      add(to, p.beta());
    }
  }
  return a;
}

/// z(t) = exp(tA) z0 by scaling and squaring.
inline std::vector<double> exp_evolve(const tasep::LatticeParams& p, const std::vector<double>& z0, double t) {
  const Eigen::MatrixXd a = dense_generator(p);
  const Eigen::MatrixXd e = (t * a).exp();
  const Eigen::VectorXd z = e * Eigen::Map<const Eigen::VectorXd>(z0.data(), static_cast<Eigen::Index>(z0.size()));
  return {z.data(), z.data() + z.size()};
}

/// Stationary distribution from the null space of the dense generator.
inline std::vector<double> null_space_stationary(const tasep::LatticeParams& p) {
  const Eigen::MatrixXd a = dense_generator(p);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  Eigen::VectorXd k = lu.kernel().col(0);
  k /= k.sum();
  return {k.data(), k.data() + k.size()};
}

/// Full embedding as a dense N x 2^n matrix; column c is the marginal vector
/// of the point mass on configuration c.
inline Eigen::MatrixXd embedding_matrix(int n, int max_order) {
  const tasep::IndexLayout lay(n, max_order);
  const auto states = static_cast<Eigen::Index>(1) << n;
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(lay.size()), states);
  for (Eigen::Index c = 0; c < states; ++c) {
    std::vector<double> z(static_cast<std::size_t>(states), 0.0);
    z[static_cast<std::size_t>(c)] = 1.0;
    for (std::size_t i = 0; i < lay.size(); ++i) {
      const auto idx = lay.unflatten(i);
      e(static_cast<Eigen::Index>(i), c) = marginal(z, n, idx.order, idx.site, idx.pattern.bits);
    }
  }
  return e;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return a.size() == b.size() ? m : INFINITY;
}

}  // namespace oracle
