#pragma once

// Embedded Runge-Kutta 5(4) pair of Dormand and Prince with FSAL and a
// standard PI-free step controller. Works on std::vector<double> states.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tasep {

struct OdeTolerances {
  double rtol = 1e-8;
  double atol = 1e-10;
  std::size_t max_steps = 5'000'000;
  /// Initial step; non-positive selects one automatically.
  double initial_step = 0.0;
};

/// Thrown when the step size collapses or the step budget runs out. Carries
/// the last accepted state.
class IntegrationError : public std::runtime_error {
public:
  IntegrationError(const std::string& what, double t, std::vector<double> state)
      : std::runtime_error(what), time_(t), state_(std::move(state)) {}
  double time() const noexcept { return time_; }
  const std::vector<double>& last_state() const noexcept { return state_; }

private:
  double time_;
  std::vector<double> state_;
};

namespace detail {

struct Dopri5Tableau {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  // Difference between the 5th and embedded 4th order weights.
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
};

}  // namespace detail

/// Integrates x' = rhs(x) from t0 to t1 in place. `rhs(x, dx)` writes the
/// derivative; `observer(t, x)` runs after every accepted step (and once at
/// t0). Returns the number of accepted steps.
template <class Rhs, class Observer>
std::size_t integrate_dopri5(Rhs&& rhs, std::vector<double>& x, double t0, double t1,
                             const OdeTolerances& tol, Observer&& observer) {
  using T = detail::Dopri5Tableau;
  const std::size_t dim = x.size();
  observer(t0, x);
  if (!(t1 > t0) || dim == 0) return 0;

  std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim);
  std::vector<double> stage(dim), x_new(dim);

  auto error_norm = [&](const std::vector<double>& a, const std::vector<double>& b,
                        const std::vector<double>& err) {
    double acc = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      const double sc = tol.atol + tol.rtol * std::max(std::abs(a[i]), std::abs(b[i]));
      const double r = err[i] / sc;
      acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(dim));
  };

  rhs(x, k1);

  double h = tol.initial_step;
  if (!(h > 0.0)) {
    // Hairer-Norsett-Wanner starting step heuristic.
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      const double sc = tol.atol + tol.rtol * std::abs(x[i]);
      d0 += (x[i] / sc) * (x[i] / sc);
      d1 += (k1[i] / sc) * (k1[i] / sc);
    }
    d0 = std::sqrt(d0 / dim);
    d1 = std::sqrt(d1 / dim);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, t1 - t0);
    for (std::size_t i = 0; i < dim; ++i) stage[i] = x[i] + h0 * k1[i];
    rhs(stage, k2);
    double d2 = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      const double sc = tol.atol + tol.rtol * std::abs(x[i]);
      const double r = (k2[i] - k1[i]) / sc;
      d2 += r * r;
    }
    d2 = std::sqrt(d2 / dim) / h0;
    const double dmax = std::max(d1, d2);
    const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 1.0 / 5.0);
    h = std::min(100.0 * h0, h1);
    // Very tight absolute tolerances make the heuristic propose steps below
    // the underflow floor; the controller grows the step from there.
    h = std::max(h, 1e-12 * std::max(1.0, std::abs(t0)));
  }
  h = std::min(h, t1 - t0);

  double t = t0;
  std::size_t accepted = 0;
  std::size_t attempts = 0;
  while (t < t1) {
    if (++attempts > tol.max_steps)
      throw IntegrationError("ODE step budget exhausted at t=" + std::to_string(t), t, x);
    const double h_floor = 1e-14 * std::max(1.0, std::abs(t));
    if (h < h_floor)
      throw IntegrationError("ODE step size underflow at t=" + std::to_string(t), t, x);
    const bool last = t + h >= t1;
    if (last) h = t1 - t;

    for (std::size_t i = 0; i < dim; ++i) stage[i] = x[i] + h * T::a21 * k1[i];
    rhs(stage, k2);
    for (std::size_t i = 0; i < dim; ++i) stage[i] = x[i] + h * (T::a31 * k1[i] + T::a32 * k2[i]);
    rhs(stage, k3);
    for (std::size_t i = 0; i < dim; ++i)
      stage[i] = x[i] + h * (T::a41 * k1[i] + T::a42 * k2[i] + T::a43 * k3[i]);
    rhs(stage, k4);
    for (std::size_t i = 0; i < dim; ++i)
      stage[i] = x[i] + h * (T::a51 * k1[i] + T::a52 * k2[i] + T::a53 * k3[i] + T::a54 * k4[i]);
    rhs(stage, k5);
    for (std::size_t i = 0; i < dim; ++i)
      stage[i] = x[i] + h * (T::a61 * k1[i] + T::a62 * k2[i] + T::a63 * k3[i] + T::a64 * k4[i] +
                             T::a65 * k5[i]);
    rhs(stage, k6);
    for (std::size_t i = 0; i < dim; ++i)
      x_new[i] = x[i] + h * (T::b1 * k1[i] + T::b3 * k3[i] + T::b4 * k4[i] + T::b5 * k5[i] +
                             T::b6 * k6[i]);
    rhs(x_new, k7);
    for (std::size_t i = 0; i < dim; ++i)
      stage[i] = h * (T::e1 * k1[i] + T::e3 * k3[i] + T::e4 * k4[i] + T::e5 * k5[i] + T::e6 * k6[i] +
                      T::e7 * k7[i]);
    const double err = error_norm(x, x_new, stage);

    if (!std::isfinite(err))
      throw IntegrationError("non-finite derivative at t=" + std::to_string(t), t, x);

    if (err <= 1.0) {
      t = last ? t1 : t + h;
      x.swap(x_new);
      k1.swap(k7);
      ++accepted;
      observer(t, x);
      const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      h *= fac;
    } else {
      h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 1.0);
    }
  }
  return accepted;
}

template <class Rhs>
std::size_t integrate_dopri5(Rhs&& rhs, std::vector<double>& x, double t0, double t1,
                             const OdeTolerances& tol) {
  return integrate_dopri5(std::forward<Rhs>(rhs), x, t0, t1, tol, [](double, const std::vector<double>&) {});
}

}  // namespace tasep
