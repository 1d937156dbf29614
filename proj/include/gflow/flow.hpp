#ifndef GFLOW_FLOW_HPP
#define GFLOW_FLOW_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "gflow/polynomial.hpp"
#include "gflow/types.hpp"

namespace gflow {

/// Anything the flow dx/dt = -grad(phi) can be driven by.
///
/// value_scale(x) bounds the magnitude of the floating-point terms summed in value(x); the
/// integrator uses it to tell genuine increases of phi from evaluation roundoff.
template <typename System>
concept GradientSystem = requires(const System& s, const Vector<typename System::Scalar>& x) {
  typename System::Scalar;
  { s.dim() } -> std::convertible_to<int>;
  { s.value(x) } -> std::convertible_to<typename System::Scalar>;
  { s.gradient(x) } -> std::convertible_to<Vector<typename System::Scalar>>;
  { s.value_scale(x) } -> std::convertible_to<typename System::Scalar>;
};

/// Gradient system of an explicit homogeneous polynomial.
template <typename S = double>
class PolynomialSystem {
 public:
  using Scalar = S;

  explicit PolynomialSystem(HomogeneousPolynomial<S> phi) : phi_(std::move(phi)) {
    if (phi_.degree() < 1) throw DomainError("flow needs a polynomial of degree >= 1");
  }

  int dim() const { return phi_.n_vars(); }
  int degree() const { return phi_.degree(); }
  const HomogeneousPolynomial<S>& polynomial() const { return phi_; }

  S value(const Vector<S>& x) const { return phi_(x); }
  Vector<S> gradient(const Vector<S>& x) const { return gradient_at(phi_, x); }
  S value_scale(const Vector<S>& x) const { return eval_abs(phi_, x); }

 private:
  HomogeneousPolynomial<S> phi_;
};

template <typename S>
struct FlowState {
  S t;
  Vector<S> x;
  S phi;
  S grad_norm;
  /// Integral of ||grad phi|| from 0 to t (path length of the trajectory so far).
  S arclength;
};

enum class FlowStatus { converged, max_time, step_failure };

inline const char* to_string(FlowStatus s) {
  switch (s) {
    case FlowStatus::converged:
      return "converged";
    case FlowStatus::max_time:
      return "max_time";
    case FlowStatus::step_failure:
      return "step_failure";
  }
  return "unknown";
}

template <typename S>
struct Trajectory {
  std::vector<FlowState<S>> states;
  Vector<S> x0;
  FlowStatus status = FlowStatus::max_time;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;

  const FlowState<S>& final_state() const { return states.back(); }
};

template <typename S = double>
struct FlowOptions {
  // Embedded Runge-Kutta error control.
  S rtol = S(1e-10);
  S atol = S(1e-12);
  /// Relative slack allowed in the per-step checks ||x'|| <= ||x|| and phi(x') <= phi(x).
  S monotone_tol = S(1e-9);
  /// Zero means "choose from ||x0|| / ||grad phi(x0)||".
  S initial_step = S(0);
  S min_step = S(1e-14);
  std::size_t max_steps = 50'000'000;

  // Convergence: both thresholds must hold.
  S grad_tol = S(1e-8);
  S phi_tol = S(1e-12);
  bool stop_on_convergence = true;

  // Stored samples: t = sample_ratio^k for integer k with t >= first_sample, unless
  // sample_times is nonempty. Integration steps land exactly on sample times.
  S sample_ratio = S(1.2);
  S first_sample = S(1e-4);
  std::vector<S> sample_times;

  /// Horizon for retract().
  S max_time = S(1e8);
};

/// retract() did not reach the zero set within the time horizon or the step budget.
template <typename S>
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, FlowState<S> best, FlowStatus status)
      : std::runtime_error(what), best_(std::move(best)), status_(status) {}
  const FlowState<S>& best_state() const { return best_; }
  FlowStatus status() const { return status_; }

 private:
  FlowState<S> best_;
  FlowStatus status_;
};

namespace detail {

// Dormand-Prince 5(4) tableau.
struct DormandPrince {
  static constexpr std::array<double, 7> c{0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
  static constexpr double a[7][6] = {
      {0, 0, 0, 0, 0, 0},
      {1.0 / 5, 0, 0, 0, 0, 0},
      {3.0 / 40, 9.0 / 40, 0, 0, 0, 0},
      {44.0 / 45, -56.0 / 15, 32.0 / 9, 0, 0, 0},
      {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0, 0},
      {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656, 0},
      {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
  // Fifth-order weights (= last row of a) minus fourth-order weights.
  static constexpr std::array<double, 7> b{35.0 / 384, 0, 500.0 / 1113, 125.0 / 192,
                                           -2187.0 / 6784, 11.0 / 84, 0};
  static constexpr std::array<double, 7> e{71.0 / 57600,  0,           -71.0 / 16695, 71.0 / 1920,
                                           -17253.0 / 339200, 22.0 / 525, -1.0 / 40};
};

template <typename S>
class SampleSchedule {
 public:
  SampleSchedule(const FlowOptions<S>& opts, S t_end) : t_end_(t_end) {
    if (!opts.sample_times.empty()) {
      explicit_ = opts.sample_times;
      std::sort(explicit_.begin(), explicit_.end());
      explicit_.erase(std::remove_if(explicit_.begin(), explicit_.end(),
                                     [&](S t) { return !(t > S(0)) || t > t_end; }),
                      explicit_.end());
      explicit_.erase(std::unique(explicit_.begin(), explicit_.end()), explicit_.end());
    } else {
      if (!(opts.sample_ratio > S(1))) throw DomainError("sample_ratio must exceed 1");
      ratio_ = opts.sample_ratio;
      k_ = static_cast<long>(std::ceil(std::log(opts.first_sample) / std::log(ratio_)));
    }
  }

  /// Next sample time strictly after t (t_end when none remain).
  S next_after(S t) {
    if (ratio_ > S(0)) {
      while (true) {
        const S s = std::pow(ratio_, static_cast<S>(k_));
        if (s > t) return std::min(s, t_end_);
        ++k_;
      }
    }
    while (index_ < explicit_.size() && !(explicit_[index_] > t)) ++index_;
    return index_ < explicit_.size() ? explicit_[index_] : t_end_;
  }

 private:
  S t_end_;
  S ratio_ = S(0);
  long k_ = 0;
  std::vector<S> explicit_;
  std::size_t index_ = 0;
};

}  // namespace detail

/// Integrates dx/dt = -grad(phi)(x) from x0 over [0, t_end].
///
/// Steps are accepted only when the embedded error estimate passes and both ||x|| and phi do
/// not increase beyond monotone_tol (plus phi's evaluation roundoff); otherwise the step is
/// halved. States are stored at the sample schedule, at convergence and at the end.
template <GradientSystem System>
Trajectory<typename System::Scalar> integrate_flow(
    const System& system, const Vector<typename System::Scalar>& x0,
    typename System::Scalar t_end,
    const FlowOptions<typename System::Scalar>& opts = {}) {
  using S = typename System::Scalar;
  using DP = detail::DormandPrince;
  require_dim(x0.size(), system.dim(), "integrate_flow start vector");
  if (!(t_end > S(0))) throw DomainError("integrate_flow needs t_end > 0");

  const S eps = std::numeric_limits<S>::epsilon();
  auto roundoff = [&](const Vector<S>& x) { return S(64) * eps * system.value_scale(x); };

  Trajectory<S> traj;
  traj.x0 = x0;

  S t(0);
  Vector<S> x = x0;
  S phi = system.value(x);
  Vector<S> g = system.gradient(x);
  S gn = g.norm();
  S arclength(0);
  traj.states.push_back({t, x, phi, gn, arclength});

  auto converged = [&](S p, S n) { return p <= opts.phi_tol && n <= opts.grad_tol; };
  if ((phi == S(0) && gn == S(0)) || (opts.stop_on_convergence && converged(phi, gn))) {
    traj.status = FlowStatus::converged;
    return traj;
  }

  detail::SampleSchedule<S> schedule(opts, t_end);
  S next_sample = schedule.next_after(t);

  S h = opts.initial_step;
  if (!(h > S(0))) {
    const S xn = x.norm();
    h = std::min(S(1e-3), S(0.01) * (xn > S(0) ? xn : S(1)) / std::max(gn, eps));
  }

  std::array<Vector<S>, 7> k;
  k[0] = -g;
  Vector<S> stage(x.size());
  bool last_stored = true;

  while (t < t_end) {
    if (traj.accepted_steps + traj.rejected_steps >= opts.max_steps) {
      traj.status = FlowStatus::step_failure;
      break;
    }
    const S h_proposed = h;
    const S gap = next_sample - t;
    const bool clamped = !(h < gap);
    const S h_try = clamped ? gap : h;
    if (h_try < opts.min_step || t + h_try == t) {
      traj.status = FlowStatus::step_failure;
      break;
    }

    for (int i = 1; i < 7; ++i) {
      stage = x;
      for (int j = 0; j < i; ++j) {
        if (DP::a[i][j] != 0.0) stage += (h_try * S(DP::a[i][j])) * k[static_cast<std::size_t>(j)];
      }
      k[static_cast<std::size_t>(i)] = -system.gradient(stage);
    }
    // Row 6 of the tableau is the fifth-order solution (first-same-as-last).
    const Vector<S>& x_new = stage;
    S err(0);
    for (Eigen::Index r = 0; r < x.size(); ++r) {
      S e(0);
      for (int j = 0; j < 7; ++j) e += S(DP::e[static_cast<std::size_t>(j)]) * k[static_cast<std::size_t>(j)](r);
      const S scale = opts.atol + opts.rtol * std::max(std::abs(x(r)), std::abs(x_new(r)));
      err = std::max(err, std::abs(h_try * e) / scale);
    }

    if (!(err <= S(1))) {
      h = h_try * std::max(S(0.2), S(0.9) * std::pow(err, S(-0.2)));
      ++traj.rejected_steps;
      continue;
    }

    const S phi_new = system.value(x_new);
    const bool norm_ok = x_new.norm() <= x.norm() * (S(1) + opts.monotone_tol);
    const bool phi_ok =
        phi_new <= phi * (S(1) + opts.monotone_tol) + roundoff(x) + roundoff(x_new);
    if (!norm_ok || !phi_ok) {
      h = h_try / S(2);
      ++traj.rejected_steps;
      continue;
    }

    S speed(0);
    for (int j = 0; j < 6; ++j) {
      speed += S(DP::b[static_cast<std::size_t>(j)]) * k[static_cast<std::size_t>(j)].norm();
    }
    arclength += h_try * speed;
    t = clamped ? next_sample : t + h_try;
    x = x_new;
    phi = phi_new;
    k[0] = k[6];
    gn = k[0].norm();
    ++traj.accepted_steps;
    last_stored = false;

    if (clamped) {
      traj.states.push_back({t, x, phi, gn, arclength});
      last_stored = true;
      next_sample = schedule.next_after(t);
    }
    if (opts.stop_on_convergence && converged(phi, gn)) {
      if (!last_stored) traj.states.push_back({t, x, phi, gn, arclength});
      last_stored = true;
      traj.status = FlowStatus::converged;
      return traj;
    }

    const S grow = err > S(0) ? std::min(S(5), std::max(S(0.2), S(0.9) * std::pow(err, S(-0.2))))
                              : S(5);
    h = clamped ? std::max(h_proposed, h_try * grow) : h_try * grow;
  }

  if (!last_stored) traj.states.push_back({t, x, phi, gn, arclength});
  if (t >= t_end) traj.status = FlowStatus::max_time;
  return traj;
}

/// Flows x0 until phi <= phi_tol and ||grad phi|| <= opts.grad_tol; returns the trajectory
/// (status converged on success).
template <GradientSystem System>
Trajectory<typename System::Scalar> retract_trajectory(
    const System& system, const Vector<typename System::Scalar>& x0,
    typename System::Scalar phi_tol, FlowOptions<typename System::Scalar> opts = {}) {
  if (!(phi_tol > 0)) throw DomainError("retract needs phi_tol > 0");
  opts.phi_tol = phi_tol;
  opts.stop_on_convergence = true;
  return integrate_flow(system, x0, opts.max_time, opts);
}

/// Endpoint of the deformation retraction onto the zero set: lim F(t, x0) as t -> infinity,
/// truncated once phi <= phi_tol and ||grad phi|| <= opts.grad_tol.
///
/// Throws ConvergenceError (carrying the last state) when opts.max_time or the step budget
/// runs out first.
template <GradientSystem System>
Vector<typename System::Scalar> retract(const System& system,
                                        const Vector<typename System::Scalar>& x0,
                                        typename System::Scalar phi_tol,
                                        const FlowOptions<typename System::Scalar>& opts = {}) {
  using S = typename System::Scalar;
  const Trajectory<S> traj = retract_trajectory(system, x0, phi_tol, opts);
  if (traj.status != FlowStatus::converged) {
    throw ConvergenceError<S>(std::string("retract did not converge: ") + to_string(traj.status),
                              traj.final_state(), traj.status);
  }
  return traj.final_state().x;
}

/// U(s, x0) = F(s / (1 - s), x0) at s = 0, 1/(samples-1), ..., 1; s = 1 is the retract endpoint.
template <GradientSystem System>
std::vector<std::pair<typename System::Scalar, Vector<typename System::Scalar>>> retraction_path(
    const System& system, const Vector<typename System::Scalar>& x0, int samples,
    typename System::Scalar phi_tol, FlowOptions<typename System::Scalar> opts = {}) {
  using S = typename System::Scalar;
  if (samples < 2) throw DomainError("retraction_path needs at least 2 samples");
  require_dim(x0.size(), system.dim(), "retraction_path start vector");

  std::vector<S> s_values(static_cast<std::size_t>(samples));
  for (int j = 0; j < samples; ++j) s_values[static_cast<std::size_t>(j)] = S(j) / S(samples - 1);

  std::vector<std::pair<S, Vector<S>>> path;
  path.emplace_back(S(0), x0);

  Vector<S> last = x0;
  if (samples > 2) {
    std::vector<S> times;
    for (int j = 1; j + 1 < samples; ++j) {
      const S s = s_values[static_cast<std::size_t>(j)];
      times.push_back(s / (S(1) - s));
    }
    opts.sample_times = times;
    opts.phi_tol = phi_tol;
    const Trajectory<S> traj = integrate_flow(system, x0, times.back(), opts);
    if (traj.status == FlowStatus::step_failure) {
      throw ConvergenceError<S>("retraction_path integration failed", traj.final_state(),
                                traj.status);
    }
    // After convergence the flow is frozen at its last state.
    std::size_t cursor = 1;
    for (std::size_t j = 0; j < times.size(); ++j) {
      while (cursor < traj.states.size() && traj.states[cursor].t < times[j]) ++cursor;
      last = cursor < traj.states.size() ? traj.states[cursor].x : traj.final_state().x;
      path.emplace_back(s_values[j + 1], last);
    }
  }
  path.emplace_back(S(1), retract(system, last, phi_tol, opts));
  return path;
}

/// decay_fit: the tail has no phi values above the floor.
class AlreadyConvergedError : public DomainError {
 public:
  using DomainError::DomainError;
};

template <typename S>
struct DecayReport {
  /// Least-squares slope of log phi against log t over the tail.
  S fitted_exponent;
  S intercept;
  /// sup of t * phi(F(t, x0)) over stored states with t > 0.
  S sup_tH;
  S tail_start;
  std::size_t tail_points;
};

template <typename S>
DecayReport<S> decay_fit(const Trajectory<S>& traj, S tail_fraction, S phi_floor = S(1e-300)) {
  if (!(tail_fraction > S(0)) || tail_fraction > S(1)) {
    throw DomainError("tail_fraction must lie in (0, 1]");
  }
  std::vector<const FlowState<S>*> positive;
  S sup_tH(0);
  for (const auto& st : traj.states) {
    if (!(st.t > S(0))) continue;
    positive.push_back(&st);
    sup_tH = std::max(sup_tH, st.t * st.phi);
  }
  if (positive.size() < 10) throw DomainError("decay_fit needs at least 10 states with t > 0");
  const std::size_t tail = std::max<std::size_t>(
      2, static_cast<std::size_t>(std::ceil(tail_fraction * S(positive.size()))));
  const std::size_t start = positive.size() - std::min(tail, positive.size());

  S sx(0), sy(0), sxx(0), sxy(0);
  std::size_t count = 0;
  for (std::size_t i = start; i < positive.size(); ++i) {
    const auto* st = positive[i];
    if (!(st->phi > phi_floor)) continue;
    const S lx = std::log(st->t);
    const S ly = std::log(st->phi);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++count;
  }
  if (count < 10) {
    throw AlreadyConvergedError("decay_fit: tail phi values underflow the floor (already converged)");
  }
  const S nc = S(count);
  const S denom = nc * sxx - sx * sx;
  if (!(denom > S(0))) throw DomainError("decay_fit: degenerate time samples");
  const S slope = (nc * sxy - sx * sy) / denom;
  return {slope, (sy - slope * sx) / nc, sup_tH, positive[start]->t, count};
}

/// sup of t * phi over stored states with t in [t_lo, t_hi].
template <typename S>
S sup_t_phi(const Trajectory<S>& traj, S t_lo, S t_hi) {
  S best(0);
  for (const auto& st : traj.states) {
    if (st.t >= t_lo && st.t <= t_hi) best = std::max(best, st.t * st.phi);
  }
  return best;
}

/// Path length of the trajectory after t_from: integral of ||grad phi(F(u))|| du from t_from
/// to the last stored time. Between stored states the cumulative length is interpolated
/// linearly in t.
template <typename S>
S arclength_tail(const Trajectory<S>& traj, S t_from) {
  const auto& states = traj.states;
  if (states.size() == 1) {
    if (t_from < S(0)) throw DomainError("arclength_tail: t_from outside trajectory");
    return S(0);
  }
  if (t_from < states.front().t || t_from > states.back().t) {
    throw DomainError("arclength_tail: t_from outside trajectory");
  }
  const auto it = std::lower_bound(states.begin(), states.end(), t_from,
                                   [](const FlowState<S>& st, S t) { return st.t < t; });
  S at_from = it->arclength;
  if (it->t != t_from) {
    const auto& lo = *(it - 1);
    const S w = (t_from - lo.t) / (it->t - lo.t);
    at_from = lo.arclength + w * (it->arclength - lo.arclength);
  }
  return states.back().arclength - at_from;
}

}  // namespace gflow

#endif  // GFLOW_FLOW_HPP
