#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"

using namespace gflow;

namespace {

Vector<double> vec(std::initializer_list<double> xs) {
  Vector<double> v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

const FlowState<double>& state_at(const Trajectory<double>& traj, double t) {
  for (const auto& st : traj.states) {
    if (st.t == t) return st;
  }
  FAIL("time not sampled");
  return traj.states.front();
}

}  // namespace

TEST_CASE("linear flow of the squared norm") {
  const PolynomialSystem<double> sys(squared_norm<double>(2));
  const auto traj = integrate_flow(sys, vec({1, 0}), 1.0);
  CHECK(traj.status == FlowStatus::max_time);
  const auto& last = traj.final_state();
  CHECK(last.t == 1.0);
  CHECK(std::abs(last.x(0) - std::exp(-2.0)) <= 1e-6);
  CHECK(std::abs(last.x(1)) <= 1e-6);
  CHECK(last.phi == doctest::Approx(std::exp(-4.0)).epsilon(1e-8));
  CHECK(last.grad_norm == doctest::Approx(2 * std::exp(-2.0)).epsilon(1e-8));
}

TEST_CASE("separable quartic reduction") {
  const PolynomialSystem<double> sys(fixtures::hyperbola_quartic(0.5));
  FlowOptions<double> opts;
  opts.sample_times = {0.5, 1.0, 2.0};
  const auto traj = integrate_flow(sys, vec({1, 0}), 2.0, opts);
  for (double t : opts.sample_times) {
    const auto& st = state_at(traj, t);
    CHECK(std::abs(st.x(0) - 1 / std::sqrt(1 + 4 * t)) <= 1e-6);
    CHECK(st.x(1) == 0.0);
  }
  CHECK(traj.final_state().x(0) == doctest::Approx(1.0 / 3).epsilon(1e-7));
}

TEST_CASE("start on the zero set is a fixed point") {
  const PolynomialSystem<double> sys(fixtures::hyperbola_quartic(0.5));
  const Vector<double> x0 = vec({0.7, -0.7});
  const auto traj = integrate_flow(sys, x0, 100.0);
  CHECK(traj.status == FlowStatus::converged);
  REQUIRE(traj.states.size() == 1);
  CHECK(traj.final_state().t == 0.0);
  CHECK(traj.final_state().x == x0);
  CHECK(retract(sys, x0, 1e-10) == x0);
  const Vector<double> zero = Vector<double>::Zero(2);
  CHECK(retract(sys, zero, 1e-10) == zero);
}

TEST_CASE("integrate_flow argument checks") {
  const PolynomialSystem<double> sys(squared_norm<double>(2));
  CHECK_THROWS_AS(integrate_flow(sys, vec({1, 0, 0}), 1.0), DimensionError);
  CHECK_THROWS_AS(integrate_flow(sys, vec({1, 0}), 0.0), DomainError);
  CHECK_THROWS_AS(integrate_flow(sys, vec({1, 0}), -1.0), DomainError);
}

TEST_CASE("step failure is reported with a partial trajectory") {
  const PolynomialSystem<double> sys(fixtures::quartic_x1());
  FlowOptions<double> opts;
  opts.initial_step = 1.0;
  opts.min_step = 0.5;
  const auto traj = integrate_flow(sys, vec({10, 0}), 10.0, opts);
  CHECK(traj.status == FlowStatus::step_failure);
  CHECK_FALSE(traj.states.empty());
}

TEST_CASE("retract") {
  const PolynomialSystem<double> norm(squared_norm<double>(3));
  std::mt19937_64 rng(11);
  for (int i = 0; i < 5; ++i) {
    const Vector<double> x0 = fixtures::random_vector(3, rng);
    const Vector<double> y = retract(norm, x0, 1e-10);
    CHECK(y.norm() <= std::sqrt(1e-10));
  }
  const PolynomialSystem<double> quartic(fixtures::hyperbola_quartic(0.5));
  const Vector<double> y = retract(quartic, vec({1, 0}), 1e-10);
  CHECK(y.norm() <= 1e-2);
  CHECK(quartic.value(y) <= 1e-10);
  CHECK_THROWS_AS(retract(quartic, vec({1, 0}), 0.0), DomainError);
}

TEST_CASE("retract reports non-convergence with the best state") {
  const PolynomialSystem<double> quartic(fixtures::hyperbola_quartic(0.5));
  FlowOptions<double> opts;
  opts.max_time = 1.0;
  try {
    (void)retract(quartic, vec({1, 0}), 1e-10, opts);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError<double>& e) {
    CHECK(e.status() == FlowStatus::max_time);
    CHECK(e.best_state().t == 1.0);
    CHECK(e.best_state().x(0) == doctest::Approx(1 / std::sqrt(5.0)).epsilon(1e-7));
  }
}

TEST_CASE("retract endpoints lie in the zero set with both thresholds") {
  std::mt19937_64 rng(12);
  const Polynomial phi = build_variety_phi(std::vector<Polynomial>{variable<double>(3, 0) - variable<double>(3, 1)});
  const PolynomialSystem<double> sys(phi);
  FlowOptions<double> opts;
  opts.grad_tol = 1e-8;
  for (int i = 0; i < 10; ++i) {
    const Vector<double> x0 = fixtures::random_vector(3, rng);
    const auto traj = retract_trajectory(sys, x0, 1e-12, opts);
    REQUIRE(traj.status == FlowStatus::converged);
    CHECK(traj.final_state().phi <= 1e-12);
    CHECK(traj.final_state().grad_norm <= 1e-8);
    CHECK(traj.final_state().x.norm() <= x0.norm());
    // For this quadratic the limit is the orthogonal projection onto the plane x_1 = x_2.
    Vector<double> proj = x0;
    proj(0) = proj(1) = (x0(0) + x0(1)) / 2;
    CHECK((traj.final_state().x - proj).norm() <= 1e-6);
  }
}

TEST_CASE("retraction_path") {
  const PolynomialSystem<double> sys(squared_norm<double>(2));
  const auto path = retraction_path(sys, vec({1, 0}), 3, 1e-12);
  REQUIRE(path.size() == 3);
  CHECK(path[0].first == 0.0);
  CHECK(path[0].second == vec({1, 0}));
  CHECK(path[1].first == 0.5);
  CHECK(std::abs(path[1].second(0) - std::exp(-2.0)) <= 1e-6);
  CHECK(path[2].first == 1.0);
  CHECK(path[2].second.norm() <= 1e-6);
  CHECK_THROWS_AS(retraction_path(sys, vec({1, 0}), 1, 1e-12), DomainError);

  const auto two = retraction_path(sys, vec({1, 0}), 2, 1e-12);
  REQUIRE(two.size() == 2);
  CHECK((two[1].second - retract(sys, vec({1, 0}), 1e-12)).norm() <= 1e-12);

  const auto fine = retraction_path(sys, vec({0.3, 0.4}), 11, 1e-12);
  REQUIRE(fine.size() == 11);
  for (std::size_t j = 1; j < fine.size(); ++j) CHECK(fine[j].second.norm() <= fine[j - 1].second.norm());
  for (std::size_t j = 1; j + 1 < fine.size(); ++j) {
    const double s = fine[j].first;
    const double t = s / (1 - s);
    CHECK((fine[j].second - std::exp(-2 * t) * vec({0.3, 0.4})).norm() <= 1e-6);
  }
}

TEST_CASE("decay_fit on the quartic reduction") {
  const PolynomialSystem<double> sys(fixtures::hyperbola_quartic(0.5));
  const auto traj = integrate_flow(sys, vec({1, 0}), 1e4);
  const auto d = decay_fit(traj, 0.5);
  CHECK(d.fitted_exponent == doctest::Approx(-2).epsilon(0.025));
  // Over the sampled states t H(t) peaks at t = 1/4 with value 1/32.
  CHECK(d.sup_tH == doctest::Approx(1.0 / 32).epsilon(0.05));
  CHECK(d.tail_points >= 10);
  CHECK(sup_t_phi(traj, 1.0, 1e4) == doctest::Approx(1.0 / 50).epsilon(1e-6));
}

TEST_CASE("decay_fit errors") {
  const PolynomialSystem<double> sys(fixtures::hyperbola_quartic(0.5));
  const auto fixed = integrate_flow(sys, vec({1, 1}), 10.0);
  CHECK_THROWS_AS(decay_fit(fixed, 0.5), DomainError);

  Trajectory<double> zero;
  for (int k = 0; k < 20; ++k) zero.states.push_back({double(k), vec({0, 0}), 0.0, 0.0, 0.0});
  CHECK_THROWS_AS(decay_fit(zero, 0.5), AlreadyConvergedError);

  const auto traj = integrate_flow(sys, vec({1, 0}), 100.0);
  CHECK_THROWS_AS(decay_fit(traj, 0.0), DomainError);
  CHECK_THROWS_AS(decay_fit(traj, 1.5), DomainError);
}

TEST_CASE("arclength_tail") {
  const PolynomialSystem<double> sys(squared_norm<double>(2));
  FlowOptions<double> opts;
  opts.stop_on_convergence = false;
  const auto traj = integrate_flow(sys, vec({1, 0}), 40.0, opts);
  CHECK(arclength_tail(traj, 1.0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-6));
  CHECK(traj.final_state().arclength == doctest::Approx(1.0).epsilon(1e-8));

  const PolynomialSystem<double> quartic(fixtures::hyperbola_quartic(0.5));
  const auto fixed = integrate_flow(quartic, vec({1, 1}), 10.0);
  CHECK(arclength_tail(fixed, 0.0) == 0.0);

  std::mt19937_64 rng(13);
  const PolynomialSystem<double> sos(fixtures::random_sos(3, 2, 2, rng));
  const auto curve = integrate_flow(sos, fixtures::random_vector(3, rng), 50.0);
  for (const auto& st : curve.states) {
    if (st.t <= 0) continue;
    CHECK(arclength_tail(curve, st.t) >= (curve.final_state().x - st.x).norm() * (1 - 1e-9));
  }
  CHECK_THROWS_AS(arclength_tail(curve, -1.0), DomainError);
  CHECK_THROWS_AS(arclength_tail(curve, 1e9), DomainError);
}

TEST_CASE("property: norm and phi are nonincreasing, dissipation matches") {
  std::mt19937_64 rng(14);
  for (int f = 0; f < 8; ++f) {
    const int n = 2 + f % 3;
    const PolynomialSystem<double> sys(fixtures::random_sos(n, 1 + f % 2, 2, rng));
    for (int s = 0; s < 4; ++s) {
      const Vector<double> x0 = fixtures::random_vector(n, rng);
      const auto traj = integrate_flow(sys, x0, 100.0);
      REQUIRE(traj.status != FlowStatus::step_failure);
      for (std::size_t i = 1; i < traj.states.size(); ++i) {
        const auto& a = traj.states[i - 1];
        const auto& b = traj.states[i];
        CHECK(b.t > a.t);
        CHECK(b.x.norm() <= a.x.norm() * (1 + 1e-9));
        const double floor = 64 * std::numeric_limits<double>::epsilon() *
                             (sys.value_scale(a.x) + sys.value_scale(b.x));
        CHECK(b.phi <= a.phi * (1 + 1e-9) + floor);
        CHECK(b.phi >= -floor);
      }
      // Energy identity dH/dt = -||grad phi||^2 by differences over short windows.
      FlowOptions<double> pairs;
      pairs.stop_on_convergence = false;
      for (double t : {0.01, 0.1, 1.0, 10.0}) {
        pairs.sample_times.push_back(t);
        pairs.sample_times.push_back(t * (1 + 1e-6));
      }
      const auto fine = integrate_flow(sys, x0, 10.0 * (1 + 1e-6), pairs);
      REQUIRE(fine.states.size() == 9);
      for (std::size_t i = 1; i < fine.states.size(); i += 2) {
        const auto& a = fine.states[i];
        const auto& b = fine.states[i + 1];
        const double rate = (b.phi - a.phi) / (b.t - a.t);
        const double g2 = (a.grad_norm * a.grad_norm + b.grad_norm * b.grad_norm) / 2;
        CHECK(std::abs(rate + g2) <= 1e-4 * (1 + g2));
      }
    }
  }
}

TEST_CASE("property: sup t H(t) is finite and grows with the start norm") {
  const PolynomialSystem<double> sys(fixtures::hyperbola_quartic(0.5));
  double prev = 0;
  for (double r : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    const auto traj = integrate_flow(sys, vec({r, 0.1 * r}), 1e3);
    const double sup = decay_fit(traj, 0.5).sup_tH;
    CHECK(std::isfinite(sup));
    CHECK(sup >= prev);
    prev = sup;
  }
}
