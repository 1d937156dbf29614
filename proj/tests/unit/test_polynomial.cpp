#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"

using namespace gflow;
using fixtures::x_pow;

namespace {

Vector<double> vec(std::initializer_list<double> xs) {
  Vector<double> v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

// Central differences, written without the library's gradient code.
Vector<double> numeric_gradient(const Polynomial& p, const Vector<double>& x, double h) {
  Vector<double> g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector<double> a = x, b = x;
    a(i) += h;
    b(i) -= h;
    g(i) = (p(a) - p(b)) / (2 * h);
  }
  return g;
}

}  // namespace

TEST_CASE("construction merges terms, drops zeros and sorts graded-lex") {
  const Polynomial p(2, 2, {{{1, 1}, 2.0}, {{0, 2}, 1.0}, {{1, 1}, -2.0}, {{2, 0}, 3.0}});
  REQUIRE(p.size() == 2);
  CHECK(p.terms()[0].exps == Exponents{2, 0});
  CHECK(p.terms()[1].exps == Exponents{0, 2});
  CHECK(p.coefficient({1, 1}) == 0.0);
  CHECK(p.coefficient({2, 0}) == 3.0);
}

TEST_CASE("construction rejects inhomogeneous or malformed monomials") {
  CHECK_THROWS_AS(Polynomial(2, 2, {{{1, 0}, 1.0}}), DomainError);
  CHECK_THROWS_AS(Polynomial(2, 2, {{{1, 1, 0}, 1.0}}), DimensionError);
  CHECK_THROWS_AS(Polynomial(2, 2, {{{3, -1}, 1.0}}), DomainError);
  CHECK_THROWS_AS(Polynomial(0, 2), DomainError);
}

TEST_CASE("eval") {
  CHECK(eval(squared_norm<double>(3), vec({1, 2, 3})) == doctest::Approx(14.0));
  CHECK(eval(fixtures::hyperbola_quartic(), vec({1, 0})) == doctest::Approx(1.0));
  CHECK(eval(fixtures::hyperbola_quartic(), vec({0, 0})) == 0.0);
  CHECK(eval(squared_norm<double>(3), vec({0, 0, 0})) == 0.0);
  CHECK_THROWS_AS(eval(squared_norm<double>(3), vec({1, 2})), DimensionError);
}

TEST_CASE("gradient: symbolic components") {
  const auto g = gradient(squared_norm<double>(3));
  CHECK(g.n_vars() == 3);
  CHECK(g[0].degree() == 1);
  const Vector<double> at = g(vec({1, 2, 3}));
  CHECK(at(0) == doctest::Approx(2));
  CHECK(at(1) == doctest::Approx(4));
  CHECK(at(2) == doctest::Approx(6));

  const auto gh = gradient(fixtures::hyperbola_quartic());
  const Vector<double> h = gh(vec({1, 0}));
  CHECK(h(0) == doctest::Approx(4));
  CHECK(h(1) == doctest::Approx(0));
  const Vector<double> fd = numeric_gradient(fixtures::hyperbola_quartic(), vec({1, 0}), 1e-5);
  CHECK(fd(0) == doctest::Approx(4).epsilon(1e-8));

  const auto gq = gradient(fixtures::quartic_x1());
  CHECK(gq[0] == 4.0 * x_pow(2, 0, 3));
  CHECK(gq[1].is_zero());
  CHECK(gq[1].degree() == 3);
}

TEST_CASE("gradient_at matches the symbolic gradient and central differences") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 4;
    const int m = 1 + trial % 5;
    const Polynomial p = fixtures::random_form(n, m, rng);
    const Vector<double> x = fixtures::random_vector(n, rng);
    const Vector<double> a = gradient_at(p, x);
    const Vector<double> b = gradient(p)(x);
    CHECK((a - b).norm() <= 1e-12 * (1 + b.norm()));
    const Vector<double> fd = numeric_gradient(p, x, 1e-5);
    CHECK((a - fd).norm() <= 1e-6 * (1 + a.norm()));
  }
}

TEST_CASE("euler identity") {
  CHECK(euler_residual(squared_norm<double>(3), vec({1, 2, 3})) == doctest::Approx(0).epsilon(1e-14));
  CHECK(euler_residual(fixtures::hyperbola_quartic(), vec({1, 0})) == doctest::Approx(0));
  CHECK(euler_residual(fixtures::hyperbola_quartic(), vec({0, 0})) == 0.0);
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + trial % 4;
    const int m = 1 + trial % 6;
    const Polynomial p = fixtures::random_form(n, m, rng);
    const Vector<double> x = fixtures::random_vector(n, rng);
    // Residual relative to the summed term magnitudes.
    CHECK(std::abs(euler_residual(p, x)) <= 1e-10 * (1 + m * eval_abs(p, x)));
  }
}

TEST_CASE("homogeneity of values and gradients") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> lam(-3.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 4;
    const int m = 1 + trial % 5;
    const Polynomial p = fixtures::random_form(n, m, rng);
    const Vector<double> x = fixtures::random_vector(n, rng);
    const double l = lam(rng);
    const double lm = std::pow(l, m);
    CHECK(std::abs(p(Vector<double>(l * x)) - lm * p(x)) <=
          1e-10 * std::abs(lm) * (1 + eval_abs(p, x)));
    const Vector<double> g1 = gradient_at(p, Vector<double>(l * x));
    const Vector<double> g2 = std::pow(l, m - 1) * gradient_at(p, x);
    CHECK((g1 - g2).norm() <= 1e-10 * (1 + g2.norm()) * std::max(1.0, std::abs(std::pow(l, m - 1))));
  }
}

TEST_CASE("arithmetic") {
  const Polynomial x = variable<double>(2, 0);
  const Polynomial y = variable<double>(2, 1);
  const Polynomial s = (x + y) * (x - y);
  CHECK(s == x_pow(2, 0, 2) - x_pow(2, 1, 2));
  CHECK(pow(x + y, 0).degree() == 0);
  CHECK(pow(x + y, 0).coefficient({0, 0}) == 1.0);
  const Polynomial cube = pow(x + y, 3);
  CHECK(cube.coefficient({2, 1}) == 3.0);
  CHECK(cube.coefficient({0, 3}) == 1.0);
  CHECK_THROWS_AS(x + x_pow(2, 0, 2), DomainError);
  CHECK_THROWS_AS(x + variable<double>(3, 0), DimensionError);
  CHECK_THROWS_AS(pow(x, 40), LimitError);
}

TEST_CASE("compose_linear evaluates p(M y)") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 4;
    const Polynomial p = fixtures::random_form(n, 1 + trial % 4, rng);
    const Matrix<double> m = fixtures::random_symmetric(n, rng);
    const Polynomial q = compose_linear(p, m);
    const Vector<double> y = fixtures::random_vector(n, rng);
    CHECK(std::abs(q(y) - p(Vector<double>(m * y))) <= 1e-10 * (1 + eval_abs(q, y)));
  }
}

TEST_CASE("build_variety_phi") {
  const Polynomial phi1 = build_variety_phi(std::vector<Polynomial>{variable<double>(2, 0)});
  CHECK(phi1 == x_pow(2, 0, 2));

  const Polynomial phi2 = build_variety_phi(std::vector<Polynomial>{variable<double>(2, 0), x_pow(2, 1, 2)});
  CHECK(phi2.degree() == 4);
  CHECK(phi2 == x_pow(2, 0, 4) + x_pow(2, 1, 4));

  CHECK_THROWS_AS(build_variety_phi(std::vector<Polynomial>{}), DomainError);
  CHECK_THROWS_AS(build_variety_phi(std::vector<Polynomial>{variable<double>(2, 0), variable<double>(3, 0)}),
                  DimensionError);
  // lcm(5, 7) = 35 gives degree 70.
  CHECK_THROWS_AS(build_variety_phi(std::vector<Polynomial>{x_pow(2, 0, 5), x_pow(2, 1, 7)}), LimitError);
  ExpansionLimits tight;
  tight.max_terms = 5;
  CHECK_THROWS_AS(build_variety_phi(std::vector<Polynomial>{variable<double>(3, 0) + variable<double>(3, 1) +
                                                                 variable<double>(3, 2)},
                                    tight),
                  LimitError);
}

TEST_CASE("build_variety_phi: nonnegative with the generators' zero set") {
  // Zero set: the line x_1 = x_2 in R^3 intersected with x_3 = 0.
  const Polynomial f1 = variable<double>(3, 0) - variable<double>(3, 1);
  const Polynomial f2 = variable<double>(3, 2) * variable<double>(3, 2);
  const Polynomial phi = build_variety_phi(std::vector<Polynomial>{f1, f2});
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int on_zero_set = 0;
  for (int i = 0; i < 1000; ++i) {
    Vector<double> x = fixtures::random_vector(3, rng);
    if (i % 2 == 0) {
      x(1) = x(0);
      x(2) = 0;
      ++on_zero_set;
    }
    const double p = phi(x);
    const double floor = 64 * std::numeric_limits<double>::epsilon() * eval_abs(phi, x);
    const double gen = std::max(std::abs(f1(x)), std::abs(f2(x)));
    if (i % 2 == 0) {
      CHECK(gen == 0.0);
      CHECK(std::abs(p) <= floor);
    } else {
      CHECK(p > floor);
      CHECK(gen > 1e-10);
    }
  }
  CHECK(on_zero_set == 500);
}

TEST_CASE("prune drops relatively tiny coefficients") {
  const Polynomial p(1, 2, {{{2}, 1.0}});
  const Polynomial q = p + Polynomial(1, 2, {{{2}, 1e-20}});
  CHECK(prune(q, 1e-13).coefficient({2}) == doctest::Approx(1.0));
  const Polynomial two(2, 2, {{{2, 0}, 1.0}, {{0, 2}, 1e-16}});
  CHECK(prune(two, 1e-13).size() == 1);
}
