#ifndef GFLOW_TESTS_FIXTURES_HPP
#define GFLOW_TESTS_FIXTURES_HPP

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "gflow/gflow.hpp"

namespace fixtures {

using gflow::Matrix;
using gflow::Polynomial;
using gflow::Vector;

inline Polynomial x_pow(int n, int i, int k) {
  gflow::Exponents e(static_cast<std::size_t>(n), 0);
  e[static_cast<std::size_t>(i)] = k;
  return gflow::monomial<double>(n, e);
}

/// (x_1^2 - x_2^2)^2 * scale on R^2.
inline Polynomial hyperbola_quartic(double scale = 1.0) {
  const Polynomial d = x_pow(2, 0, 2) - x_pow(2, 1, 2);
  return scale * (d * d);
}

inline Polynomial quartic_x1(int n = 2) { return x_pow(n, 0, 4); }

inline Polynomial random_form(int n, int degree, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Polynomial p(n, degree);
  // Sum of products of random linear forms.
  for (int r = 0; r < 3; ++r) {
    Polynomial term = gflow::monomial<double>(n, gflow::Exponents(static_cast<std::size_t>(n), 0));
    for (int d = 0; d < degree; ++d) {
      Polynomial lin(n, 1);
      for (int i = 0; i < n; ++i) lin = lin + normal(rng) * gflow::variable<double>(n, i);
      term = term * lin;
    }
    p = p + term;
  }
  return p;
}

/// Nonnegative form: sum of squares of random forms of degree half_degree.
inline Polynomial random_sos(int n, int half_degree, int squares, std::mt19937_64& rng) {
  Polynomial p(n, 2 * half_degree);
  for (int s = 0; s < squares; ++s) {
    const Polynomial f = random_form(n, half_degree, rng);
    p = p + f * f;
  }
  return p;
}

/// Diagonal matrix from entries.
inline Matrix<double> diag(std::initializer_list<double> entries) {
  Vector<double> d(static_cast<Eigen::Index>(entries.size()));
  Eigen::Index i = 0;
  for (double e : entries) d(i++) = e;
  return d.asDiagonal();
}

inline Matrix<double> random_symmetric(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix<double> a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = normal(rng);
  return (a + a.transpose()) / 2;
}

inline Matrix<double> random_orthogonal(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix<double> a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = normal(rng);
  Eigen::HouseholderQR<Matrix<double>> qr(a);
  return qr.householderQ();
}

inline Vector<double> random_vector(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector<double> v(n);
  for (int i = 0; i < n; ++i) v(i) = scale * normal(rng);
  return v;
}

/// Uniform in the unit ball.
inline Vector<double> random_in_ball(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector<double> v = random_vector(n, rng);
  return v * (std::pow(u(rng), 1.0 / n) / v.norm());
}

/// Rotation generator in the (i, j) plane.
inline Matrix<double> rotation_generator(int n, int i, int j) {
  Matrix<double> m = Matrix<double>::Zero(n, n);
  m(i, j) = -1;
  m(j, i) = 1;
  return m;
}

/// Diagonal sign matrices on R^n.
inline std::vector<Matrix<double>> sign_group(int n) {
  std::vector<Matrix<double>> out;
  for (int mask = 0; mask < (1 << n); ++mask) {
    Vector<double> d(n);
    for (int i = 0; i < n; ++i) d(i) = (mask >> i) & 1 ? -1.0 : 1.0;
    out.push_back(d.asDiagonal());
  }
  return out;
}

/// The diagonal torus {diag(e^t, e^-t)} on R^2.
inline gflow::SelfAdjointBasis<double> torus2() {
  return gflow::orthonormalize_basis<double>({diag({1, -1})});
}

/// Group fixtures: orthonormal bases of several self-adjoint families.
inline std::vector<gflow::SelfAdjointBasis<double>> group_fixtures() {
  std::vector<gflow::SelfAdjointBasis<double>> out;
  out.push_back(torus2());
  out.push_back(gflow::orthonormalize_basis<double>({diag({1, -1, 0}), diag({0, 1, -1})}));
  out.push_back(gflow::orthonormalize_basis<double>({diag({1, 1}), diag({1, -1})}));
  // Traceless symmetric 2x2 matrices (the p-part of sl(2)).
  Matrix<double> off(2, 2);
  off << 0, 1, 1, 0;
  out.push_back(gflow::orthonormalize_basis<double>({diag({1, -1}), off}));
  // A generic family on R^4.
  std::mt19937_64 rng(77);
  out.push_back(gflow::orthonormalize_basis<double>(
      {random_symmetric(4, rng), random_symmetric(4, rng), random_symmetric(4, rng)}));
  return out;
}

/// Random commuting diagonal family of k matrices on R^n.
inline std::vector<Matrix<double>> random_diagonal_family(int n, int k, std::mt19937_64& rng) {
  std::vector<Matrix<double>> out;
  for (int i = 0; i < k; ++i) out.push_back(random_vector(n, rng).asDiagonal());
  return out;
}

}  // namespace fixtures

#endif  // GFLOW_TESTS_FIXTURES_HPP
