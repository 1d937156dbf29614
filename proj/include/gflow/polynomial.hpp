#ifndef GFLOW_POLYNOMIAL_HPP
#define GFLOW_POLYNOMIAL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <initializer_list>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gflow/types.hpp"

namespace gflow {

using Exponents = std::vector<int>;

/// Graded lexicographic order with the leading monomial first: larger total degree wins,
/// ties go to the lexicographically larger exponent vector (x1^m precedes x1^(m-1) x2).
struct GradedLexGreater {
  bool operator()(const Exponents& a, const Exponents& b) const {
    const int da = std::accumulate(a.begin(), a.end(), 0);
    const int db = std::accumulate(b.begin(), b.end(), 0);
    if (da != db) return da > db;
    return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
  }
};

/// Budget for symbolic expansion (products, powers, compositions).
struct ExpansionLimits {
  int max_degree = 32;
  std::size_t max_terms = 1'000'000;
};

/// Sparse real polynomial on R^n whose monomials all have the same total degree.
///
/// Terms are stored merged, without zero coefficients, in graded-lex order. The object is
/// immutable after construction, so evaluation is safe from any number of threads.
template <typename Scalar = double>
class HomogeneousPolynomial {
 public:
  struct Term {
    Exponents exps;
    Scalar coef;
  };

  /// The zero polynomial of the given shape.
  HomogeneousPolynomial(int n_vars, int degree) : n_vars_(n_vars), degree_(degree) {
    check_shape();
  }

  HomogeneousPolynomial(int n_vars, int degree, const std::vector<Term>& terms)
      : n_vars_(n_vars), degree_(degree) {
    check_shape();
    std::map<Exponents, Scalar, GradedLexGreater> merged;
    for (const Term& term : terms) {
      check_exponents(term.exps);
      merged[term.exps] += term.coef;
    }
    assign(merged);
  }

  HomogeneousPolynomial(int n_vars, int degree, std::initializer_list<Term> terms)
      : HomogeneousPolynomial(n_vars, degree, std::vector<Term>(terms)) {}

  /// Builds from an already merged accumulator; entries are validated.
  HomogeneousPolynomial(int n_vars, int degree,
                        const std::map<Exponents, Scalar, GradedLexGreater>& merged)
      : n_vars_(n_vars), degree_(degree) {
    check_shape();
    for (const auto& [exps, coef] : merged) check_exponents(exps);
    assign(merged);
  }

  int n_vars() const { return n_vars_; }
  int degree() const { return degree_; }
  const std::vector<Term>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }

  /// Coefficient of x^exps (zero when absent).
  Scalar coefficient(const Exponents& exps) const {
    const auto it = std::lower_bound(
        terms_.begin(), terms_.end(), exps,
        [](const Term& t, const Exponents& e) { return GradedLexGreater{}(t.exps, e); });
    return (it != terms_.end() && it->exps == exps) ? it->coef : Scalar(0);
  }

  template <typename Derived>
  Scalar operator()(const Eigen::MatrixBase<Derived>& x) const;

  friend bool operator==(const HomogeneousPolynomial& a, const HomogeneousPolynomial& b) {
    if (a.n_vars_ != b.n_vars_ || a.degree_ != b.degree_ || a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a.terms_[i].exps != b.terms_[i].exps || a.terms_[i].coef != b.terms_[i].coef) {
        return false;
      }
    }
    return true;
  }

 private:
  void check_shape() const {
    if (n_vars_ < 1) throw DomainError("polynomial needs at least one variable");
    if (degree_ < 0) throw DomainError("polynomial degree must be nonnegative");
  }

  void check_exponents(const Exponents& exps) const {
    require_dim(static_cast<long>(exps.size()), n_vars_, "monomial exponents");
    int sum = 0;
    for (int e : exps) {
      if (e < 0) throw DomainError("negative exponent in monomial");
      sum += e;
    }
    if (sum != degree_) {
      throw DomainError("monomial of degree " + std::to_string(sum) +
                        " in a homogeneous polynomial of degree " + std::to_string(degree_));
    }
  }

  void assign(const std::map<Exponents, Scalar, GradedLexGreater>& merged) {
    terms_.clear();
    terms_.reserve(merged.size());
    for (const auto& [exps, coef] : merged) {
      if (coef != Scalar(0)) terms_.push_back({exps, coef});
    }
  }

  int n_vars_;
  int degree_;
  std::vector<Term> terms_;
};

using Polynomial = HomogeneousPolynomial<double>;

namespace detail {

template <typename Scalar>
using TermMap = std::map<Exponents, Scalar, GradedLexGreater>;

// powers(i, k) = x_i^k for k = 0..degree.
template <typename Scalar, typename Derived>
Matrix<Scalar> power_table(const Eigen::MatrixBase<Derived>& x, int degree) {
  const Eigen::Index n = x.size();
  Matrix<Scalar> powers(n, degree + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    powers(i, 0) = Scalar(1);
    for (int k = 1; k <= degree; ++k) powers(i, k) = powers(i, k - 1) * Scalar(x(i));
  }
  return powers;
}

template <typename Scalar>
Scalar monomial_value(const Exponents& exps, const Matrix<Scalar>& powers) {
  Scalar value(1);
  for (std::size_t i = 0; i < exps.size(); ++i) {
    if (exps[i] != 0) value *= powers(static_cast<Eigen::Index>(i), exps[i]);
  }
  return value;
}

template <typename Scalar>
void check_budget(const TermMap<Scalar>& acc, const ExpansionLimits& limits) {
  if (acc.size() > limits.max_terms) {
    throw LimitError("expansion exceeds " + std::to_string(limits.max_terms) + " monomials");
  }
}

}  // namespace detail

template <typename Scalar>
template <typename Derived>
Scalar HomogeneousPolynomial<Scalar>::operator()(const Eigen::MatrixBase<Derived>& x) const {
  require_dim(x.size(), n_vars_, "polynomial evaluation");
  const Matrix<Scalar> powers = detail::power_table<Scalar>(x, degree_);
  Scalar sum(0);
  for (const Term& term : terms_) sum += term.coef * detail::monomial_value(term.exps, powers);
  return sum;
}

/// phi(x), summed in graded-lex term order.
template <typename Scalar, typename Derived>
Scalar eval(const HomogeneousPolynomial<Scalar>& p, const Eigen::MatrixBase<Derived>& x) {
  return p(x);
}

/// Sum of |c_a x^a| over the terms; scales the floating-point error of eval().
template <typename Scalar, typename Derived>
Scalar eval_abs(const HomogeneousPolynomial<Scalar>& p, const Eigen::MatrixBase<Derived>& x) {
  require_dim(x.size(), p.n_vars(), "polynomial evaluation");
  const Matrix<Scalar> powers = detail::power_table<Scalar>(x.cwiseAbs(), p.degree());
  Scalar sum(0);
  for (const auto& term : p.terms()) {
    sum += std::abs(term.coef) * detail::monomial_value(term.exps, powers);
  }
  return sum;
}

/// Symbolic gradient: component i is d(phi)/d(x_i), homogeneous of degree m-1.
template <typename Scalar = double>
class GradientField {
 public:
  explicit GradientField(std::vector<HomogeneousPolynomial<Scalar>> components)
      : components_(std::move(components)) {}

  int n_vars() const { return static_cast<int>(components_.size()); }
  const std::vector<HomogeneousPolynomial<Scalar>>& components() const { return components_; }
  const HomogeneousPolynomial<Scalar>& operator[](std::size_t i) const { return components_[i]; }

  template <typename Derived>
  Vector<Scalar> operator()(const Eigen::MatrixBase<Derived>& x) const {
    Vector<Scalar> g(n_vars());
    for (int i = 0; i < n_vars(); ++i) g(i) = components_[static_cast<std::size_t>(i)](x);
    return g;
  }

 private:
  std::vector<HomogeneousPolynomial<Scalar>> components_;
};

template <typename Scalar>
GradientField<Scalar> gradient(const HomogeneousPolynomial<Scalar>& p) {
  if (p.degree() < 1) throw DomainError("gradient needs degree >= 1");
  std::vector<detail::TermMap<Scalar>> parts(static_cast<std::size_t>(p.n_vars()));
  for (const auto& term : p.terms()) {
    for (int i = 0; i < p.n_vars(); ++i) {
      const int e = term.exps[static_cast<std::size_t>(i)];
      if (e == 0) continue;
      Exponents d = term.exps;
      d[static_cast<std::size_t>(i)] -= 1;
      parts[static_cast<std::size_t>(i)][d] += term.coef * Scalar(e);
    }
  }
  std::vector<HomogeneousPolynomial<Scalar>> components;
  components.reserve(parts.size());
  for (const auto& part : parts) components.emplace_back(p.n_vars(), p.degree() - 1, part);
  return GradientField<Scalar>(std::move(components));
}

/// Gradient value at x in one pass over the terms (no symbolic intermediate).
template <typename Scalar, typename Derived>
Vector<Scalar> gradient_at(const HomogeneousPolynomial<Scalar>& p,
                           const Eigen::MatrixBase<Derived>& x) {
  require_dim(x.size(), p.n_vars(), "gradient evaluation");
  if (p.degree() < 1) throw DomainError("gradient needs degree >= 1");
  const int n = p.n_vars();
  const Matrix<Scalar> powers = detail::power_table<Scalar>(x, p.degree());
  Vector<Scalar> g = Vector<Scalar>::Zero(n);
  std::vector<Scalar> prefix(static_cast<std::size_t>(n) + 1);
  std::vector<Scalar> suffix(static_cast<std::size_t>(n) + 1);
  for (const auto& term : p.terms()) {
    const auto& e = term.exps;
    prefix[0] = Scalar(1);
    for (int i = 0; i < n; ++i) {
      prefix[static_cast<std::size_t>(i) + 1] = prefix[static_cast<std::size_t>(i)] *
                                                 powers(i, e[static_cast<std::size_t>(i)]);
    }
    suffix[static_cast<std::size_t>(n)] = Scalar(1);
    for (int i = n - 1; i >= 0; --i) {
      suffix[static_cast<std::size_t>(i)] = suffix[static_cast<std::size_t>(i) + 1] *
                                             powers(i, e[static_cast<std::size_t>(i)]);
    }
    for (int i = 0; i < n; ++i) {
      const int ei = e[static_cast<std::size_t>(i)];
      if (ei == 0) continue;
      g(i) += term.coef * Scalar(ei) * prefix[static_cast<std::size_t>(i)] * powers(i, ei - 1) *
              suffix[static_cast<std::size_t>(i) + 1];
    }
  }
  return g;
}

/// <grad phi(x), x> - m phi(x). Zero up to roundoff for every homogeneous phi.
template <typename Scalar, typename Derived>
Scalar euler_residual(const HomogeneousPolynomial<Scalar>& p, const Eigen::MatrixBase<Derived>& x) {
  require_dim(x.size(), p.n_vars(), "euler_residual");
  if (p.degree() == 0) return Scalar(0);
  const Vector<Scalar> xv = x.template cast<Scalar>();
  return gradient_at(p, xv).dot(xv) - Scalar(p.degree()) * p(xv);
}

// ---------------------------------------------------------------------------
// Construction helpers and ring operations.

template <typename Scalar = double>
HomogeneousPolynomial<Scalar> monomial(int n_vars, const Exponents& exps, Scalar coef = Scalar(1)) {
  const int degree = std::accumulate(exps.begin(), exps.end(), 0);
  return HomogeneousPolynomial<Scalar>(n_vars, degree, {{exps, coef}});
}

/// x_i as a degree-1 polynomial (0-based index).
template <typename Scalar = double>
HomogeneousPolynomial<Scalar> variable(int n_vars, int i) {
  Exponents e(static_cast<std::size_t>(n_vars), 0);
  e.at(static_cast<std::size_t>(i)) = 1;
  return HomogeneousPolynomial<Scalar>(n_vars, 1, {{e, Scalar(1)}});
}

/// ||x||^2.
template <typename Scalar = double>
HomogeneousPolynomial<Scalar> squared_norm(int n_vars) {
  std::vector<typename HomogeneousPolynomial<Scalar>::Term> terms;
  for (int i = 0; i < n_vars; ++i) {
    Exponents e(static_cast<std::size_t>(n_vars), 0);
    e[static_cast<std::size_t>(i)] = 2;
    terms.push_back({e, Scalar(1)});
  }
  return HomogeneousPolynomial<Scalar>(n_vars, 2, terms);
}

template <typename Scalar>
HomogeneousPolynomial<Scalar> operator+(const HomogeneousPolynomial<Scalar>& a,
                                        const HomogeneousPolynomial<Scalar>& b) {
  require_dim(b.n_vars(), a.n_vars(), "polynomial sum");
  if (a.degree() != b.degree()) throw DomainError("sum of polynomials of different degree");
  detail::TermMap<Scalar> acc;
  for (const auto& t : a.terms()) acc[t.exps] += t.coef;
  for (const auto& t : b.terms()) acc[t.exps] += t.coef;
  return HomogeneousPolynomial<Scalar>(a.n_vars(), a.degree(), acc);
}

template <typename Scalar>
HomogeneousPolynomial<Scalar> operator*(Scalar s, const HomogeneousPolynomial<Scalar>& p) {
  auto terms = p.terms();
  for (auto& t : terms) t.coef *= s;
  return HomogeneousPolynomial<Scalar>(p.n_vars(), p.degree(), terms);
}

template <typename Scalar>
HomogeneousPolynomial<Scalar> operator-(const HomogeneousPolynomial<Scalar>& a,
                                        const HomogeneousPolynomial<Scalar>& b) {
  return a + Scalar(-1) * b;
}

template <typename Scalar>
HomogeneousPolynomial<Scalar> multiply(const HomogeneousPolynomial<Scalar>& a,
                                       const HomogeneousPolynomial<Scalar>& b,
                                       const ExpansionLimits& limits = {}) {
  require_dim(b.n_vars(), a.n_vars(), "polynomial product");
  const int degree = a.degree() + b.degree();
  if (degree > limits.max_degree) {
    throw LimitError("product degree " + std::to_string(degree) + " exceeds limit " +
                     std::to_string(limits.max_degree));
  }
  detail::TermMap<Scalar> acc;
  Exponents e(static_cast<std::size_t>(a.n_vars()));
  for (const auto& ta : a.terms()) {
    for (const auto& tb : b.terms()) {
      for (std::size_t i = 0; i < e.size(); ++i) e[i] = ta.exps[i] + tb.exps[i];
      acc[e] += ta.coef * tb.coef;
    }
    detail::check_budget(acc, limits);
  }
  return HomogeneousPolynomial<Scalar>(a.n_vars(), degree, acc);
}

template <typename Scalar>
HomogeneousPolynomial<Scalar> operator*(const HomogeneousPolynomial<Scalar>& a,
                                        const HomogeneousPolynomial<Scalar>& b) {
  return multiply(a, b);
}

/// p^k by repeated squaring; k = 0 gives the constant 1.
template <typename Scalar>
HomogeneousPolynomial<Scalar> pow(const HomogeneousPolynomial<Scalar>& p, int k,
                                  const ExpansionLimits& limits = {}) {
  if (k < 0) throw DomainError("negative polynomial power");
  if (static_cast<long>(p.degree()) * k > limits.max_degree) {
    throw LimitError("power degree " + std::to_string(p.degree() * k) + " exceeds limit " +
                     std::to_string(limits.max_degree));
  }
  using Term = typename HomogeneousPolynomial<Scalar>::Term;
  HomogeneousPolynomial<Scalar> result(
      p.n_vars(), 0,
      std::vector<Term>{Term{Exponents(static_cast<std::size_t>(p.n_vars()), 0), Scalar(1)}});
  HomogeneousPolynomial<Scalar> base = p;
  while (k > 0) {
    if (k & 1) result = multiply(result, base, limits);
    k >>= 1;
    if (k > 0) base = multiply(base, base, limits);
  }
  return result;
}

/// The polynomial y -> p(M y) for an n x k matrix M (n = p.n_vars()).
template <typename Scalar, typename Derived>
HomogeneousPolynomial<Scalar> compose_linear(const HomogeneousPolynomial<Scalar>& p,
                                             const Eigen::MatrixBase<Derived>& M,
                                             const ExpansionLimits& limits = {}) {
  require_dim(M.rows(), p.n_vars(), "compose_linear rows");
  const int k = static_cast<int>(M.cols());
  const std::size_t n = static_cast<std::size_t>(p.n_vars());

  // powers[i][e] = (row i of M . y)^e, built lazily.
  std::vector<std::vector<HomogeneousPolynomial<Scalar>>> powers(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<typename HomogeneousPolynomial<Scalar>::Term> lin;
    for (int j = 0; j < k; ++j) {
      Exponents e(static_cast<std::size_t>(k), 0);
      e[static_cast<std::size_t>(j)] = 1;
      lin.push_back({e, Scalar(M(static_cast<Eigen::Index>(i), j))});
    }
    powers[i].emplace_back(k, 0,
                           std::vector<typename HomogeneousPolynomial<Scalar>::Term>{
                               {Exponents(static_cast<std::size_t>(k), 0), Scalar(1)}});
    powers[i].emplace_back(k, 1, lin);
  }
  auto power_of = [&](std::size_t i, int e) -> const HomogeneousPolynomial<Scalar>& {
    while (static_cast<int>(powers[i].size()) <= e) {
      powers[i].push_back(multiply(powers[i].back(), powers[i][1], limits));
    }
    return powers[i][static_cast<std::size_t>(e)];
  };

  detail::TermMap<Scalar> acc;
  for (const auto& term : p.terms()) {
    HomogeneousPolynomial<Scalar> prod(
        k, 0, {{Exponents(static_cast<std::size_t>(k), 0), term.coef}});
    for (std::size_t i = 0; i < n; ++i) {
      if (term.exps[i] > 0) prod = multiply(prod, power_of(i, term.exps[i]), limits);
    }
    for (const auto& t : prod.terms()) acc[t.exps] += t.coef;
    detail::check_budget(acc, limits);
  }
  return HomogeneousPolynomial<Scalar>(k, p.degree(), acc);
}

/// Drops coefficients with |c| <= rel_tol * max|c|.
template <typename Scalar>
HomogeneousPolynomial<Scalar> prune(const HomogeneousPolynomial<Scalar>& p, Scalar rel_tol) {
  Scalar max_abs(0);
  for (const auto& t : p.terms()) max_abs = std::max(max_abs, std::abs(t.coef));
  std::vector<typename HomogeneousPolynomial<Scalar>::Term> kept;
  for (const auto& t : p.terms()) {
    if (std::abs(t.coef) > rel_tol * max_abs) kept.push_back(t);
  }
  return HomogeneousPolynomial<Scalar>(p.n_vars(), p.degree(), kept);
}

/// Nonnegative polynomial whose zero set is the common zero set of the generators:
///   phi = sum_i (f_i^(r / r_i))^2,  r = lcm(deg f_i),  deg phi = 2r.
template <typename Scalar>
HomogeneousPolynomial<Scalar> build_variety_phi(
    std::span<const HomogeneousPolynomial<Scalar>> generators,
    const ExpansionLimits& limits = {}) {
  if (generators.empty()) throw DomainError("build_variety_phi needs at least one generator");
  const int n = generators.front().n_vars();
  long r = 1;
  for (const auto& f : generators) {
    require_dim(f.n_vars(), n, "variety generator");
    if (f.degree() < 1) throw DomainError("variety generators must have degree >= 1");
    r = std::lcm(r, static_cast<long>(f.degree()));
    if (2 * r > limits.max_degree) {
      throw LimitError("variety polynomial degree " + std::to_string(2 * r) + " exceeds limit " +
                       std::to_string(limits.max_degree));
    }
  }
  const int degree = static_cast<int>(2 * r);
  HomogeneousPolynomial<Scalar> phi(n, degree);
  for (const auto& f : generators) {
    const auto term = pow(f, static_cast<int>(2 * r / f.degree()), limits);
    phi = phi + term;
    if (phi.size() > limits.max_terms) {
      throw LimitError("variety polynomial exceeds " + std::to_string(limits.max_terms) +
                       " monomials");
    }
  }
  return phi;
}

template <typename Scalar>
HomogeneousPolynomial<Scalar> build_variety_phi(
    const std::vector<HomogeneousPolynomial<Scalar>>& generators,
    const ExpansionLimits& limits = {}) {
  return build_variety_phi(std::span<const HomogeneousPolynomial<Scalar>>(generators), limits);
}

}  // namespace gflow

#endif  // GFLOW_POLYNOMIAL_HPP
