#ifndef GFLOW_GROUP_HPP
#define GFLOW_GROUP_HPP

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "gflow/flow.hpp"
#include "gflow/polynomial.hpp"
#include "gflow/types.hpp"

namespace gflow {

/// Trace inner product <A, B> = tr(A B^T).
template <typename DerivedA, typename DerivedB>
auto trace_inner(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  return a.cwiseProduct(b).sum();
}

/// Orthonormal (trace form) basis X_1..X_k of the symmetric part p of a matrix Lie algebra,
/// optionally with an orthonormal basis of the antisymmetric part k so that projections onto
/// the whole algebra g = p + k are available.
template <typename S = double>
class SelfAdjointBasis {
 public:
  SelfAdjointBasis(int dim, std::vector<Matrix<S>> mats, std::vector<Matrix<S>> skew = {},
                   bool complexified = false)
      : dim_(dim), mats_(std::move(mats)), skew_(std::move(skew)), complexified_(complexified) {
    if (dim_ < 1) throw DomainError("basis dimension must be positive");
    for (const auto& x : mats_) {
      require_dim(x.rows(), dim_, "basis matrix rows");
      require_dim(x.cols(), dim_, "basis matrix cols");
      if ((x - x.transpose()).norm() > S(1e-12)) throw DomainError("basis matrix is not symmetric");
    }
    for (const auto& x : skew_) {
      require_dim(x.rows(), dim_, "skew basis matrix rows");
      require_dim(x.cols(), dim_, "skew basis matrix cols");
      if ((x + x.transpose()).norm() > S(1e-12)) throw DomainError("skew basis matrix is not antisymmetric");
    }
    check_orthonormal(mats_);
    check_orthonormal(skew_);
  }

  int dim() const { return dim_; }
  std::size_t size() const { return mats_.size(); }
  const std::vector<Matrix<S>>& mats() const { return mats_; }
  const std::vector<Matrix<S>>& skew() const { return skew_; }
  const Matrix<S>& operator[](std::size_t i) const { return mats_[i]; }
  /// Whether this is the realification of a complex action (R^2n = R^n + iR^n).
  bool complexified() const { return complexified_; }

  /// max ||[X_i, X_j]||_F over the symmetric basis.
  S commutator_norm() const {
    S worst(0);
    for (std::size_t i = 0; i < mats_.size(); ++i) {
      for (std::size_t j = i + 1; j < mats_.size(); ++j) {
        worst = std::max(worst, (mats_[i] * mats_[j] - mats_[j] * mats_[i]).norm());
      }
    }
    return worst;
  }
  bool commuting(S tol = S(1e-10)) const { return commutator_norm() <= tol; }

 private:
  static void check_orthonormal(const std::vector<Matrix<S>>& m) {
    for (std::size_t i = 0; i < m.size(); ++i) {
      for (std::size_t j = 0; j < m.size(); ++j) {
        const S want = i == j ? S(1) : S(0);
        if (std::abs(trace_inner(m[i], m[j]) - want) > S(1e-10)) {
          throw DomainError("basis is not orthonormal in the trace inner product");
        }
      }
    }
  }

  int dim_;
  std::vector<Matrix<S>> mats_;
  std::vector<Matrix<S>> skew_;
  bool complexified_;
};

namespace detail {

// Modified Gram-Schmidt (two passes) in the trace inner product. Elements whose residual
// falls below rel_tol times the largest input norm are dropped.
template <typename S>
std::vector<Matrix<S>> trace_gram_schmidt(const std::vector<Matrix<S>>& raw, S rel_tol) {
  S max_norm(0);
  for (const auto& x : raw) max_norm = std::max(max_norm, x.norm());
  std::vector<Matrix<S>> out;
  if (max_norm == S(0)) return out;
  for (const auto& x : raw) {
    Matrix<S> r = x;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& q : out) r -= trace_inner(r, q) * q;
    }
    const S norm = r.norm();
    if (norm > rel_tol * max_norm) out.push_back(r / norm);
  }
  return out;
}

}  // namespace detail

/// Gram-Schmidt in the trace inner product. Dependent inputs are dropped; an all-zero input
/// is an error.
template <typename S>
SelfAdjointBasis<S> orthonormalize_basis(const std::vector<Matrix<S>>& raw, S rel_tol = S(1e-12)) {
  if (raw.empty()) throw DomainError("orthonormalize_basis: empty input");
  const int n = static_cast<int>(raw.front().rows());
  for (const auto& x : raw) {
    require_dim(x.rows(), n, "orthonormalize_basis rows");
    require_dim(x.cols(), n, "orthonormalize_basis cols");
    if ((x - x.transpose()).norm() > S(1e-12) * std::max(S(1), x.norm())) {
      throw DomainError("orthonormalize_basis: input matrix is not symmetric");
    }
  }
  auto mats = detail::trace_gram_schmidt(raw, rel_tol);
  if (mats.empty()) throw DomainError("orthonormalize_basis: all input matrices are zero");
  for (auto& m : mats) m = (S(0.5) * (m + m.transpose())).eval();
  return SelfAdjointBasis<S>(n, std::move(mats));
}

/// Basis of the Lie algebra spanned by the generators, split into symmetric and antisymmetric
/// parts (X +- X^T)/2, each orthonormalized.
template <typename S>
SelfAdjointBasis<S> lie_algebra_basis(const std::vector<Matrix<S>>& generators,
                                      bool complexified = false, S rel_tol = S(1e-12)) {
  if (generators.empty()) throw DomainError("lie_algebra_basis: no generators");
  const int n = static_cast<int>(generators.front().rows());
  std::vector<Matrix<S>> sym, anti;
  for (const auto& g : generators) {
    require_dim(g.rows(), n, "generator rows");
    require_dim(g.cols(), n, "generator cols");
    sym.push_back(S(0.5) * (g + g.transpose()));
    anti.push_back(S(0.5) * (g - g.transpose()));
  }
  S max_norm(0);
  for (const auto& g : generators) max_norm = std::max(max_norm, g.norm());
  if (max_norm == S(0)) throw DomainError("lie_algebra_basis: all generators are zero");
  // Drop parts that are negligible relative to the generators, not to each other.
  auto filter = [&](std::vector<Matrix<S>>& parts) {
    std::erase_if(parts, [&](const Matrix<S>& m) { return m.norm() <= rel_tol * max_norm; });
  };
  filter(sym);
  filter(anti);
  auto p = detail::trace_gram_schmidt(sym, rel_tol);
  for (auto& m : p) m = (S(0.5) * (m + m.transpose())).eval();
  auto k = detail::trace_gram_schmidt(anti, rel_tol);
  for (auto& m : k) m = (S(0.5) * (m - m.transpose())).eval();
  return SelfAdjointBasis<S>(n, std::move(p), std::move(k), complexified);
}

/// Orthogonal projection of M onto g: sum_i tr(M X_i^T) X_i over both basis parts.
template <typename S, typename Derived>
Matrix<S> project_lie(const SelfAdjointBasis<S>& basis, const Eigen::MatrixBase<Derived>& m) {
  require_dim(m.rows(), basis.dim(), "project_lie rows");
  require_dim(m.cols(), basis.dim(), "project_lie cols");
  Matrix<S> out = Matrix<S>::Zero(basis.dim(), basis.dim());
  for (const auto& x : basis.mats()) out += trace_inner(m, x) * x;
  for (const auto& x : basis.skew()) out += trace_inner(m, x) * x;
  return out;
}

/// <X_i v, v> for each symmetric basis element.
template <typename S, typename Derived>
Vector<S> moment_coordinates(const SelfAdjointBasis<S>& basis, const Eigen::MatrixBase<Derived>& v) {
  require_dim(v.size(), basis.dim(), "moment map vector");
  Vector<S> c(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) {
    c(static_cast<Eigen::Index>(i)) = v.dot(basis[i] * v);
  }
  return c;
}

/// phi(v) = sum_i <X_i v, v>^2 (degree 4, nonnegative).
template <typename S, typename Derived>
S moment_phi(const SelfAdjointBasis<S>& basis, const Eigen::MatrixBase<Derived>& v) {
  return moment_coordinates(basis, v).squaredNorm();
}

/// phi(v) = tr(P_g(v v^T)^2), computed through the projection.
template <typename S, typename Derived>
S moment_phi_trace(const SelfAdjointBasis<S>& basis, const Eigen::MatrixBase<Derived>& v) {
  require_dim(v.size(), basis.dim(), "moment map vector");
  const Matrix<S> p = project_lie(basis, v * v.transpose());
  return (p * p).trace();
}

/// grad phi(v) = 4 sum_i <X_i v, v> X_i v.
template <typename S, typename Derived>
Vector<S> moment_grad(const SelfAdjointBasis<S>& basis, const Eigen::MatrixBase<Derived>& v) {
  const Vector<S> c = moment_coordinates(basis, v);
  Vector<S> g = Vector<S>::Zero(basis.dim());
  for (std::size_t i = 0; i < basis.size(); ++i) g += c(static_cast<Eigen::Index>(i)) * (basis[i] * v);
  return S(4) * g;
}

/// grad phi(v) = 4 P_g(v v^T) v.
template <typename S, typename Derived>
Vector<S> moment_grad_projection(const SelfAdjointBasis<S>& basis,
                                 const Eigen::MatrixBase<Derived>& v) {
  require_dim(v.size(), basis.dim(), "moment map vector");
  return S(4) * (project_lie(basis, v * v.transpose()) * v);
}

/// Relative least-squares residual of grad phi(v) against span{X_i v}; 0 when the gradient
/// vanishes.
template <typename S, typename Derived>
S tangency_residual(const SelfAdjointBasis<S>& basis, const Eigen::MatrixBase<Derived>& v) {
  const Vector<S> g = moment_grad(basis, v);
  const S gn = g.norm();
  if (gn == S(0) || basis.size() == 0) return S(0);
  Matrix<S> span(basis.dim(), static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) span.col(static_cast<Eigen::Index>(i)) = basis[i] * v;
  const Vector<S> coef = span.completeOrthogonalDecomposition().solve(g);
  return (span * coef - g).norm() / gn;
}

/// The moment-map polynomial as a gradient system (closed-form value and gradient).
template <typename S = double>
class MomentSystem {
 public:
  using Scalar = S;
  explicit MomentSystem(SelfAdjointBasis<S> basis) : basis_(std::move(basis)) {
    abs_mats_.reserve(basis_.size());
    for (const auto& x : basis_.mats()) abs_mats_.push_back(x.cwiseAbs());
  }

  int dim() const { return basis_.dim(); }
  int degree() const { return 4; }
  const SelfAdjointBasis<S>& basis() const { return basis_; }
  S value(const Vector<S>& x) const { return moment_phi(basis_, x); }
  Vector<S> gradient(const Vector<S>& x) const { return moment_grad(basis_, x); }
  S value_scale(const Vector<S>& x) const {
    const Vector<S> ax = x.cwiseAbs();
    S sum(0);
    for (const auto& m : abs_mats_) {
      const S q = ax.dot(m * ax);
      sum += q * q;
    }
    return sum;
  }

 private:
  SelfAdjointBasis<S> basis_;
  std::vector<Matrix<S>> abs_mats_;
};

/// Symbolic expansion of sum_i <X_i x, x>^2 as a degree-4 polynomial.
template <typename S>
HomogeneousPolynomial<S> moment_polynomial(const SelfAdjointBasis<S>& basis) {
  const int n = basis.dim();
  HomogeneousPolynomial<S> phi(n, 4);
  for (const auto& x : basis.mats()) {
    std::vector<typename HomogeneousPolynomial<S>::Term> quad;
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        Exponents e(static_cast<std::size_t>(n), 0);
        e[static_cast<std::size_t>(i)] += 1;
        e[static_cast<std::size_t>(j)] += 1;
        quad.push_back({e, i == j ? x(i, i) : x(i, j) + x(j, i)});
      }
    }
    const HomogeneousPolynomial<S> q(n, 2, quad);
    phi = phi + multiply(q, q);
  }
  return phi;
}

// ---------------------------------------------------------------------------
// Kempf-Ness checks.

template <typename S>
struct CriticalityReport {
  Vector<S> residuals;  ///< <X_i v, v>
  S max_abs;
  bool is_critical;
};

template <typename S, typename Derived>
CriticalityReport<S> criticality(const SelfAdjointBasis<S>& basis,
                                 const Eigen::MatrixBase<Derived>& v, S tol) {
  Vector<S> r = moment_coordinates(basis, v);
  const S max_abs = r.size() ? r.cwiseAbs().maxCoeff() : S(0);
  return {std::move(r), max_abs, max_abs <= tol};
}

/// exp of a symmetric matrix by eigendecomposition; exactly I for X = 0.
template <typename S>
Matrix<S> symmetric_exp(const Matrix<S>& x) {
  if (x.isZero(0)) return Matrix<S>::Identity(x.rows(), x.cols());
  Eigen::SelfAdjointEigenSolver<Matrix<S>> es(x);
  return es.eigenvectors() * es.eigenvalues().array().exp().matrix().asDiagonal() *
         es.eigenvectors().transpose();
}

template <typename S>
struct MinNormReport {
  /// min over samples of ||exp(X) v|| - ||v||.
  S worst_margin;
  Matrix<S> worst_x;
  /// A sample with ||exp(X) v|| < ||v|| - tol was found.
  bool counterexample;
  std::size_t samples;
};

/// One-sided evidence for the minimal-norm property of a critical vector: samples X in p with
/// ||X||_F <= radius and checks ||exp(X) v|| >= ||v|| - tol. The first 2k samples are
/// +-radius * X_i, the rest are uniform in the ball.
template <typename S, typename Derived>
MinNormReport<S> min_norm_check(const SelfAdjointBasis<S>& basis, const Eigen::MatrixBase<Derived>& v,
                                std::size_t n_samples, S radius, std::uint64_t seed = 0,
                                S tol = S(1e-12)) {
  require_dim(v.size(), basis.dim(), "min_norm_check vector");
  if (radius < S(0)) throw DomainError("min_norm_check: negative radius");
  const Vector<S> vv = v;
  const S v_norm = vv.norm();
  const std::size_t k = basis.size();
  const int n = basis.dim();

  MinNormReport<S> report{std::numeric_limits<S>::infinity(), Matrix<S>::Zero(n, n), false, 0};
  auto test = [&](const Matrix<S>& x) {
    const S margin = (symmetric_exp(x) * vv).norm() - v_norm;
    ++report.samples;
    if (margin < report.worst_margin) {
      report.worst_margin = margin;
      report.worst_x = x;
    }
  };

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (std::size_t s = 0; s < n_samples; ++s) {
    Matrix<S> x = Matrix<S>::Zero(n, n);
    if (k > 0 && s < 2 * k) {
      x = (s % 2 == 0 ? radius : -radius) * basis[s / 2];
    } else if (k > 0) {
      Vector<S> a(static_cast<Eigen::Index>(k));
      for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = S(normal(rng));
      const S an = a.norm();
      const S r = radius * S(std::pow(uniform(rng), 1.0 / static_cast<double>(k)));
      if (an > S(0)) a *= r / an;
      for (std::size_t i = 0; i < k; ++i) x += a(static_cast<Eigen::Index>(i)) * basis[i];
    }
    test(x);
  }
  if (report.samples == 0) test(Matrix<S>::Zero(n, n));
  report.counterexample = report.worst_margin < -tol;
  return report;
}

// ---------------------------------------------------------------------------
// Compact groups and Haar averages.

/// A compact subgroup K of O(n) given as a product of factors: finite groups (explicit
/// element lists) and tori exp(sum theta_j J_j) with commuting antisymmetric J_j whose
/// eigenvalues are integer multiples of i (period 2 pi in each angle).
template <typename S = double>
class CompactGroupSampler {
 public:
  struct Finite {
    std::vector<Matrix<S>> elements;
  };
  struct Torus {
    std::vector<Matrix<S>> generators;
  };
  using Factor = std::variant<Finite, Torus>;

  /// A point of K in product coordinates: one element index per finite factor, one angle per
  /// torus generator (factors in order).
  struct Node {
    std::vector<std::size_t> finite;
    std::vector<S> angles;
  };

  CompactGroupSampler(int dim, std::vector<Factor> factors, int quadrature_order)
      : dim_(dim), factors_(std::move(factors)), quadrature_order_(quadrature_order) {
    if (dim_ < 1) throw DomainError("group dimension must be positive");
    if (factors_.empty()) throw DomainError("compact group needs at least one factor");
    if (quadrature_order_ < 1) throw DomainError("quadrature order must be positive");
    for (const auto& f : factors_) {
      if (const auto* fin = std::get_if<Finite>(&f)) {
        if (fin->elements.empty()) throw DomainError("finite group factor without elements");
        for (const auto& k : fin->elements) check_orthogonal(k);
      } else {
        const auto& tor = std::get<Torus>(f);
        if (tor.generators.empty()) throw DomainError("torus factor without generators");
        for (const auto& j : tor.generators) {
          require_dim(j.rows(), dim_, "torus generator rows");
          require_dim(j.cols(), dim_, "torus generator cols");
          if ((j + j.transpose()).norm() > S(1e-12)) {
            throw DomainError("torus generator is not antisymmetric");
          }
          max_weight_ = std::max(max_weight_, integer_weight(j));
          ++n_angles_;
        }
        for (std::size_t a = 0; a < tor.generators.size(); ++a) {
          for (std::size_t b = a + 1; b < tor.generators.size(); ++b) {
            const auto& ja = tor.generators[a];
            const auto& jb = tor.generators[b];
            if ((ja * jb - jb * ja).norm() > S(1e-10)) {
              throw DomainError("torus generators do not commute");
            }
          }
        }
      }
    }
  }

  static CompactGroupSampler finite(std::vector<Matrix<S>> elements) {
    if (elements.empty()) throw DomainError("finite group without elements");
    const int n = static_cast<int>(elements.front().rows());
    return CompactGroupSampler(n, {Finite{std::move(elements)}}, 1);
  }

  static CompactGroupSampler torus(std::vector<Matrix<S>> generators, int quadrature_order) {
    if (generators.empty()) throw DomainError("torus without generators");
    const int n = static_cast<int>(generators.front().rows());
    return CompactGroupSampler(n, {Torus{std::move(generators)}}, quadrature_order);
  }

  int dim() const { return dim_; }
  int quadrature_order() const { return quadrature_order_; }
  const std::vector<Factor>& factors() const { return factors_; }
  std::size_t n_angles() const { return n_angles_; }
  /// Largest angular frequency of the torus factors (0 for finite groups).
  int max_weight() const { return max_weight_; }

  /// Uniform quadrature nodes: every finite element combination times a grid of
  /// nodes_per_angle equally spaced angles per torus generator.
  std::vector<Node> grid(int nodes_per_angle) const {
    if (nodes_per_angle < 1) throw DomainError("nodes_per_angle must be positive");
    std::vector<Node> out{Node{}};
    for (const auto& f : factors_) {
      std::vector<Node> next;
      if (const auto* fin = std::get_if<Finite>(&f)) {
        for (const auto& node : out) {
          for (std::size_t e = 0; e < fin->elements.size(); ++e) {
            Node n2 = node;
            n2.finite.push_back(e);
            next.push_back(std::move(n2));
          }
        }
      } else {
        next = out;
        for (std::size_t g = 0; g < std::get<Torus>(f).generators.size(); ++g) {
          std::vector<Node> expanded;
          for (const auto& node : next) {
            for (int j = 0; j < nodes_per_angle; ++j) {
              Node n2 = node;
              n2.angles.push_back(S(2) * std::numbers::pi_v<S> * S(j) / S(nodes_per_angle));
              expanded.push_back(std::move(n2));
            }
          }
          next = std::move(expanded);
        }
      }
      out = std::move(next);
    }
    return out;
  }

  Matrix<S> element(const Node& node) const {
    Matrix<S> k = Matrix<S>::Identity(dim_, dim_);
    std::size_t fi = 0, ai = 0;
    for (const auto& f : factors_) {
      if (const auto* fin = std::get_if<Finite>(&f)) {
        k = k * fin->elements.at(node.finite.at(fi++));
      } else {
        Matrix<S> gen = Matrix<S>::Zero(dim_, dim_);
        for (const auto& j : std::get<Torus>(f).generators) gen += node.angles.at(ai++) * j;
        k = k * Matrix<S>(gen.exp());
      }
    }
    check_orthogonal(k);
    return k;
  }

  std::vector<Matrix<S>> nodes(int nodes_per_angle) const {
    std::vector<Matrix<S>> out;
    for (const auto& node : grid(nodes_per_angle)) out.push_back(element(node));
    return out;
  }
  std::vector<Matrix<S>> nodes() const { return nodes(quadrature_order_); }

  /// Angular nodes per torus generator that integrate a degree-d polynomial in x exactly.
  int exact_nodes(int degree) const {
    return std::max(quadrature_order_, degree * std::max(max_weight_, 1) + 1);
  }

 private:
  void check_orthogonal(const Matrix<S>& k) const {
    require_dim(k.rows(), dim_, "group element rows");
    require_dim(k.cols(), dim_, "group element cols");
    if ((k.transpose() * k - Matrix<S>::Identity(dim_, dim_)).norm() > S(1e-10)) {
      throw DomainError("group element is not orthogonal");
    }
  }

  // eigenvalues of J are +-i w; w must be an integer for exp(2 pi J) = I.
  static int integer_weight(const Matrix<S>& j) {
    Eigen::SelfAdjointEigenSolver<Matrix<S>> es(Matrix<S>(j.transpose() * j));
    const S w = std::sqrt(std::max(S(0), es.eigenvalues().maxCoeff()));
    const S rounded = std::round(w);
    if (std::abs(w - rounded) > S(1e-9) || rounded < S(1)) {
      throw DomainError("torus generator does not have integer weights (period 2 pi)");
    }
    return static_cast<int>(rounded);
  }

  int dim_;
  std::vector<Factor> factors_;
  int quadrature_order_;
  int max_weight_ = 0;
  std::size_t n_angles_ = 0;
};

/// Haar average phi_K(x) = integral over K of phi(k x) dk, as an exact polynomial.
///
/// Finite factors are averaged exactly. Torus angles use a uniform grid with
/// degree * weight + 1 nodes, which is exact for the trigonometric polynomial theta ->
/// phi(k(theta) x). Coefficients below prune_tol relative to the largest are dropped.
template <typename S>
HomogeneousPolynomial<S> average_phi_K(const HomogeneousPolynomial<S>& phi,
                                       const CompactGroupSampler<S>& group,
                                       S prune_tol = S(1e-13)) {
  require_dim(group.dim(), phi.n_vars(), "average_phi_K group dimension");
  const auto nodes = group.nodes(group.exact_nodes(phi.degree()));
  detail::TermMap<S> acc;
  for (const auto& k : nodes) {
    const HomogeneousPolynomial<S> moved = compose_linear(phi, k);
    for (const auto& t : moved.terms()) acc[t.exps] += t.coef;
  }
  const S w = S(1) / S(nodes.size());
  for (auto& [e, c] : acc) c *= w;
  return prune(HomogeneousPolynomial<S>(phi.n_vars(), phi.degree(), acc), prune_tol);
}

namespace detail {

// Deterministic probe points for invariance checks.
template <typename S>
std::vector<Vector<S>> probe_points(int n, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vector<S>> out;
  for (std::size_t i = 0; i < count; ++i) {
    Vector<S> x(n);
    for (int j = 0; j < n; ++j) x(j) = S(normal(rng));
    out.push_back(x);
  }
  return out;
}

}  // namespace detail

/// Throws NotInvariantError unless |phi(k x) - phi(x)| <= tol (1 + scale) at probe points.
template <GradientSystem System>
void require_invariant(const System& system, const CompactGroupSampler<typename System::Scalar>& group,
                       typename System::Scalar tol = 1e-9) {
  using S = typename System::Scalar;
  require_dim(group.dim(), system.dim(), "invariance check group dimension");
  const auto ks = group.nodes();
  for (const auto& x : detail::probe_points<S>(system.dim(), 8, 0x5eed)) {
    const S px = system.value(x);
    const S scale = system.value_scale(x);
    for (const auto& k : ks) {
      if (std::abs(system.value(Vector<S>(k * x)) - px) > tol * (S(1) + scale)) {
        throw NotInvariantError("phi is not invariant under the compact group");
      }
    }
  }
}

template <typename S>
struct EquivarianceReport {
  S max_deviation;  ///< max over k of ||k^T F(t, k x0) - F(t, x0)||
  std::size_t group_samples;
};

/// Compares the flow of rotated starts against the rotated flow at time t, over the
/// quadrature nodes of K.
template <GradientSystem System>
EquivarianceReport<typename System::Scalar> equivariance_check(
    const System& system, const CompactGroupSampler<typename System::Scalar>& group,
    const Vector<typename System::Scalar>& x0, typename System::Scalar t,
    FlowOptions<typename System::Scalar> opts = {}) {
  using S = typename System::Scalar;
  require_invariant(system, group);
  opts.stop_on_convergence = false;
  opts.sample_times = {t};
  const Vector<S> base = integrate_flow(system, x0, t, opts).final_state().x;
  EquivarianceReport<S> report{S(0), 0};
  for (const auto& k : group.nodes()) {
    const Vector<S> moved = integrate_flow(system, Vector<S>(k * x0), t, opts).final_state().x;
    report.max_deviation = std::max(report.max_deviation, (k.transpose() * moved - base).norm());
    ++report.group_samples;
  }
  return report;
}

template <typename S>
EquivarianceReport<S> equivariance_check(const HomogeneousPolynomial<S>& phi,
                                         const CompactGroupSampler<S>& group, const Vector<S>& x0,
                                         S t, const FlowOptions<S>& opts = {}) {
  return equivariance_check(PolynomialSystem<S>(phi), group, x0, t, opts);
}

template <typename S>
struct OrbitLimit {
  Vector<S> u;
  CriticalityReport<S> criticality;
  Trajectory<S> trajectory;
  /// Only realified complex actions guarantee that the limit K-orbit is the unique closed
  /// critical orbit in the closure of G v.
  bool unique_orbit;
  std::string note;
};

/// Flows v under the moment-map polynomial until phi(u) <= tol; u represents the limiting
/// K-orbit. Throws ConvergenceError when the flow does not reach tol.
template <typename S>
OrbitLimit<S> orbit_limit(const SelfAdjointBasis<S>& basis, const Vector<S>& v, S tol,
                          const FlowOptions<S>& opts = {}) {
  require_dim(v.size(), basis.dim(), "orbit_limit vector");
  const MomentSystem<S> system(basis);
  Trajectory<S> traj = retract_trajectory(system, v, tol, opts);
  if (traj.status != FlowStatus::converged) {
    throw ConvergenceError<S>(std::string("orbit_limit did not converge: ") + to_string(traj.status),
                              traj.final_state(), traj.status);
  }
  Vector<S> u = traj.final_state().x;
  auto report = criticality(basis, u, std::sqrt(tol));
  const bool unique = basis.complexified();
  std::string note = unique ? "complexified action: limit K-orbit is unique"
                            : "real action: limit K-orbit found from this start; uniqueness "
                              "is only guaranteed for complexified actions";
  return {std::move(u), std::move(report), std::move(traj), unique, std::move(note)};
}

/// Heuristic distance between the K-orbits of u and w: min over the quadrature grid of
/// ||k u - w||, refined by coordinate-wise golden-section search over torus angles.
template <typename S>
S orbit_distance(const CompactGroupSampler<S>& group, const Vector<S>& u, const Vector<S>& w,
                 int sweeps = 4) {
  require_dim(u.size(), group.dim(), "orbit_distance u");
  require_dim(w.size(), group.dim(), "orbit_distance w");
  const int per_angle = std::max(group.quadrature_order(), 16);
  auto dist = [&](const typename CompactGroupSampler<S>::Node& node) {
    return (group.element(node) * u - w).norm();
  };
  typename CompactGroupSampler<S>::Node best_node;
  S best = std::numeric_limits<S>::infinity();
  for (const auto& node : group.grid(per_angle)) {
    const S d = dist(node);
    if (d < best) {
      best = d;
      best_node = node;
    }
  }
  const S half_width = std::numbers::pi_v<S> / S(per_angle);
  const S golden = (std::sqrt(S(5)) - S(1)) / S(2);
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    for (std::size_t a = 0; a < best_node.angles.size(); ++a) {
      auto node = best_node;
      auto f = [&](S theta) {
        node.angles[a] = theta;
        return dist(node);
      };
      S lo = best_node.angles[a] - half_width, hi = best_node.angles[a] + half_width;
      S x1 = hi - golden * (hi - lo), x2 = lo + golden * (hi - lo);
      S f1 = f(x1), f2 = f(x2);
      for (int it = 0; it < 60; ++it) {
        if (f1 < f2) {
          hi = x2;
          x2 = x1;
          f2 = f1;
          x1 = hi - golden * (hi - lo);
          f1 = f(x1);
        } else {
          lo = x1;
          x1 = x2;
          f1 = f2;
          x2 = lo + golden * (hi - lo);
          f2 = f(x2);
        }
      }
      const S theta = (lo + hi) / S(2);
      const S d = f(theta);
      if (d < best) {
        best = d;
        best_node.angles[a] = theta;
      }
    }
  }
  return best;
}

}  // namespace gflow

#endif  // GFLOW_GROUP_HPP
