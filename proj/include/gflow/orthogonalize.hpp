#ifndef GFLOW_ORTHOGONALIZE_HPP
#define GFLOW_ORTHOGONALIZE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "gflow/types.hpp"

namespace gflow {

namespace detail {

// Greedy column-pivoted Gram-Schmidt over the rows of v: repeatedly take the row with the
// largest residual norm (lowest index on ties) while it exceeds rel_tol * max_i ||v_i||.
// Returns the chosen row indices in pivot order.
template <typename S>
std::vector<int> pivoted_selection(const Matrix<S>& v, S rel_tol) {
  const Eigen::Index n = v.rows();
  std::vector<int> chosen;
  if (n == 0) return chosen;
  const S threshold = rel_tol * v.rowwise().norm().maxCoeff();
  Matrix<S> residual = v;
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  while (true) {
    int pick = -1;
    S best(0);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (used[static_cast<std::size_t>(i)]) continue;
      const S r = residual.row(i).norm();
      if (r > best) {
        best = r;
        pick = static_cast<int>(i);
      }
    }
    if (pick < 0 || !(best > threshold)) break;
    used[static_cast<std::size_t>(pick)] = true;
    chosen.push_back(pick);
    const Vector<S> q = residual.row(pick).transpose() / best;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (used[static_cast<std::size_t>(i)]) continue;
      for (int pass = 0; pass < 2; ++pass) {
        residual.row(i) -= residual.row(i).dot(q.transpose()) * q.transpose();
      }
    }
  }
  return chosen;
}

}  // namespace detail

/// Numerical rank of the rows of v: the number of column-pivoted Gram-Schmidt steps whose
/// residual exceeds tol * max_i ||v_i||.
template <typename S>
int span_rank(const Matrix<S>& v, S tol = S(1e-10)) {
  return static_cast<int>(detail::pivoted_selection(v, tol).size());
}

/// B = R k with R upper triangular with positive diagonal and k orthogonal. R = u a with u
/// unit upper triangular and a = diag(R); u is not formed.
template <typename S>
struct IwasawaFactors {
  Matrix<S> upper;
  Vector<S> a;
  Matrix<S> k;
};

template <typename S>
IwasawaFactors<S> iwasawa_decompose(const Matrix<S>& b) {
  if (b.rows() != b.cols()) throw DimensionError("iwasawa_decompose: matrix is not square");
  const Eigen::Index n = b.rows();
  // (J B)^T = Q R  =>  B = (J R^T J)(J Q^T) with J the reversal permutation.
  const Matrix<S> jb = b.colwise().reverse();
  Eigen::HouseholderQR<Matrix<S>> qr(jb.transpose());
  const Matrix<S> q = qr.householderQ();
  const Matrix<S> r = qr.matrixQR().template triangularView<Eigen::Upper>();
  Matrix<S> upper = r.transpose().colwise().reverse().rowwise().reverse();
  Matrix<S> k = q.transpose().colwise().reverse();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (upper(i, i) < S(0)) {
      upper.col(i) *= S(-1);
      k.row(i) *= S(-1);
    }
  }
  Vector<S> a = upper.diagonal();
  return {std::move(upper), std::move(a), std::move(k)};
}

/// Output of simultaneous_orthogonalize: z = A v with A orthogonal, z_1..z_m pairwise
/// orthogonal with <z_i, z_i> = c_i > 0 and z_j = 0 for j > m.
template <typename S = double>
struct OrthogonalizationResult {
  Matrix<S> A;
  /// Row i is z_i.
  Matrix<S> z;
  std::vector<S> c;
  int m;
  /// permutation[i] is the input index moved to position i (independent prefix first).
  std::vector<int> permutation;
  /// Orthogonal factor of the Iwasawa decomposition of the dependency matrix.
  Matrix<S> k;
};

/// Simultaneously orthogonalizes a spanning family by one orthogonal change of index.
///
/// 1. pick a maximal independent prefix by column pivoting and move it to the front;
/// 2. write the remaining vectors as v_{m+j} = sum_i x_ji v_i and form
///    B = [[I_m, 0], [X, -I_{n-m}]], which maps the stack to (v_1..v_m, 0..0);
/// 3. factor B = u a k (u unit upper triangular, a positive diagonal, k orthogonal), so that
///    k v = a^-1 u^-1 B v = (t_1..t_m, 0..0);
/// 4. diagonalize the Gram matrix <t_i, t_j> by an orthogonal T (eigenvalues descending);
/// 5. A = blockdiag(T, I) k P.
///
/// Rows of v are the vectors. rel_tol decides numerical dependence relative to max ||v_i||.
/// An all-zero family gives m = 0 and A = P.
template <typename S>
OrthogonalizationResult<S> simultaneous_orthogonalize(const Matrix<S>& v, S rel_tol = S(1e-10)) {
  const Eigen::Index n = v.rows();
  if (n < 1) throw DomainError("simultaneous_orthogonalize needs at least one vector");

  const std::vector<int> independent = detail::pivoted_selection(v, rel_tol);
  const auto m = static_cast<Eigen::Index>(independent.size());

  std::vector<int> order = independent;
  {
    std::vector<bool> taken(static_cast<std::size_t>(n), false);
    for (int i : independent) taken[static_cast<std::size_t>(i)] = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!taken[static_cast<std::size_t>(i)]) order.push_back(static_cast<int>(i));
    }
  }
  Matrix<S> perm = Matrix<S>::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) perm(i, order[static_cast<std::size_t>(i)]) = S(1);
  const Matrix<S> pv = perm * v;

  Matrix<S> b = Matrix<S>::Identity(n, n);
  if (m > 0 && m < n) {
    const Matrix<S> vi = pv.topRows(m);
    const Matrix<S> dep = pv.bottomRows(n - m);
    const Matrix<S> coeffs =
        vi.transpose().colPivHouseholderQr().solve(dep.transpose()).transpose();  // (n-m) x m
    b.bottomLeftCorner(n - m, m) = coeffs;
    b.bottomRightCorner(n - m, n - m) *= S(-1);
  }
  const IwasawaFactors<S> iw = iwasawa_decompose(b);

  const Matrix<S> t = iw.k * pv;
  Matrix<S> s = Matrix<S>::Identity(n, n);
  if (m > 0) {
    const Matrix<S> gram = t.topRows(m) * t.topRows(m).transpose();
    Eigen::SelfAdjointEigenSolver<Matrix<S>> es(gram);
    // Eigen sorts ascending; reverse for descending c.
    s.topLeftCorner(m, m) = es.eigenvectors().rowwise().reverse().transpose();
  }

  OrthogonalizationResult<S> out;
  out.A = s * iw.k * perm;
  out.z = out.A * v;
  out.m = static_cast<int>(m);
  for (Eigen::Index i = 0; i < m; ++i) out.c.push_back(out.z.row(i).squaredNorm());
  out.permutation = std::move(order);
  out.k = iw.k;
  return out;
}

template <typename S = double>
struct AlignedFamily {
  /// Z_i = sum_j A_ij X_j.
  std::vector<Matrix<S>> z;
  int m;
  Matrix<S> A;
};

/// Rotates an operator family so that Z_i v = 0 for i > m and the Z_i v are orthogonal.
template <typename S>
AlignedFamily<S> align_operator_family(const std::vector<Matrix<S>>& family, const Vector<S>& v,
                                       S rel_tol = S(1e-10)) {
  if (family.empty()) throw DomainError("align_operator_family: empty family");
  Matrix<S> images(static_cast<Eigen::Index>(family.size()), v.size());
  for (std::size_t i = 0; i < family.size(); ++i) {
    require_dim(family[i].rows(), v.size(), "operator rows");
    require_dim(family[i].cols(), v.size(), "operator cols");
    images.row(static_cast<Eigen::Index>(i)) = (family[i] * v).transpose();
  }
  const auto result = simultaneous_orthogonalize(images, rel_tol);
  AlignedFamily<S> out{{}, result.m, result.A};
  for (std::size_t i = 0; i < family.size(); ++i) {
    Matrix<S> zi = Matrix<S>::Zero(v.size(), v.size());
    for (std::size_t j = 0; j < family.size(); ++j) {
      zi += result.A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * family[j];
    }
    out.z.push_back(std::move(zi));
  }
  return out;
}

}  // namespace gflow

#endif  // GFLOW_ORTHOGONALIZE_HPP
