#ifndef GFLOW_INEQUALITIES_HPP
#define GFLOW_INEQUALITIES_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "gflow/group.hpp"
#include "gflow/polynomial.hpp"
#include "gflow/sphere.hpp"
#include "gflow/types.hpp"

namespace gflow {

/// Sampled infimum of an inequality ratio over the unit sphere.
///
/// c_estimate is a sample infimum, so it is an upper bound on the best constant of the
/// inequality; nothing is extrapolated.
template <typename S = double>
struct InequalityReport {
  S epsilon;
  S c_estimate;
  Vector<S> worst_point;
  std::size_t n_samples;
  std::size_t vacuous_excluded;
  /// The ratio was exactly 0 at a sample off the zero set.
  bool violated;
  /// Set for moment-map scans: whether the basis is pairwise commuting.
  std::optional<bool> commuting;
  std::string label;
};

/// Points with phi at or below this are excluded from ratio infima.
inline constexpr double kFloorTol = 1e-14;

namespace detail {

template <typename S>
struct ScanBest {
  S value = std::numeric_limits<S>::infinity();
  std::size_t index = std::numeric_limits<std::size_t>::max();
};

template <typename S>
ScanBest<S> min_of(const ScanBest<S>& a, const ScanBest<S>& b) {
  if (a.value < b.value) return a;
  if (b.value < a.value) return b;
  return a.index <= b.index ? a : b;
}

template <typename S>
struct ChunkResult {
  std::vector<ScanBest<S>> best;
  std::size_t vacuous = 0;
};

// Evaluates fn(i, out) for i in [0, count); fn writes one ratio per channel (or returns false
// for a vacuous point). Chunks are fixed-size and reduced by a pairwise tree, so the result
// does not depend on the number of threads.
template <typename S, typename Fn>
ChunkResult<S> scan_min(std::size_t count, std::size_t channels, unsigned threads, Fn fn) {
  constexpr std::size_t kChunk = 8192;
  const std::size_t n_chunks = (count + kChunk - 1) / kChunk;
  std::vector<ChunkResult<S>> chunks(n_chunks);
  auto work = [&](std::size_t first_chunk, std::size_t stride) {
    std::vector<S> out(channels);
    for (std::size_t c = first_chunk; c < n_chunks; c += stride) {
      ChunkResult<S> r{std::vector<ScanBest<S>>(channels), 0};
      const std::size_t end = std::min(count, (c + 1) * kChunk);
      for (std::size_t i = c * kChunk; i < end; ++i) {
        if (!fn(i, std::span<S>(out))) {
          ++r.vacuous;
          continue;
        }
        for (std::size_t ch = 0; ch < channels; ++ch) r.best[ch] = min_of(r.best[ch], {out[ch], i});
      }
      chunks[c] = std::move(r);
    }
  };
  const unsigned t = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n_chunks)));
  if (t <= 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < t; ++w) pool.emplace_back(work, w, t);
  }
  if (chunks.empty()) return {std::vector<ScanBest<S>>(channels), 0};
  for (std::size_t width = 1; width < chunks.size(); width *= 2) {
    for (std::size_t i = 0; i + width < chunks.size(); i += 2 * width) {
      auto& a = chunks[i];
      const auto& b = chunks[i + width];
      for (std::size_t ch = 0; ch < channels; ++ch) a.best[ch] = min_of(a.best[ch], b.best[ch]);
      a.vacuous += b.vacuous;
    }
  }
  return std::move(chunks.front());
}

}  // namespace detail

/// Scans ||grad phi(x)||^(1+eps) / phi(x) over unit-sphere samples, for each eps.
///
/// On the sphere this is the ratio ||grad phi||^(1+eps) ||x||^(1-(m-1)eps) / phi(x), which is
/// scale invariant, so its infimum over the sphere is the best global constant. Samples with
/// phi <= floor_tol are excluded and counted in vacuous_excluded.
template <typename S>
std::vector<InequalityReport<S>> lojasiewicz_scan(const HomogeneousPolynomial<S>& phi,
                                                  const std::vector<S>& epsilons,
                                                  const SphereSampler<S>& sampler,
                                                  S floor_tol = S(kFloorTol), unsigned threads = 1) {
  const int m = phi.degree();
  require_dim(sampler.dim(), phi.n_vars(), "lojasiewicz_scan sampler dimension");
  if (m <= 1) throw DomainError("lojasiewicz_scan needs degree > 1");
  const S cap = S(1) / S(m - 1);
  for (S eps : epsilons) {
    if (!(eps > S(0)) || eps > cap * (S(1) + S(1e-12))) {
      throw DomainError("epsilon " + std::to_string(static_cast<double>(eps)) +
                        " outside (0, 1/(m-1)] = (0, " + std::to_string(static_cast<double>(cap)) +
                        "]");
    }
  }
  if (epsilons.empty()) return {};

  const auto result = detail::scan_min<S>(
      sampler.size(), epsilons.size(), threads, [&](std::size_t i, std::span<S> out) {
        const Vector<S> x = sampler.point(i);
        const S p = phi(x);
        if (!(p > floor_tol)) return false;
        const S g = gradient_at(phi, x).norm();
        for (std::size_t e = 0; e < epsilons.size(); ++e) out[e] = std::pow(g, S(1) + epsilons[e]) / p;
        return true;
      });

  std::vector<InequalityReport<S>> reports;
  for (std::size_t e = 0; e < epsilons.size(); ++e) {
    const auto& best = result.best[e];
    if (best.index == std::numeric_limits<std::size_t>::max()) {
      throw DomainError("lojasiewicz_scan: every sample lies on the zero set");
    }
    reports.push_back({epsilons[e], best.value, sampler.point(best.index), sampler.size(),
                       result.vacuous, best.value == S(0), std::nullopt,
                       "sample infimum (upper bound on the best constant)"});
  }
  return reports;
}

/// Both sides of C (sum_ij <X_i v,v><X_j v,v><X_i v,X_j v>)^2 >= (sum_i <X_i v,v>^2)^3.
template <typename S>
struct NeemanRatio {
  S lhs;
  S rhs;
  /// lhs / rhs; empty when rhs = 0 (the comparison is vacuous).
  std::optional<S> ratio;
  /// |lhs - ||sum_i <X_i v,v> X_i v||^4|.
  S identity_residual;
  bool vacuous() const { return !ratio.has_value(); }
};

/// sum_i <X_i v, v>^2 over an arbitrary operator family.
template <typename S, typename Derived>
S family_phi(std::span<const Matrix<S>> family, const Eigen::MatrixBase<Derived>& v) {
  S sum(0);
  for (const auto& x : family) {
    const S c = v.dot(x * v);
    sum += c * c;
  }
  return sum;
}

/// sum_ij <X_i v, v> <X_j v, v> <X_i v, X_j v> over an arbitrary operator family.
template <typename S, typename Derived>
S family_double_sum(std::span<const Matrix<S>> family, const Eigen::MatrixBase<Derived>& v) {
  const std::size_t k = family.size();
  std::vector<Vector<S>> images;
  std::vector<S> c;
  for (const auto& x : family) {
    images.push_back(x * v);
    c.push_back(v.dot(images.back()));
  }
  S sum(0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) sum += c[i] * c[j] * images[i].dot(images[j]);
  }
  return sum;
}

template <typename S, typename Derived>
NeemanRatio<S> neeman_ratio(const SelfAdjointBasis<S>& basis, const Eigen::MatrixBase<Derived>& v) {
  require_dim(v.size(), basis.dim(), "neeman_ratio vector");
  const Vector<S> vv = v;
  const std::span<const Matrix<S>> family(basis.mats());
  const S double_sum = family_double_sum(family, vv);
  const S phi = family_phi(family, vv);
  Vector<S> w = Vector<S>::Zero(basis.dim());
  for (const auto& x : basis.mats()) w += vv.dot(x * vv) * (x * vv);
  const S lhs = double_sum * double_sum;
  const S rhs = phi * phi * phi;
  const S wn2 = w.squaredNorm();
  NeemanRatio<S> r{lhs, rhs, std::nullopt, std::abs(lhs - wn2 * wn2)};
  if (rhs != S(0)) r.ratio = lhs / rhs;
  return r;
}

/// a_k^2 / |a_1| for the eigenvalues of X ordered by decreasing magnitude, a_k the smallest
/// nonzero one. Lower bound for ||Xv||^2 / |<Xv, v>| wherever <Xv, v> != 0.
///
/// Eigenvalues at or below zero_tol * |a_1| count as zero. When such an eigenvalue is tiny but
/// not exactly zero (e.g. after rounding), the ratio near its eigenvector can fall below the
/// returned value.
template <typename S, typename Derived>
S single_matrix_bound(const Eigen::MatrixBase<Derived>& x, S zero_tol = S(1e-12)) {
  if (x.rows() != x.cols()) throw DimensionError("single_matrix_bound: matrix is not square");
  const Matrix<S> m = x;
  if ((m - m.transpose()).norm() > S(1e-12) * std::max(S(1), m.norm())) {
    throw DomainError("single_matrix_bound: matrix is not symmetric");
  }
  if (m.isZero(0)) throw DomainError("single_matrix_bound: X = 0");
  Eigen::SelfAdjointEigenSolver<Matrix<S>> es(m, Eigen::EigenvaluesOnly);
  const Vector<S> a = es.eigenvalues().cwiseAbs();
  const S a1 = a.maxCoeff();
  S ak = a1;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a(i) > zero_tol * a1) ak = std::min(ak, a(i));
  }
  return ak * ak / a1;
}

/// ||Xv||^2 / |<Xv, v>|; empty when <Xv, v> = 0.
template <typename S, typename DerivedX, typename DerivedV>
std::optional<S> single_matrix_ratio(const Eigen::MatrixBase<DerivedX>& x,
                                     const Eigen::MatrixBase<DerivedV>& v) {
  const Vector<S> xv = x * v;
  const S q = xv.dot(v);
  if (q == S(0)) return std::nullopt;
  return xv.squaredNorm() / std::abs(q);
}

/// Sampled infimum of lhs / rhs from neeman_ratio over the sphere (the degree-4 moment map
/// at exponent 1/3). Commuting bases have a guaranteed positive infimum; others are labeled as
/// conjecture evidence.
template <typename S>
InequalityReport<S> estimate_neeman_constant(const SelfAdjointBasis<S>& basis,
                                             const SphereSampler<S>& sampler,
                                             S floor_tol = S(kFloorTol), unsigned threads = 1) {
  require_dim(sampler.dim(), basis.dim(), "estimate_neeman_constant sampler dimension");
  if (basis.size() == 0) throw DomainError("estimate_neeman_constant: empty basis");
  const auto result = detail::scan_min<S>(
      sampler.size(), 1, threads, [&](std::size_t i, std::span<S> out) {
        const Vector<S> x = sampler.point(i);
        const auto r = neeman_ratio(basis, x);
        if (!(std::cbrt(r.rhs) > floor_tol) || !r.ratio) return false;
        out[0] = *r.ratio;
        return true;
      });
  const auto& best = result.best[0];
  if (best.index == std::numeric_limits<std::size_t>::max()) {
    throw DomainError("estimate_neeman_constant: every sample is vacuous");
  }
  const bool commuting = basis.commuting();
  return {S(1) / S(3),
          best.value,
          sampler.point(best.index),
          sampler.size(),
          result.vacuous,
          best.value == S(0),
          commuting,
          commuting ? "commuting family: positive infimum guaranteed"
                    : "non-commuting family: conjecture evidence"};
}

}  // namespace gflow

#endif  // GFLOW_INEQUALITIES_HPP
