#ifndef GFLOW_SPHERE_HPP
#define GFLOW_SPHERE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>

#include "gflow/types.hpp"

namespace gflow {

/// Deterministic point sets on the unit sphere S^(n-1).
///
/// n <= 4 uses equal-area low-discrepancy constructions (uniform angles on S^1, the Fibonacci
/// spiral on S^2, a Kronecker lattice pushed through Hopf coordinates on S^3). n > 4 uses
/// normalized Gaussians from a seeded generator. point(i) depends only on (n, count, seed, i).
template <typename S = double>
class SphereSampler {
 public:
  SphereSampler(int dim, std::size_t count, std::uint64_t seed = 0)
      : dim_(dim), count_(count), seed_(seed) {
    if (dim_ < 1) throw DomainError("sphere dimension must be positive");
  }

  int dim() const { return dim_; }
  std::size_t size() const { return count_; }
  std::uint64_t seed() const { return seed_; }
  bool low_discrepancy() const { return dim_ <= 4; }

  Vector<S> point(std::size_t i) const {
    Vector<S> x(dim_);
    const double two_pi = 2.0 * std::numbers::pi;
    const double n = static_cast<double>(count_);
    const double id = static_cast<double>(i);
    switch (dim_) {
      case 1:
        x(0) = (i % 2 == 0) ? S(1) : S(-1);
        return x;
      case 2: {
        const double theta = two_pi * (id + 0.5) / n;
        x << S(std::cos(theta)), S(std::sin(theta));
        return x;
      }
      case 3: {
        const double z = 1.0 - (2.0 * id + 1.0) / n;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = two_pi * std::fmod(id * kGoldenFraction, 1.0);
        x << S(r * std::cos(phi)), S(r * std::sin(phi)), S(z);
        return x;
      }
      case 4: {
        // R_3 Kronecker sequence; sin^2(eta) uniform gives the Haar measure on S^3.
        const double u1 = std::fmod(0.5 + id * kR3[0], 1.0);
        const double u2 = std::fmod(0.5 + id * kR3[1], 1.0);
        const double u3 = std::fmod(0.5 + id * kR3[2], 1.0);
        const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
        x << S(a * std::cos(two_pi * u2)), S(a * std::sin(two_pi * u2)),
            S(b * std::cos(two_pi * u3)), S(b * std::sin(two_pi * u3));
        return x;
      }
      default: {
        std::mt19937_64 rng(seed_ ^ (0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(i) + 1)));
        std::normal_distribution<double> normal(0.0, 1.0);
        do {
          for (int j = 0; j < dim_; ++j) x(j) = S(normal(rng));
        } while (x.norm() == S(0));
        return x / x.norm();
      }
    }
  }

 private:
  static constexpr double kGoldenFraction = 0.6180339887498949;
  // Reciprocal powers of the root of x^4 = x + 1.
  static constexpr double kR3[3] = {0.8191725133961645, 0.6710436067037893, 0.5497004779019703};

  int dim_;
  std::size_t count_;
  std::uint64_t seed_;
};

}  // namespace gflow

#endif  // GFLOW_SPHERE_HPP
