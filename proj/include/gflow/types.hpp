#ifndef GFLOW_TYPES_HPP
#define GFLOW_TYPES_HPP

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace gflow {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Operand sizes do not agree (vector length vs. number of variables, matrix shapes).
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An argument is outside the domain an operation is defined on.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Symbolic expansion would exceed the configured degree or term budget.
class LimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A polynomial expected to be invariant under a group failed the sampled invariance test.
class NotInvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require_dim(long got, long want, const char* what) {
  if (got != want) {
    throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(want) +
                         ", got " + std::to_string(got));
  }
}

}  // namespace gflow

#endif  // GFLOW_TYPES_HPP
