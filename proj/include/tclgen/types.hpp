#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tclgen {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Complex = std::complex<double>;
using CMatrix = Matrix<Complex>;
using CVector = Vector<Complex>;
using RMatrix = Matrix<double>;

inline constexpr Complex kI{0.0, 1.0};

// Interaction-picture rotation X(tau) = exp(+i s H tau) X exp(-i s H tau) with
// s = kPictureSign. The bath correlators, the system superoperator tables and
// the exact oracle's back-rotation all read this one constant.
inline constexpr double kPictureSign = +1.0;

/// Which expansion a symbolic term or numeric object belongs to: the
/// Schroedinger-picture generator for states or its adjoint for observables.
enum class Kind { Schrodinger, Adjoint };

/// Thrown for malformed or out-of-range arguments (orders, indices, shapes).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Thrown when input matrices or bath data fail a numerical validation check
/// (hermiticity, trace, positivity, stationarity).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tclgen
