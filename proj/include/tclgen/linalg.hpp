#pragma once

// Dense helpers shared by every numeric module. Superoperators act on
// column-major vectorizations: vec(X)[i + d*j] = X(i, j), so that
//   vec(L X R) = (R^T (x) L) vec(X),
//   left multiplication  X_L = 1 (x) X,
//   right multiplication X_R = X^T (x) 1.

#include <cmath>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include "tclgen/types.hpp"

namespace tclgen {

template <typename Derived>
Vector<typename Derived::Scalar> vec(const Eigen::MatrixBase<Derived>& x) {
  Matrix<typename Derived::Scalar> m = x;
  return Eigen::Map<Vector<typename Derived::Scalar>>(m.data(), m.size());
}

template <typename Derived>
Matrix<typename Derived::Scalar> unvec(const Eigen::MatrixBase<Derived>& v, Eigen::Index dim) {
  Vector<typename Derived::Scalar> c = v;
  return Eigen::Map<Matrix<typename Derived::Scalar>>(c.data(), dim, dim);
}

template <typename Derived>
Matrix<typename Derived::Scalar> left_superop(const Eigen::MatrixBase<Derived>& x) {
  using S = typename Derived::Scalar;
  const auto d = x.rows();
  return Eigen::kroneckerProduct(Matrix<S>::Identity(d, d), x.derived()).eval();
}

template <typename Derived>
Matrix<typename Derived::Scalar> right_superop(const Eigen::MatrixBase<Derived>& x) {
  using S = typename Derived::Scalar;
  const auto d = x.rows();
  return Eigen::kroneckerProduct(x.derived().transpose(), Matrix<S>::Identity(d, d)).eval();
}

/// X^- = X_L - X_R, the commutator action [X, .].
template <typename Derived>
Matrix<typename Derived::Scalar> commutator_superop(const Eigen::MatrixBase<Derived>& x) {
  return left_superop(x) - right_superop(x);
}

/// X^+ = X_L + X_R, the anticommutator action {X, .}.
template <typename Derived>
Matrix<typename Derived::Scalar> anticommutator_superop(const Eigen::MatrixBase<Derived>& x) {
  return left_superop(x) + right_superop(x);
}

template <typename DerivedS, typename DerivedX>
Matrix<typename DerivedX::Scalar> apply_superop(const Eigen::MatrixBase<DerivedS>& s,
                                                const Eigen::MatrixBase<DerivedX>& x) {
  return unvec((s * vec(x)).eval(), x.rows());
}

template <typename Derived>
typename Derived::Scalar trace_of_vec(const Eigen::MatrixBase<Derived>& v, Eigen::Index dim) {
  typename Derived::Scalar acc{0};
  for (Eigen::Index i = 0; i < dim; ++i) acc += v(i + dim * i);
  return acc;
}

/// Frobenius norm of X - X^dagger.
template <typename Derived>
double hermiticity_residual(const Eigen::MatrixBase<Derived>& x) {
  return (x - x.adjoint()).norm();
}

/// Partial trace over the second tensor factor of a (dA*dB)-dimensional
/// operator laid out as kron(A, B).
template <typename Derived>
Matrix<typename Derived::Scalar> partial_trace_second(const Eigen::MatrixBase<Derived>& x,
                                                      Eigen::Index dim_a, Eigen::Index dim_b) {
  Matrix<typename Derived::Scalar> out = Matrix<typename Derived::Scalar>::Zero(dim_a, dim_a);
  for (Eigen::Index i = 0; i < dim_a; ++i)
    for (Eigen::Index j = 0; j < dim_a; ++j)
      for (Eigen::Index e = 0; e < dim_b; ++e) out(i, j) += x(i * dim_b + e, j * dim_b + e);
  return out;
}

/// Smallest eigenvalue of the Hermitian part of x.
inline double min_hermitian_eigenvalue(const CMatrix& x) {
  const CMatrix h = 0.5 * (x + x.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// Trace distance 1/2 ||a - b||_1 between two (near-)Hermitian matrices.
inline double trace_distance(const CMatrix& a, const CMatrix& b) {
  const CMatrix diff = a - b;
  const CMatrix h = 0.5 * (diff + diff.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

/// Cached spectral data of a Hermitian generator H for repeated
/// interaction-picture rotations exp(+i s H t) X exp(-i s H t).
class HermitianRotor {
 public:
  HermitianRotor() = default;
  explicit HermitianRotor(const CMatrix& h) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (h + h.adjoint()));
    vectors_ = es.eigenvectors();
    values_ = es.eigenvalues();
  }

  /// Rotates x into the interaction picture at time t.
  CMatrix rotate(const CMatrix& x, double t) const {
    const auto n = values_.size();
    CMatrix y = vectors_.adjoint() * x * vectors_;
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b < n; ++b)
        y(a, b) *= std::exp(kI * (kPictureSign * (values_(a) - values_(b)) * t));
    return vectors_ * y * vectors_.adjoint();
  }

  /// exp(-i H t) applied as a similarity x -> U x U^dagger.
  CMatrix evolve(const CMatrix& x, double t) const { return rotate(x, -kPictureSign * t); }

  const CMatrix& eigenvectors() const { return vectors_; }
  const Vector<double>& eigenvalues() const { return values_; }

 private:
  CMatrix vectors_;
  Vector<double> values_;
};

}  // namespace tclgen
