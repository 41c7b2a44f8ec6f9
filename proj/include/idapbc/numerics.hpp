#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include <Eigen/Dense>

#include "idapbc/errors.hpp"

namespace idapbc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

using ScalarField = std::function<double(const Vector&)>;
using VectorField = std::function<Vector(const Vector&)>;
using MatrixField = std::function<Matrix(const Vector&)>;

namespace numerics {

// Relative step scale for first derivatives of smooth maps.
inline constexpr double kFirstDerivativeStep = 1e-6;
// Smallest eigenvalue that still counts as positive definite.
inline constexpr double kPositiveDefiniteTol = 1e-10;

inline double step_for(double x, double scale = kFirstDerivativeStep) {
  return scale * std::max(1.0, std::abs(x));
}

inline Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

/// Eigenvalues of the symmetric part, ascending.
inline Vector symmetric_eigenvalues(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrize(a), Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

inline double min_eigenvalue(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return symmetric_eigenvalues(a)(0);
}

inline bool is_positive_definite(const Matrix& a, double tol = kPositiveDefiniteTol) {
  return min_eigenvalue(a) > tol;
}

inline bool all_finite(const Matrix& a) { return a.allFinite(); }

/// Central-difference gradient of a scalar field.
inline Vector gradient(const ScalarField& f, const Vector& x,
                       double scale = kFirstDerivativeStep) {
  Vector g(x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = step_for(x(i), scale);
    xp(i) = x(i) + h;
    const double fp = f(xp);
    xp(i) = x(i) - h;
    const double fm = f(xp);
    xp(i) = x(i);
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// Central-difference Jacobian of a vector field; column j holds d f / d x_j.
inline Matrix jacobian(const VectorField& f, const Vector& x,
                       double scale = kFirstDerivativeStep) {
  const Vector f0 = f(x);
  Matrix jac(f0.size(), x.size());
  Vector xp = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = step_for(x(j), scale);
    xp(j) = x(j) + h;
    const Vector fp = f(xp);
    xp(j) = x(j) - h;
    const Vector fm = f(xp);
    xp(j) = x(j);
    jac.col(j) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

/// Gradient of q -> p^T A(q) p with p held fixed, by central differences of A.
inline Vector quadratic_form_gradient(const MatrixField& a, const Vector& q, const Vector& p,
                                      double scale = kFirstDerivativeStep) {
  Vector g(q.size());
  Vector qp = q;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const double h = step_for(q(i), scale);
    qp(i) = q(i) + h;
    const Matrix ap = a(qp);
    qp(i) = q(i) - h;
    const Matrix am = a(qp);
    qp(i) = q(i);
    g(i) = p.dot((ap - am) * p) / (2.0 * h);
  }
  return g;
}

/// Cholesky factor of a symmetric positive definite matrix; throws SINGULAR_MASS otherwise.
inline Eigen::LLT<Matrix> factor_spd(const Matrix& a, const char* what) {
  Eigen::LLT<Matrix> llt(symmetrize(a));
  if (llt.info() != Eigen::Success || min_eigenvalue(a) < 1e-12) {
    throw Error(ErrorCode::SingularMass, std::string(what) + " is not positive definite");
  }
  return llt;
}

/// Orthonormal basis of the null space of `a` (columns), via SVD.
inline Matrix null_space(const Matrix& a, double tol = 1e-10) {
  const Eigen::Index n = a.cols();
  if (a.rows() == 0) return Matrix::Identity(n, n);
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  const double cutoff = tol * std::max(1.0, s.size() > 0 ? s(0) : 0.0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff) ++rank;
  }
  return svd.matrixV().rightCols(n - rank);
}

}  // namespace numerics
}  // namespace idapbc
