#pragma once

#include <optional>
#include <vector>

#include "idapbc/model.hpp"

namespace idapbc {

/// Residual of a matching equation, one entry per row of G_perp.
struct ResidualVector {
  Vector values;
  Vector q;
  std::optional<Vector> p;

  double max_abs() const { return values.size() ? values.cwiseAbs().maxCoeff() : 0.0; }
  double norm() const { return values.norm(); }
};

/// M(q) and M_d^{-1}(q) factored once for repeated solves.
class InertiaPair {
 public:
  InertiaPair(const SystemModel& model, const ClosedLoopDesign& design, const Vector& q)
      : mass_(model.mass(q)),
        md_inverse_(design.md_inverse(q)),
        mass_llt_(numerics::factor_spd(mass_, "M(q)")),
        md_inverse_llt_(numerics::factor_spd(md_inverse_, "M_d^{-1}(q)")) {}

  const Matrix& mass() const { return mass_; }
  const Matrix& md_inverse() const { return md_inverse_; }

  Vector mass_inv(const Vector& x) const { return mass_llt_.solve(x); }
  Matrix mass_inv(const Matrix& x) const { return mass_llt_.solve(x); }
  /// M_d x, with M_d the inverse of the stored M_d^{-1}.
  Vector md(const Vector& x) const { return md_inverse_llt_.solve(x); }
  Vector md_mass_inv(const Vector& x) const { return md(mass_inv(x)); }

 private:
  Matrix mass_;
  Matrix md_inverse_;
  Eigen::LLT<Matrix> mass_llt_;
  Eigen::LLT<Matrix> md_inverse_llt_;
};

namespace matching {

inline constexpr double kResidualTol = 1e-8;
inline constexpr double kDegenerateCoefficient = 1e-12;

inline MatrixField mass_inverse_field(const SystemModel& model) {
  return [&model](const Vector& q) -> Matrix {
    const auto llt = numerics::factor_spd(model.mass(q), "M(q)");
    return llt.solve(Matrix::Identity(model.n, model.n));
  };
}

/// The J2-free part of the kinetic matching equation,
///   grad_q(p^T M^{-1} p) - M_d M^{-1} grad_q(p^T M_d^{-1} p),
/// together with M_d^{-1} p.
struct KineticTerms {
  Vector drift;
  Vector md_inv_p;
};

inline KineticTerms kinetic_terms(const SystemModel& model, const ClosedLoopDesign& design,
                                  const InertiaPair& inertia, const Vector& q, const Vector& p) {
  const Vector grad_open = numerics::quadratic_form_gradient(mass_inverse_field(model), q, p);
  const Vector grad_desired =
      numerics::quadratic_form_gradient(design.md_inverse_field(), q, p);
  return {grad_open - inertia.md_mass_inv(grad_desired), inertia.md_inverse() * p};
}

/// Canonical basis E_ab - E_ba (a < b) of n x n skew-symmetric matrices.
inline std::vector<Matrix> skew_basis(int n) {
  std::vector<Matrix> basis;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      Matrix omega = Matrix::Zero(n, n);
      omega(a, b) = 1.0;
      omega(b, a) = -1.0;
      basis.push_back(std::move(omega));
    }
  }
  return basis;
}

}  // namespace matching

/// Kinetic matching residual for an explicit J2.
inline ResidualVector kinetic_residual(const SystemModel& model, const ClosedLoopDesign& design,
                                       const Vector& q, const Vector& p, const Matrix& j2) {
  model.check_state({q, p});
  const InertiaPair inertia(model, design, q);
  const auto terms = matching::kinetic_terms(model, design, inertia, q, p);
  return {model.annihilator(q) * (terms.drift + 2.0 * j2 * terms.md_inv_p), q, p};
}

/// Solves the kinetic matching equation pointwise for a skew J2 when n - m = 1.
///
/// With J2 = sum_k j_k Omega_k the equation is the scalar linear relation
/// r0 + c^T j = 0; the minimal-norm solution j = -r0 c / |c|^2 is returned.
inline Matrix solve_j2_pointwise(const SystemModel& model, const ClosedLoopDesign& design,
                                 const Vector& q, const Vector& p) {
  model.check_state({q, p});
  if (model.underactuation() != 1) {
    throw Error(ErrorCode::WrongDimensions,
                "pointwise J2 solve requires underactuation degree one, got " +
                    std::to_string(model.underactuation()));
  }
  const InertiaPair inertia(model, design, q);
  const auto terms = matching::kinetic_terms(model, design, inertia, q, p);
  const RowVector gp = model.annihilator(q).row(0);
  const double r0 = gp.dot(terms.drift);

  const auto basis = matching::skew_basis(model.n);
  Vector c(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t k = 0; k < basis.size(); ++k) {
    c(static_cast<Eigen::Index>(k)) = 2.0 * gp.dot(basis[k] * terms.md_inv_p);
  }
  const double c2 = c.squaredNorm();
  Matrix j2 = Matrix::Zero(model.n, model.n);
  if (std::sqrt(c2) < matching::kDegenerateCoefficient) {
    if (std::abs(r0) < matching::kDegenerateCoefficient) return j2;
    throw Error(ErrorCode::NoSolution, "kinetic equation has vanishing J2 coefficient but residual " +
                                           std::to_string(r0));
  }
  const Vector j = -r0 * c / c2;
  for (std::size_t k = 0; k < basis.size(); ++k) j2 += j(static_cast<Eigen::Index>(k)) * basis[k];
  return j2;
}

/// J2 as prescribed by the design's policy.
inline Matrix resolve_j2(const SystemModel& model, const ClosedLoopDesign& design,
                         const Vector& q, const Vector& p) {
  switch (design.j2_policy().mode) {
    case J2Mode::Zero: return Matrix::Zero(model.n, model.n);
    case J2Mode::Supplied: {
      Matrix j2 = design.j2_policy().supplied(q, p);
      SystemModel::expect_shape(j2, model.n, model.n, "J2");
      return j2;
    }
    case J2Mode::PointwiseSolve: return solve_j2_pointwise(model, design, q, p);
  }
  return Matrix::Zero(model.n, model.n);
}

/// Kinetic matching residual with J2 from the design's policy.
inline ResidualVector kinetic_residual(const SystemModel& model, const ClosedLoopDesign& design,
                                       const Vector& q, const Vector& p) {
  return kinetic_residual(model, design, q, p, resolve_j2(model, design, q, p));
}

/// G_perp { grad V - M_d M^{-1} grad V_d } with V_d = V_dn + V_dh.
inline ResidualVector potential_residual(const SystemModel& model, const ClosedLoopDesign& design,
                                         const Vector& q) {
  const InertiaPair inertia(model, design, q);
  const Vector r = model.grad_potential(q) - inertia.md_mass_inv(design.grad_vd(q));
  return {model.annihilator(q) * r, q, std::nullopt};
}

/// G_perp M_d M^{-1} grad V_dh for the gain-weighted composite V_dh.
inline ResidualVector homogeneous_residual(const SystemModel& model,
                                           const ClosedLoopDesign& design, const Vector& q) {
  const InertiaPair inertia(model, design, q);
  return {model.annihilator(q) * inertia.md_mass_inv(design.grad_vdh(q)), q, std::nullopt};
}

/// G_perp M_d M^{-1} grad V_dh,i for each basis function separately (unit gain).
inline std::vector<ResidualVector> basis_residuals(const SystemModel& model,
                                                   const ClosedLoopDesign& design,
                                                   const Vector& q) {
  const InertiaPair inertia(model, design, q);
  const Matrix gp = model.annihilator(q);
  std::vector<ResidualVector> out;
  for (const auto& f : design.basis()) {
    out.push_back({gp * inertia.md_mass_inv(f.grad(q)), q, std::nullopt});
  }
  return out;
}

namespace matching {

/// Per-row weights c_i / |G_i_perp|^2 with c_i = G_i_perp (grad V - M_d M^{-1} grad V_dn).
/// Without a non-homogeneous part c_i = G_i_perp grad V, the unactuated gravity load.
inline Vector unmatched_weights(const SystemModel& model, const ClosedLoopDesign& design,
                                const InertiaPair& inertia, const Matrix& annihilator,
                                const Vector& q) {
  Vector load = model.grad_potential(q);
  if (design.nonhomogeneous()) load -= inertia.md_mass_inv(design.grad_vdn(q));
  Vector w(annihilator.rows());
  for (Eigen::Index i = 0; i < annihilator.rows(); ++i) {
    const double norm2 = annihilator.row(i).squaredNorm();
    if (norm2 <= 1e-24) {
      throw Error(ErrorCode::ZeroAnnihilatorRow,
                  "row " + std::to_string(i) + " of G_perp vanishes");
    }
    w(i) = annihilator.row(i).dot(load) / norm2;
  }
  return w;
}

}  // namespace matching

/// The force sum_i c_i G_i_perp^T / |G_i_perp|^2 left in the closed loop when only
/// the homogeneous potential is shaped.
inline Vector unmatched_force(const SystemModel& model, const ClosedLoopDesign& design,
                              const Vector& q) {
  const InertiaPair inertia(model, design, q);
  const Matrix gp = model.annihilator(q);
  return gp.transpose() * matching::unmatched_weights(model, design, inertia, gp, q);
}

}  // namespace idapbc
