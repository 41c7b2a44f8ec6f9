#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "idapbc/errors.hpp"
#include "idapbc/numerics.hpp"

namespace idapbc {

using Params = std::map<std::string, double>;

/// Configuration q and momentum p of an n-DOF mechanical system.
struct PhaseState {
  Vector q;
  Vector p;

  Eigen::Index dof() const { return q.size(); }
};

/// Underactuated mechanical system in port-Hamiltonian form,
///   H(q, p) = 1/2 p^T M(q)^{-1} p + V(q),   qdot = dH/dp,   pdot = -dH/dq + G(q) u.
///
/// The left annihilator G_perp is always supplied analytically; its row scaling
/// enters the eta normalization and must be reproducible.
struct SystemModel {
  std::string name;
  int n = 0;
  int m = 0;
  MatrixField mass_matrix;
  ScalarField potential;
  std::optional<VectorField> potential_gradient;
  MatrixField input_map;
  MatrixField input_annihilator;
  Vector equilibrium;
  // Half-widths of the local sampling box around the equilibrium.
  Vector workspace_half_width;
  Params params;

  int underactuation() const { return n - m; }

  Matrix mass(const Vector& q) const {
    check_q(q);
    Matrix mq = mass_matrix(q);
    expect_shape(mq, n, n, "mass_matrix");
    return mq;
  }

  double potential_at(const Vector& q) const {
    check_q(q);
    return potential(q);
  }

  Vector grad_potential(const Vector& q) const {
    check_q(q);
    if (potential_gradient) {
      Vector g = (*potential_gradient)(q);
      if (g.size() != n) {
        throw Error(ErrorCode::DimensionMismatch, "potential_gradient returned size " +
                                                      std::to_string(g.size()) + ", expected " +
                                                      std::to_string(n));
      }
      return g;
    }
    return numerics::gradient(potential, q);
  }

  Matrix input(const Vector& q) const {
    check_q(q);
    Matrix g = input_map(q);
    expect_shape(g, n, m, "input_map");
    return g;
  }

  Matrix annihilator(const Vector& q) const {
    check_q(q);
    Matrix g = input_annihilator(q);
    expect_shape(g, n - m, n, "input_annihilator");
    return g;
  }

  void check_q(const Vector& q) const {
    if (q.size() != n) {
      throw Error(ErrorCode::DimensionMismatch, name + ": configuration has size " +
                                                    std::to_string(q.size()) + ", expected " +
                                                    std::to_string(n));
    }
  }

  void check_state(const PhaseState& x) const {
    check_q(x.q);
    if (x.p.size() != n) {
      throw Error(ErrorCode::DimensionMismatch, name + ": momentum has size " +
                                                    std::to_string(x.p.size()) + ", expected " +
                                                    std::to_string(n));
    }
  }

  static void expect_shape(const Matrix& a, Eigen::Index rows, Eigen::Index cols,
                           const char* what) {
    if (a.rows() != rows || a.cols() != cols) {
      throw Error(ErrorCode::DimensionMismatch,
                  std::string(what) + " returned " + std::to_string(a.rows()) + "x" +
                      std::to_string(a.cols()) + ", expected " + std::to_string(rows) + "x" +
                      std::to_string(cols));
    }
  }
};

/// One solution V_dh,i of the homogeneous potential matching equation.
struct BasisFunction {
  std::string name;
  ScalarField value;
  std::optional<VectorField> gradient;

  double operator()(const Vector& q) const { return value(q); }

  Vector grad(const Vector& q) const {
    if (gradient) return (*gradient)(q);
    return numerics::gradient(value, q);
  }
};

enum class J2Mode { Zero, Supplied, PointwiseSolve };

/// How the free skew-symmetric matrix J2(q, p) is obtained.
struct J2Policy {
  J2Mode mode = J2Mode::Zero;
  std::function<Matrix(const Vector&, const Vector&)> supplied;

  static J2Policy zero() { return {}; }
  static J2Policy pointwise_solve() { return {J2Mode::PointwiseSolve, {}}; }
  static J2Policy from(std::function<Matrix(const Vector&, const Vector&)> fn) {
    return {J2Mode::Supplied, std::move(fn)};
  }
};

inline std::string_view to_string(J2Mode mode) {
  switch (mode) {
    case J2Mode::Zero: return "ZERO";
    case J2Mode::Supplied: return "SUPPLIED";
    case J2Mode::PointwiseSolve: return "POINTWISE_SOLVE";
  }
  return "UNKNOWN";
}

/// Target closed loop: desired inertia, homogeneous potential
///   V_dh(q) = sum_i k_i/2 (V_dh,i(q) - V_dh,i(q_d))^2,
/// damping K_v and the J2 policy.
///
/// An optional non-homogeneous part V_dn can be attached (V_d = V_dn + V_dh); it is
/// only meaningful for residual and closed-loop comparisons, the stability
/// condition is defined for V_dh alone.
class ClosedLoopDesign {
 public:
  ClosedLoopDesign(MatrixField desired_inertia_inverse, std::vector<BasisFunction> basis,
                   const Vector& q_d, Vector gains, Matrix damping,
                   J2Policy j2 = J2Policy::zero(), Params free_params = {},
                   std::optional<BasisFunction> nonhomogeneous = std::nullopt)
      : md_inverse_(std::move(desired_inertia_inverse)),
        basis_(std::move(basis)),
        offsets_(static_cast<Eigen::Index>(basis_.size())),
        gains_(std::move(gains)),
        damping_(std::move(damping)),
        j2_(std::move(j2)),
        free_params_(std::move(free_params)),
        nonhomogeneous_(std::move(nonhomogeneous)) {
    if (gains_.size() != static_cast<Eigen::Index>(basis_.size())) {
      throw Error(ErrorCode::DimensionMismatch,
                  "one gain per basis function required (" + std::to_string(gains_.size()) +
                      " gains, " + std::to_string(basis_.size()) + " basis functions)");
    }
    if (damping_.rows() != damping_.cols()) {
      throw Error(ErrorCode::DimensionMismatch, "damping must be square");
    }
    for (std::size_t i = 0; i < basis_.size(); ++i) {
      offsets_(static_cast<Eigen::Index>(i)) = basis_[i](q_d);
    }
  }

  Matrix md_inverse(const Vector& q) const {
    Matrix a = md_inverse_(q);
    SystemModel::expect_shape(a, q.size(), q.size(), "desired_inertia_inverse");
    return a;
  }
  const MatrixField& md_inverse_field() const { return md_inverse_; }

  const std::vector<BasisFunction>& basis() const { return basis_; }
  const Vector& offsets() const { return offsets_; }
  const Vector& gains() const { return gains_; }
  const Matrix& damping() const { return damping_; }
  const J2Policy& j2_policy() const { return j2_; }
  const Params& free_params() const { return free_params_; }
  const std::optional<BasisFunction>& nonhomogeneous() const { return nonhomogeneous_; }

  /// V_dh(q), zero at the equilibrium used at construction.
  double vdh(const Vector& q) const {
    double v = 0.0;
    for (std::size_t i = 0; i < basis_.size(); ++i) {
      const auto idx = static_cast<Eigen::Index>(i);
      const double d = basis_[i](q) - offsets_(idx);
      v += 0.5 * gains_(idx) * d * d;
    }
    return v;
  }

  Vector grad_vdh(const Vector& q) const {
    Vector g = Vector::Zero(q.size());
    for (std::size_t i = 0; i < basis_.size(); ++i) {
      const auto idx = static_cast<Eigen::Index>(i);
      g += gains_(idx) * (basis_[i](q) - offsets_(idx)) * basis_[i].grad(q);
    }
    return g;
  }

  double vdn(const Vector& q) const { return nonhomogeneous_ ? (*nonhomogeneous_)(q) : 0.0; }

  Vector grad_vdn(const Vector& q) const {
    return nonhomogeneous_ ? nonhomogeneous_->grad(q) : Vector(Vector::Zero(q.size()));
  }

  double vd(const Vector& q) const { return vdn(q) + vdh(q); }
  Vector grad_vd(const Vector& q) const { return grad_vdn(q) + grad_vdh(q); }

  ClosedLoopDesign with_gains(Vector gains) const {
    if (gains.size() != gains_.size()) {
      throw Error(ErrorCode::DimensionMismatch, "gain vector size mismatch");
    }
    ClosedLoopDesign copy = *this;
    copy.gains_ = std::move(gains);
    return copy;
  }

  ClosedLoopDesign with_damping(Matrix damping) const {
    if (damping.rows() != damping_.rows() || damping.cols() != damping_.cols()) {
      throw Error(ErrorCode::DimensionMismatch, "damping size mismatch");
    }
    ClosedLoopDesign copy = *this;
    copy.damping_ = std::move(damping);
    return copy;
  }

  ClosedLoopDesign with_j2(J2Policy j2) const {
    ClosedLoopDesign copy = *this;
    copy.j2_ = std::move(j2);
    return copy;
  }

  ClosedLoopDesign with_basis(std::vector<BasisFunction> basis, const Vector& q_d,
                              Vector gains) const {
    return ClosedLoopDesign(md_inverse_, std::move(basis), q_d, std::move(gains), damping_,
                            j2_, free_params_, nonhomogeneous_);
  }

  ClosedLoopDesign with_nonhomogeneous(std::optional<BasisFunction> vdn) const {
    ClosedLoopDesign copy = *this;
    copy.nonhomogeneous_ = std::move(vdn);
    return copy;
  }

 private:
  MatrixField md_inverse_;
  std::vector<BasisFunction> basis_;
  Vector offsets_;
  Vector gains_;
  Matrix damping_;
  J2Policy j2_;
  Params free_params_;
  std::optional<BasisFunction> nonhomogeneous_;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct InvariantCheck {
  std::string name;
  bool passed = true;
  // Worst-case violation magnitude over the samples (0 when trivially satisfied).
  double worst = 0.0;
};

struct ValidationReport {
  std::vector<InvariantCheck> checks;

  bool passed() const {
    for (const auto& c : checks) {
      if (!c.passed) return false;
    }
    return true;
  }

  const InvariantCheck& check(std::string_view name) const {
    for (const auto& c : checks) {
      if (c.name == name) return c;
    }
    throw Error(ErrorCode::InvalidArgument, "no check named " + std::string(name));
  }
};

namespace validation {
inline constexpr double kAnnihilatorTol = 1e-10;
inline constexpr double kEquilibriumTol = 1e-8;
inline constexpr double kRankTol = 1e-10;
inline constexpr double kGradientRelTol = 1e-6;
inline constexpr double kSkewTol = 1e-12;
}  // namespace validation

/// Uniform samples in the model's workspace box around q_d.
inline std::vector<Vector> sample_workspace(const SystemModel& model, int count,
                                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int s = 0; s < count; ++s) {
    Vector q = model.equilibrium;
    for (int i = 0; i < model.n; ++i) q(i) += model.workspace_half_width(i) * unit(rng);
    out.push_back(std::move(q));
  }
  return out;
}

inline std::vector<PhaseState> sample_states(const SystemModel& model, int count,
                                             std::uint64_t seed, double momentum_scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<PhaseState> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int s = 0; s < count; ++s) {
    PhaseState x{model.equilibrium, Vector(model.n)};
    for (int i = 0; i < model.n; ++i) x.q(i) += model.workspace_half_width(i) * unit(rng);
    for (int i = 0; i < model.n; ++i) x.p(i) = momentum_scale * unit(rng);
    out.push_back(std::move(x));
  }
  return out;
}

/// Checks the structural invariants of a model on the given configurations.
/// Throws DIMENSION_MISMATCH on wrongly shaped maps and SINGULAR_MASS when M(q)
/// has an eigenvalue below 1e-12; every other invariant is reported.
inline ValidationReport validate_model(const SystemModel& model,
                                       const std::vector<Vector>& samples) {
  if (samples.empty()) {
    throw Error(ErrorCode::InvalidArgument, "validate_model needs at least one sample");
  }
  if (model.m <= 0 || model.m >= model.n) {
    throw Error(ErrorCode::DimensionMismatch, "require 0 < m < n");
  }
  if (model.equilibrium.size() != model.n) {
    throw Error(ErrorCode::DimensionMismatch, "equilibrium has wrong size");
  }

  InvariantCheck spd{"mass_spd"};
  InvariantCheck symmetric{"mass_symmetric"};
  InvariantCheck rank{"input_full_rank"};
  InvariantCheck annihilates{"annihilator_times_input_zero"};
  InvariantCheck grad{"potential_gradient_consistent"};

  for (const Vector& q : samples) {
    const Matrix mq = model.mass(q);
    const double asym = (mq - mq.transpose()).cwiseAbs().maxCoeff();
    symmetric.worst = std::max(symmetric.worst, asym);
    const double lmin = numerics::min_eigenvalue(mq);
    if (lmin < 1e-12) {
      throw Error(ErrorCode::SingularMass, model.name + ": M(q) has eigenvalue " +
                                               std::to_string(lmin));
    }
    if (lmin <= numerics::kPositiveDefiniteTol) {
      spd.passed = false;
      spd.worst = std::max(spd.worst, numerics::kPositiveDefiniteTol - lmin);
    }

    const Matrix g = model.input(q);
    Eigen::JacobiSVD<Matrix> svd(g);
    const double smin = svd.singularValues()(model.m - 1);
    if (smin <= validation::kRankTol) {
      rank.passed = false;
      rank.worst = std::max(rank.worst, validation::kRankTol - smin);
    }

    const Matrix gp = model.annihilator(q);
    const double prod = (gp * g).cwiseAbs().maxCoeff();
    annihilates.worst = std::max(annihilates.worst, prod);

    if (model.potential_gradient) {
      const Vector analytic = (*model.potential_gradient)(q);
      const Vector fd = numerics::gradient(model.potential, q);
      const double rel = (analytic - fd).norm() / std::max(1.0, analytic.norm());
      grad.worst = std::max(grad.worst, rel);
    }
  }
  symmetric.passed = symmetric.worst <= 1e-12;
  annihilates.passed = annihilates.worst < validation::kAnnihilatorTol;
  grad.passed = grad.worst < validation::kGradientRelTol;

  const Vector& qd = model.equilibrium;
  const Matrix gpd = model.annihilator(qd);
  InvariantCheck rows{"annihilator_rows_nonzero"};
  for (Eigen::Index i = 0; i < gpd.rows(); ++i) {
    const double norm = gpd.row(i).norm();
    if (norm <= 1e-12) {
      rows.passed = false;
      rows.worst = std::max(rows.worst, 1e-12 - norm);
    }
  }
  InvariantCheck equilibrium{"equilibrium_on_manifold"};
  equilibrium.worst = (gpd * model.grad_potential(qd)).cwiseAbs().maxCoeff();
  equilibrium.passed = equilibrium.worst < validation::kEquilibriumTol;

  return {{spd, symmetric, rank, annihilates, grad, rows, equilibrium}};
}

/// Design-side invariants: M_d^{-1} SPD on the samples, supplied J2 skew,
/// positive gains and positive definite damping.
inline ValidationReport validate_design(const SystemModel& model,
                                        const ClosedLoopDesign& design,
                                        const std::vector<Vector>& samples) {
  InvariantCheck md{"desired_inertia_spd"};
  InvariantCheck skew{"j2_skew"};
  for (const Vector& q : samples) {
    const Matrix a = design.md_inverse(q);
    const double lmin = a.allFinite() ? numerics::min_eigenvalue(a) : -1.0;
    if (!(lmin > numerics::kPositiveDefiniteTol)) {
      md.passed = false;
      md.worst = std::max(md.worst, numerics::kPositiveDefiniteTol - lmin);
    }
    if (design.j2_policy().mode == J2Mode::Supplied) {
      Vector p = Vector::Ones(model.n);
      const Matrix j2 = design.j2_policy().supplied(q, p);
      skew.worst = std::max(skew.worst, (j2 + j2.transpose()).cwiseAbs().maxCoeff());
    }
  }
  skew.passed = skew.worst < validation::kSkewTol;

  InvariantCheck gains{"gains_positive"};
  if (design.gains().size() > 0) {
    const double gmin = design.gains().minCoeff();
    gains.passed = gmin > 0.0;
    gains.worst = gains.passed ? 0.0 : -gmin;
  }
  InvariantCheck damping{"damping_spd"};
  if (design.damping().rows() != model.m) {
    throw Error(ErrorCode::DimensionMismatch, "damping must be m x m");
  }
  const double dmin = numerics::min_eigenvalue(design.damping());
  damping.passed = dmin > 0.0;
  damping.worst = damping.passed ? 0.0 : -dmin;
  return {{md, skew, gains, damping}};
}

}  // namespace idapbc
