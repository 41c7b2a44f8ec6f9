#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "idapbc/matching.hpp"
#include "idapbc/model.hpp"

namespace idapbc {

/// Sign pattern of the 2x2 eta Hessian. PositiveDefinite covers the case where
/// no gain is needed at all; NegDef means M_d must be redesigned.
enum class Scenario { A1, A2, A3, NegDef, PositiveDefinite };

inline std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::A1: return "A1";
    case Scenario::A2: return "A2";
    case Scenario::A3: return "A3";
    case Scenario::NegDef: return "NEGDEF";
    case Scenario::PositiveDefinite: return "POSDEF";
  }
  return "UNKNOWN";
}

struct ConditionReport {
  Matrix vdh_hessian;
  Matrix eta_hessian;
  Vector total_eigenvalues;  // ascending
  double tol = 0.0;
  bool satisfied = false;
  std::optional<Scenario> scenario;
  std::optional<double> rho;
  std::optional<double> k_min;

  double min_eigenvalue() const {
    return total_eigenvalues.size() ? total_eigenvalues(0) : 0.0;
  }
};

struct TwoDofDecomposition {
  Matrix alpha;
  Matrix beta;
};

struct GainBound {
  Scenario scenario;
  double rho;
  double k_min;
};

namespace condition {
inline constexpr double kDefaultTol = 1e-9;
inline constexpr double kEquilibriumTol = 1e-6;
}  // namespace condition

/// Row covector w(q) = sum_i (c_i / |G_i_perp|^2) G_i_perp M_d^{-1} M whose line
/// integral is eta. Vanishes wherever G_perp grad V = 0.
inline RowVector eta_covector(const SystemModel& model, const ClosedLoopDesign& design,
                              const Vector& q) {
  const InertiaPair inertia(model, design, q);
  const Matrix gp = model.annihilator(q);
  const Vector weights = matching::unmatched_weights(model, design, inertia, gp, q);
  const Matrix md_inv_m = inertia.md_inverse() * inertia.mass();
  RowVector w = RowVector::Zero(model.n);
  for (Eigen::Index i = 0; i < gp.rows(); ++i) w += weights(i) * gp.row(i) * md_inv_m;
  return w;
}

/// Symmetrized Jacobian of eta_covector at the equilibrium, assembled from the
/// gradients of the scalar loads c_i = G_i_perp grad V. Because every c_i vanishes
/// at q_d, derivatives of the remaining factors drop out.
inline Matrix eta_hessian(const SystemModel& model, const ClosedLoopDesign& design,
                          const Vector& q_d) {
  if (design.nonhomogeneous()) {
    throw Error(ErrorCode::InvalidDesign,
                "stability condition is defined for homogeneous-only potentials");
  }
  const Matrix gp = model.annihilator(q_d);
  const Vector loads = gp * model.grad_potential(q_d);
  if (loads.cwiseAbs().maxCoeff() > condition::kEquilibriumTol) {
    throw Error(ErrorCode::NotAtEquilibrium,
                "G_perp grad V(q_d) = " + std::to_string(loads.cwiseAbs().maxCoeff()));
  }
  const InertiaPair inertia(model, design, q_d);
  const Matrix md_inv_m = inertia.md_inverse() * inertia.mass();
  // Nested differencing needs a coarser step when grad V is itself a difference.
  const double step = model.potential_gradient ? numerics::kFirstDerivativeStep : 1e-4;

  Matrix jac = Matrix::Zero(model.n, model.n);
  for (Eigen::Index i = 0; i < gp.rows(); ++i) {
    const double norm2 = gp.row(i).squaredNorm();
    if (norm2 <= 1e-24) {
      throw Error(ErrorCode::ZeroAnnihilatorRow, "row " + std::to_string(i) + " of G_perp vanishes");
    }
    const ScalarField load = [&model, i](const Vector& q) {
      return model.annihilator(q).row(i).dot(model.grad_potential(q));
    };
    const Vector grad_load = numerics::gradient(load, q_d, step);
    const RowVector direction = gp.row(i) * md_inv_m / norm2;
    jac += direction.transpose() * grad_load.transpose();
  }
  return numerics::symmetrize(jac);
}

/// sum_i k_i grad V_dh,i grad V_dh,i^T at q_d; the curvature of each V_dh,i is
/// multiplied by V_dh,i(q_d) - V*_dh,i = 0 and drops out.
inline Matrix vdh_hessian(const ClosedLoopDesign& design, const Vector& q_d) {
  Matrix h = Matrix::Zero(q_d.size(), q_d.size());
  for (std::size_t i = 0; i < design.basis().size(); ++i) {
    const Vector g = design.basis()[i].grad(q_d);
    h += design.gains()(static_cast<Eigen::Index>(i)) * g * g.transpose();
  }
  return h;
}

/// alpha = grad V_dh,1 grad V_dh,1^T and beta = eta Hessian for n = 2, m = 1.
inline TwoDofDecomposition decompose_two_dof(const SystemModel& model,
                                             const ClosedLoopDesign& design,
                                             const Vector& q_d) {
  if (model.n != 2 || model.m != 1 || design.basis().size() != 1) {
    throw Error(ErrorCode::WrongDimensions,
                "two-DOF decomposition needs n = 2, m = 1 and a single basis function");
  }
  const Vector g = design.basis()[0].grad(q_d);
  return {g * g.transpose(), eta_hessian(model, design, q_d)};
}

/// Classifies a symmetric 2x2 beta; overlaps resolve as A1 > A2 > A3.
inline Scenario classify_scenario(const Matrix& beta) {
  if (beta.rows() != 2 || beta.cols() != 2) {
    throw Error(ErrorCode::WrongDimensions, "scenario classification needs a 2x2 matrix");
  }
  const double b1 = beta(0, 0);
  const double b2 = 0.5 * (beta(0, 1) + beta(1, 0));
  const double b3 = beta(1, 1);
  const double det = b1 * b3 - b2 * b2;
  if (b1 <= 0.0 && b3 <= 0.0 && det <= 0.0) return Scenario::A1;
  if (b1 >= 0.0 && b3 >= 0.0 && det <= 0.0) return Scenario::A2;
  if (b1 * b3 <= 0.0) return Scenario::A3;
  if (b1 < 0.0) return Scenario::NegDef;
  return Scenario::PositiveDefinite;
}

/// rho = alpha_1 beta_3 + alpha_3 beta_1 - 2 alpha_2 beta_2.
inline double rho_of(const Matrix& alpha, const Matrix& beta) {
  return alpha(0, 0) * beta(1, 1) + alpha(1, 1) * beta(0, 0) -
         2.0 * alpha(0, 1) * beta(0, 1);
}

/// Closed-form lower bound on k such that k alpha + beta > 0 for rank-one alpha.
/// For k > k_min the determinant k rho + det(beta) and the diagonal are positive.
inline GainBound gain_lower_bound(const Matrix& alpha, const Matrix& beta) {
  const Scenario scenario = classify_scenario(beta);
  if (scenario == Scenario::NegDef) {
    throw Error(ErrorCode::NegativeDefiniteEta,
                "eta Hessian is negative definite; the desired inertia must be altered");
  }
  const double rho = rho_of(alpha, beta);
  if (scenario == Scenario::PositiveDefinite) return {scenario, rho, 0.0};
  if (!(rho > 0.0)) {
    throw Error(ErrorCode::RhoNotPositive,
                "rho = " + std::to_string(rho) + " must be positive; change the free parameters");
  }
  const double b1 = beta(0, 0);
  const double b2 = beta(0, 1);
  const double b3 = beta(1, 1);
  const double det_bound = (b2 * b2 - b1 * b3) / rho;
  if (scenario == Scenario::A2) return {scenario, rho, det_bound};

  double k_min = det_bound;
  if (alpha(0, 0) > 0.0) k_min = std::max(k_min, -b1 / alpha(0, 0));
  if (alpha(1, 1) > 0.0) k_min = std::max(k_min, -b3 / alpha(1, 1));
  return {scenario, rho, k_min};
}

/// Stability condition: lambda_min(Hess V_dh + Hess eta) > tol at q_d.
inline ConditionReport check_condition(const SystemModel& model, const ClosedLoopDesign& design,
                                       const Vector& q_d, double tol = condition::kDefaultTol) {
  ConditionReport report;
  report.tol = tol;
  report.vdh_hessian = vdh_hessian(design, q_d);
  report.eta_hessian = eta_hessian(model, design, q_d);
  report.total_eigenvalues = numerics::symmetric_eigenvalues(report.vdh_hessian + report.eta_hessian);
  report.satisfied = report.min_eigenvalue() > tol;

  if (model.n == 2 && model.m == 1 && design.basis().size() == 1) {
    const auto parts = decompose_two_dof(model, design, q_d);
    report.scenario = classify_scenario(parts.beta);
    if (*report.scenario != Scenario::NegDef) {
      report.rho = rho_of(parts.alpha, parts.beta);
      try {
        report.k_min = gain_lower_bound(parts.alpha, parts.beta).k_min;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::RhoNotPositive) throw;
      }
    }
  }
  return report;
}

/// Condition check for directly supplied alpha/beta matrices (k alpha + beta > tol).
inline ConditionReport check_condition_matrices(const Matrix& alpha, const Matrix& beta, double k,
                                                double tol = condition::kDefaultTol) {
  ConditionReport report;
  report.tol = tol;
  report.vdh_hessian = k * alpha;
  report.eta_hessian = beta;
  report.total_eigenvalues = numerics::symmetric_eigenvalues(report.vdh_hessian + beta);
  report.satisfied = report.min_eigenvalue() > tol;
  if (alpha.rows() == 2) {
    report.scenario = classify_scenario(beta);
    if (*report.scenario != Scenario::NegDef) {
      report.rho = rho_of(alpha, beta);
      try {
        report.k_min = gain_lower_bound(alpha, beta).k_min;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::RhoNotPositive) throw;
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Multi-gain feasibility
// ---------------------------------------------------------------------------

struct GainSearchOptions {
  double lower = 1e-2;
  double upper = 1e6;
  std::optional<Vector> lower_bounds;  // per gain, overrides `lower`
  std::optional<Vector> upper_bounds;  // per gain, overrides `upper`
  int points_per_decade = 1;
  double bisection_rel_tol = 1e-6;
  double tol = condition::kDefaultTol;
  // Tensor grids larger than this fall back to coordinate-wise grid descent.
  std::size_t max_grid_size = 200000;
};

struct GainSearchResult {
  bool feasible = false;
  Vector gains;
  double min_eigenvalue = 0.0;
  // Unit vector with v^T eta_hessian v <= tol and grad V_dh,i(q_d)^T v = 0 for all i.
  std::optional<Vector> certificate;
  std::string message;
};

namespace condition {

inline std::vector<double> log_grid(double lo, double hi, int per_decade) {
  std::vector<double> grid{lo};
  const double step = 1.0 / std::max(1, per_decade);
  double e = std::ceil(std::log10(lo) * per_decade) / per_decade;
  for (; e < std::log10(hi); e += step) {
    const double v = std::pow(10.0, e);
    if (v > lo * (1 + 1e-12)) grid.push_back(v);
  }
  if (hi > grid.back() * (1 + 1e-12)) grid.push_back(hi);
  return grid;
}

}  // namespace condition

/// Finds gains with lambda_min(sum_i k_i g_i g_i^T + eta_hessian) > tol.
///
/// lambda_min is nondecreasing in every k_i, so a log grid locates a feasible
/// corner and per-gain bisection then pushes each gain down to its feasibility
/// face. Infeasibility in the common kernel of the g_i is reported with a
/// certificate direction.
inline GainSearchResult feasible_gains_search(const SystemModel& model,
                                              const ClosedLoopDesign& design, const Vector& q_d,
                                              const GainSearchOptions& opts = {}) {
  const Eigen::Index count = static_cast<Eigen::Index>(design.basis().size());
  const Matrix eta = eta_hessian(model, design, q_d);
  std::vector<Vector> grads;
  Matrix stacked(count, model.n);
  for (Eigen::Index i = 0; i < count; ++i) {
    grads.push_back(design.basis()[static_cast<std::size_t>(i)].grad(q_d));
    stacked.row(i) = grads.back().transpose();
  }
  const Vector lo = opts.lower_bounds ? *opts.lower_bounds : Vector::Constant(count, opts.lower);
  const Vector hi = opts.upper_bounds ? *opts.upper_bounds : Vector::Constant(count, opts.upper);
  if (lo.size() != count || hi.size() != count) {
    throw Error(ErrorCode::DimensionMismatch, "gain bounds must have one entry per basis function");
  }

  auto lambda_min = [&](const Vector& k) {
    Matrix h = eta;
    for (Eigen::Index i = 0; i < count; ++i) h += k(i) * grads[static_cast<std::size_t>(i)] *
                                                  grads[static_cast<std::size_t>(i)].transpose();
    return numerics::min_eigenvalue(h);
  };
  auto feasible = [&](const Vector& k) { return lambda_min(k) > opts.tol; };

  GainSearchResult result;
  const Matrix kernel = numerics::null_space(stacked);
  if (kernel.cols() > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> restricted(kernel.transpose() * eta * kernel);
    if (restricted.eigenvalues()(0) <= opts.tol) {
      Vector v = kernel * restricted.eigenvectors().col(0);
      result.certificate = v / v.norm();
      result.gains = hi;
      result.min_eigenvalue = lambda_min(hi);
      result.message = "eta Hessian has curvature " + std::to_string(restricted.eigenvalues()(0)) +
                       " along a direction no gain can reach";
      return result;
    }
  }
  if (!feasible(hi)) {
    result.gains = hi;
    result.min_eigenvalue = lambda_min(hi);
    result.message = "infeasible within the gain upper bounds";
    return result;
  }

  std::vector<std::vector<double>> grids;
  std::size_t total = 1;
  for (Eigen::Index i = 0; i < count; ++i) {
    grids.push_back(condition::log_grid(lo(i), hi(i), opts.points_per_decade));
    total *= grids.back().size();
  }

  Vector best = hi;
  if (total <= opts.max_grid_size) {
    double best_score = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> idx(static_cast<std::size_t>(count), 0);
    Vector k(count);
    for (std::size_t flat = 0; flat < total; ++flat) {
      std::size_t rem = flat;
      double score = 0.0;
      for (Eigen::Index i = 0; i < count; ++i) {
        const auto& g = grids[static_cast<std::size_t>(i)];
        k(i) = g[rem % g.size()];
        rem /= g.size();
        score += std::log(k(i));
      }
      if (score < best_score - 1e-12 && feasible(k)) {
        best_score = score;
        best = k;
      }
    }
  } else {
    for (Eigen::Index i = 0; i < count; ++i) {
      for (double v : grids[static_cast<std::size_t>(i)]) {
        Vector trial = best;
        trial(i) = v;
        if (feasible(trial)) {
          best = trial;
          break;
        }
      }
    }
  }

  // Bisection in log space towards each gain's feasibility face.
  for (Eigen::Index i = 0; i < count; ++i) {
    Vector trial = best;
    trial(i) = lo(i);
    if (feasible(trial)) {
      best = trial;
      continue;
    }
    double bad = std::log(lo(i));
    double good = std::log(best(i));
    double good_value = best(i);
    while (good - bad > opts.bisection_rel_tol) {
      const double mid = 0.5 * (good + bad);
      trial(i) = std::exp(mid);
      if (feasible(trial)) {
        good = mid;
        good_value = trial(i);
      } else {
        bad = mid;
      }
    }
    best(i) = good_value;
  }

  result.feasible = true;
  result.gains = best;
  result.min_eigenvalue = lambda_min(best);
  result.message = "feasible";
  return result;
}

}  // namespace idapbc
