#pragma once

#include "idapbc/condition.hpp"
#include "idapbc/matching.hpp"
#include "idapbc/model.hpp"

namespace idapbc {

struct ControlOutput {
  Vector u;
  Matrix j2;
  double grad_h_norm = 0.0;
  double grad_hd_norm = 0.0;
};

/// Time derivative of a phase state.
struct PhaseRate {
  Vector q_dot;
  Vector p_dot;
};

namespace control {

inline constexpr double kMaxGramCondition = 1e12;

/// grad_q H and grad_q H_d at (q, p).
struct EnergyGradients {
  Vector grad_q_h;
  Vector grad_q_hd;
  Vector grad_p_hd;
};

inline EnergyGradients energy_gradients(const SystemModel& model, const ClosedLoopDesign& design,
                                        const InertiaPair& inertia, const Vector& q,
                                        const Vector& p) {
  const Vector kin_open =
      numerics::quadratic_form_gradient(matching::mass_inverse_field(model), q, p);
  const Vector kin_desired = numerics::quadratic_form_gradient(design.md_inverse_field(), q, p);
  return {0.5 * kin_open + model.grad_potential(q), 0.5 * kin_desired + design.grad_vd(q),
          inertia.md_inverse() * p};
}

}  // namespace control

/// Desired Hamiltonian H_d = 1/2 p^T M_d^{-1} p + V_d(q).
inline double desired_hamiltonian(const ClosedLoopDesign& design, const Vector& q,
                                  const Vector& p) {
  return 0.5 * p.dot(design.md_inverse(q) * p) + design.vd(q);
}

/// Energy-shaping control
///   u = (G^T G)^{-1} G^T (grad_q H - M_d M^{-1} grad_q H_d + J2 grad_p H_d) - K_v G^T grad_p H_d.
inline ControlOutput control_input(const SystemModel& model, const ClosedLoopDesign& design,
                                   const Vector& q, const Vector& p) {
  model.check_state({q, p});
  const InertiaPair inertia(model, design, q);
  const Matrix g = model.input(q);
  const Matrix gram = g.transpose() * g;
  const Vector sv = Eigen::JacobiSVD<Matrix>(gram).singularValues();
  if (!(sv(sv.size() - 1) > 0.0) || sv(0) / sv(sv.size() - 1) > control::kMaxGramCondition) {
    throw Error(ErrorCode::SingularGram, "G^T G is ill-conditioned");
  }
  const auto grads = control::energy_gradients(model, design, inertia, q, p);
  const Matrix j2 = resolve_j2(model, design, q, p);
  const Vector shaped =
      grads.grad_q_h - inertia.md_mass_inv(grads.grad_q_hd) + j2 * grads.grad_p_hd;
  ControlOutput out;
  out.u = gram.ldlt().solve(g.transpose() * shaped) -
          design.damping() * g.transpose() * grads.grad_p_hd;
  out.j2 = j2;
  out.grad_h_norm = grads.grad_q_h.norm();
  out.grad_hd_norm = grads.grad_q_hd.norm();
  return out;
}

/// Open-loop port-Hamiltonian dynamics: qdot = M^{-1} p, pdot = -grad_q H + G u.
inline PhaseRate open_loop_rhs(const SystemModel& model, const Vector& q, const Vector& p,
                               const Vector& u) {
  model.check_state({q, p});
  if (u.size() != model.m) {
    throw Error(ErrorCode::DimensionMismatch, "input has size " + std::to_string(u.size()));
  }
  const auto llt = numerics::factor_spd(model.mass(q), "M(q)");
  const Vector kin = numerics::quadratic_form_gradient(matching::mass_inverse_field(model), q, p);
  return {llt.solve(p), -(0.5 * kin + model.grad_potential(q)) + model.input(q) * u};
}

/// Target closed loop with the unmatched force left in the unactuated directions:
///   qdot = M^{-1} M_d grad_p H_d,
///   pdot = -M_d M^{-1} grad_q H_d + (J2 - G K_v G^T) grad_p H_d - sum_i c_i G_i_perp^T / |G_i_perp|^2.
inline PhaseRate target_rhs(const SystemModel& model, const ClosedLoopDesign& design,
                            const Vector& q, const Vector& p) {
  model.check_state({q, p});
  const InertiaPair inertia(model, design, q);
  const auto grads = control::energy_gradients(model, design, inertia, q, p);
  const Matrix g = model.input(q);
  const Matrix j2 = resolve_j2(model, design, q, p);
  const Matrix gp = model.annihilator(q);
  const Vector weights = matching::unmatched_weights(model, design, inertia, gp, q);

  PhaseRate rate;
  rate.q_dot = inertia.mass_inv(Vector(inertia.md(grads.grad_p_hd)));
  rate.p_dot = -inertia.md_mass_inv(grads.grad_q_hd) +
               (j2 - g * design.damping() * g.transpose()) * grads.grad_p_hd -
               gp.transpose() * weights;
  return rate;
}

/// Lyapunov function H_d + eta, with eta supplied by the caller's running integral.
inline double lyapunov(const SystemModel& model, const ClosedLoopDesign& design, const Vector& q,
                       const Vector& p, double eta_accumulated) {
  model.check_state({q, p});
  return desired_hamiltonian(design, q, p) + eta_accumulated;
}

/// -(M_d^{-1} p)^T G K_v G^T (M_d^{-1} p); never positive for K_v >= 0.
inline double lyapunov_rate(const SystemModel& model, const ClosedLoopDesign& design,
                            const Vector& q, const Vector& p) {
  model.check_state({q, p});
  const Vector y = model.input(q).transpose() * (design.md_inverse(q) * p);
  return -y.dot(numerics::symmetrize(design.damping()) * y);
}

/// d eta / dt = w(q) qdot.
inline double eta_rate(const SystemModel& model, const ClosedLoopDesign& design, const Vector& q,
                       const Vector& q_dot) {
  return eta_covector(model, design, q).dot(q_dot);
}

}  // namespace idapbc
