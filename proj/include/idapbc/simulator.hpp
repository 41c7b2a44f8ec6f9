#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "idapbc/condition.hpp"
#include "idapbc/control.hpp"
#include "idapbc/integrator.hpp"
#include "idapbc/model.hpp"

namespace idapbc {

struct SimOptions {
  double horizon = 10.0;
  double rtol = 1e-9;
  double atol = 1e-11;
  double max_step = 0.05;
  double sample_interval = 0.01;
  // Simulation stops once |q_i - q_d,i| exceeds this for any coordinate.
  double escape_half_width = 2.0;
  // Skip the stability-condition pre-check (no warning is produced then).
  bool check_condition_first = true;
};

enum class SimStatus { Completed, StateEscape, IntegrationFailure };

inline std::string_view to_string(SimStatus s) {
  switch (s) {
    case SimStatus::Completed: return "completed";
    case SimStatus::StateEscape: return "STATE_ESCAPE";
    case SimStatus::IntegrationFailure: return "INTEGRATION_FAILURE";
  }
  return "unknown";
}

struct Trajectory {
  std::vector<double> times;
  std::vector<PhaseState> states;
  std::vector<Vector> inputs;
  std::vector<double> hd;
  std::vector<double> lyap;
  std::vector<double> lyap_rate;
  std::vector<double> eta;
  IntegratorStats stats;
  double rtol = 0.0;
  double atol = 0.0;
  SimStatus status = SimStatus::Completed;
  std::string message;
  std::vector<std::string> warnings;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
};

struct ConvergenceMetrics {
  double final_error = 0.0;
  // Infinite when the error never stays inside the 2% band.
  double settling_time = 0.0;
  double min_lyap = 0.0;
  double max_lyap = 0.0;
  double max_lyap_increase = 0.0;
};

/// Right-hand side of the closed loop on the augmented state [q; p; eta].
inline DormandPrince45::Rhs closed_loop_rhs(const SystemModel& model,
                                            const ClosedLoopDesign& design) {
  return [&model, &design](double, const Vector& y) -> Vector {
    const int n = model.n;
    const Vector q = y.head(n);
    const Vector p = y.segment(n, n);
    const Vector u = control_input(model, design, q, p).u;
    const PhaseRate rate = open_loop_rhs(model, q, p, u);
    Vector dy(2 * n + 1);
    dy << rate.q_dot, rate.p_dot, eta_rate(model, design, q, rate.q_dot);
    return dy;
  };
}

/// Closed-loop simulation: the open-loop plant driven by control_input, with
/// eta integrated as an extra state so the Lyapunov value is available at every
/// sample. Plant failures and leaving the escape box end the run early; they
/// are reported in the trajectory status, not thrown.
inline Trajectory simulate(const SystemModel& model, const ClosedLoopDesign& design,
                           const PhaseState& x0, const SimOptions& opts = {}) {
  model.check_state(x0);
  if (!(opts.horizon > 0.0) || !(opts.rtol > 0.0) || !(opts.atol > 0.0) ||
      !(opts.sample_interval > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "horizon, tolerances and sample interval must be > 0");
  }
  const int n = model.n;
  Trajectory traj;
  traj.rtol = opts.rtol;
  traj.atol = opts.atol;

  if (opts.check_condition_first) {
    try {
      const auto report = check_condition(model, design, model.equilibrium);
      if (!report.satisfied) {
        traj.warnings.push_back("stability condition not satisfied at q_d (lambda_min = " +
                                std::to_string(report.min_eigenvalue()) + ")");
      }
    } catch (const Error& e) {
      traj.warnings.push_back(std::string("stability condition unchecked: ") + e.what());
    }
  }

  auto split = [n](const Vector& y) {
    return PhaseState{y.head(n), y.segment(n, n)};
  };
  const DormandPrince45::Rhs rhs = closed_loop_rhs(model, design);

  auto record = [&](double t, const Vector& y) {
    const PhaseState x = split(y);
    const double eta = y(2 * n);
    traj.times.push_back(t);
    traj.states.push_back(x);
    traj.inputs.push_back(control_input(model, design, x.q, x.p).u);
    traj.hd.push_back(desired_hamiltonian(design, x.q, x.p));
    traj.lyap.push_back(lyapunov(model, design, x.q, x.p, eta));
    traj.lyap_rate.push_back(lyapunov_rate(model, design, x.q, x.p));
    traj.eta.push_back(eta);
  };
  auto escaped = [&](const Vector& y) {
    return ((y.head(n) - model.equilibrium).cwiseAbs().array() > opts.escape_half_width).any();
  };

  Vector y(2 * n + 1);
  y << x0.q, x0.p, 0.0;
  double t = 0.0;
  IntegratorOptions iopts;
  iopts.rtol = opts.rtol;
  iopts.atol = opts.atol;
  iopts.max_step = opts.max_step;
  DormandPrince45 integrator(iopts);

  try {
    record(t, y);
    const auto samples = static_cast<long>(std::ceil(opts.horizon / opts.sample_interval - 1e-9));
    for (long k = 1; k <= samples; ++k) {
      const double t_next = std::min(opts.horizon, static_cast<double>(k) * opts.sample_interval);
      const StepStatus status = integrator.advance(rhs, t, y, t_next);
      if (status != StepStatus::Ok) {
        traj.status = SimStatus::IntegrationFailure;
        traj.message = std::string(to_string(status)) + " at t = " + std::to_string(t);
        break;
      }
      record(t, y);
      if (escaped(y)) {
        traj.status = SimStatus::StateEscape;
        traj.message = "left the workspace box at t = " + std::to_string(t);
        break;
      }
    }
  } catch (const Error& e) {
    traj.status = SimStatus::IntegrationFailure;
    traj.message = std::string(e.what()) + " at t = " + std::to_string(t);
  }
  traj.stats = integrator.stats();
  return traj;
}

inline ConvergenceMetrics convergence_metrics(const Trajectory& traj, const Vector& q_d) {
  if (traj.empty()) throw Error(ErrorCode::InvalidArgument, "empty trajectory");
  ConvergenceMetrics m;
  const double initial = (traj.states.front().q - q_d).norm();
  m.final_error = (traj.states.back().q - q_d).norm();

  const double band = 0.02 * initial;
  m.settling_time = 0.0;
  for (std::size_t i = traj.size(); i-- > 0;) {
    if ((traj.states[i].q - q_d).norm() > band) {
      m.settling_time = (i + 1 < traj.size()) ? traj.times[i + 1]
                                              : std::numeric_limits<double>::infinity();
      break;
    }
  }

  m.min_lyap = m.max_lyap = traj.lyap.front();
  for (std::size_t i = 0; i < traj.size(); ++i) {
    m.min_lyap = std::min(m.min_lyap, traj.lyap[i]);
    m.max_lyap = std::max(m.max_lyap, traj.lyap[i]);
    if (i > 0) m.max_lyap_increase = std::max(m.max_lyap_increase, traj.lyap[i] - traj.lyap[i - 1]);
  }
  return m;
}

}  // namespace idapbc
