#include <gtest/gtest.h>

#include "idapbc/benchmarks.hpp"
#include "idapbc/control.hpp"

namespace idapbc {
namespace {

double equivalence_gap(const Benchmark& b, int count, std::uint64_t seed) {
  double worst = 0.0;
  for (const auto& x : sample_states(b.model, count, seed)) {
    const Vector u = control_input(b.model, b.design, x.q, x.p).u;
    const PhaseRate open = open_loop_rhs(b.model, x.q, x.p, u);
    const PhaseRate target = target_rhs(b.model, b.design, x.q, x.p);
    worst = std::max({worst, (open.q_dot - target.q_dot).cwiseAbs().maxCoeff(),
                      (open.p_dot - target.p_dot).cwiseAbs().maxCoeff()});
  }
  return worst;
}

TEST(ClosedLoop, OpenLoopUnderControlEqualsTarget) {
  for (const auto& spec : benchmark_registry()) {
    EXPECT_LT(equivalence_gap(spec.make({}), 100, 21), 1e-10) << spec.name;
  }
}

TEST(ClosedLoop, EquivalenceWithSuppliedJ2AndRetunedDesigns) {
  EXPECT_LT(equivalence_gap(acrobot({{"a1", 0.05}, {"a3", 10.0}, {"k", 32158.0}}), 50, 3), 1e-10);
  EXPECT_LT(equivalence_gap(vtol({{"k1", 0.2}, {"k2", 5.0}, {"kv", 3.0}}), 50, 3), 1e-10);
  // Analytic J2 paired with a quadrature-defined inertia: limited by the differenced gradients.
  EXPECT_LT(equivalence_gap(pendubot({{"integrated_a", 1.0}}), 50, 3), 1e-8);
}

TEST(ClosedLoop, FullPotentialRemovesTheUnmatchedForce) {
  const Benchmark b = cable_robot({{"full_potential", 1.0}});
  for (const Vector& q : sample_workspace(b.model, 10, 2)) {
    EXPECT_LT(unmatched_force(b.model, b.design, q).norm(), 1e-12);
  }
  EXPECT_LT(equivalence_gap(b, 20, 4), 1e-10);
}

TEST(ClosedLoop, TargetVanishesAtEquilibrium) {
  for (const auto& spec : benchmark_registry()) {
    const Benchmark b = spec.make({});
    const Vector zero = Vector::Zero(b.model.n);
    const PhaseRate r = target_rhs(b.model, b.design, b.model.equilibrium, zero);
    EXPECT_LT(r.q_dot.norm() + r.p_dot.norm(), 1e-8) << spec.name;
  }
}

TEST(Control, AcrobotAtRestIsZero) {
  const Benchmark b = acrobot();
  EXPECT_LT(control_input(b.model, b.design, Vector::Zero(2), Vector::Zero(2)).u.norm(), 1e-9);
}

TEST(Control, CableRobotStaticBalance) {
  const Benchmark b = cable_robot();
  const Vector& qd = b.model.equilibrium;
  const Vector zero = Vector::Zero(3);
  const Vector u = control_input(b.model, b.design, qd, zero).u;
  // G u = grad V solved directly as a 3x2 least-squares system.
  const Vector balance = b.model.input(qd).colPivHouseholderQr().solve(b.model.grad_potential(qd));
  EXPECT_LT((u - balance).norm(), 1e-9);
  EXPECT_LT((b.model.input(qd) * u - b.model.grad_potential(qd)).norm(), 1e-9);
  EXPECT_LT(open_loop_rhs(b.model, qd, zero, u).p_dot.norm(), 1e-9);
}

TEST(Control, DampingOnlyTerm) {
  // M_d = M, no potential shaping pull at q_d, J2 = 0.
  const Benchmark b = cable_robot({{"kv", 2.5}});
  const Vector& qd = b.model.equilibrium;
  const Vector p = Eigen::Vector3d(0.3, -0.2, 0.7);
  const Vector u0 = control_input(b.model, b.design, qd, Vector::Zero(3)).u;
  const Vector u = control_input(b.model, b.design, qd, p).u;
  const Vector expected = -2.5 * b.model.input(qd).transpose() * p;
  EXPECT_LT((u - u0 - expected).norm(), 1e-9);
}

TEST(Control, ParallelCablesHaveSingularGram) {
  const Benchmark b = cable_robot();
  try {
    control_input(b.model, b.design, Eigen::Vector3d(0.5, 0.0, 0.0), Vector::Zero(3));
    FAIL() << "expected SINGULAR_GRAM";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularGram);
  }
}

TEST(Control, OpenLoopChecksInputSize) {
  const Benchmark b = acrobot();
  try {
    open_loop_rhs(b.model, Vector::Zero(2), Vector::Zero(2), Vector::Zero(2));
    FAIL() << "expected DIMENSION_MISMATCH";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(OpenLoop, FreeFallAndVelocity) {
  const Benchmark b = acrobot();
  const Vector q = Eigen::Vector2d(0.3, -0.2);
  const PhaseRate r = open_loop_rhs(b.model, q, Vector::Zero(2), Vector::Zero(1));
  EXPECT_TRUE(r.q_dot.isZero());
  EXPECT_LT((r.p_dot + b.model.grad_potential(q)).norm(), 1e-12);
  const Vector p = Eigen::Vector2d(0.1, 0.0);
  const PhaseRate at0 = open_loop_rhs(b.model, Vector::Zero(2), p, Vector::Zero(1));
  EXPECT_LT((at0.q_dot - b.model.mass(Vector::Zero(2)).inverse() * p).norm(), 1e-14);
}

TEST(Lyapunov, QuadraticInMomentum) {
  const Benchmark b = vtol();
  const Vector q = Eigen::Vector3d(0.1, 0.2, -0.1);
  const Vector p = Eigen::Vector3d(0.3, -0.4, 0.2);
  const double base = lyapunov(b.model, b.design, q, Vector::Zero(3), 0.7);
  EXPECT_NEAR(lyapunov(b.model, b.design, q, p, 0.7) - base,
              0.5 * p.dot(b.design.md_inverse(q) * p), 1e-12);
  EXPECT_NEAR(lyapunov(b.model, b.design, b.model.equilibrium, Vector::Zero(3), 0.0), 0.0, 1e-14);
}

TEST(Lyapunov, RateNeverPositive) {
  for (const auto& spec : benchmark_registry()) {
    const Benchmark b = spec.make({});
    for (const auto& x : sample_states(b.model, 50, 8)) {
      EXPECT_LE(lyapunov_rate(b.model, b.design, x.q, x.p), 0.0) << spec.name;
    }
    EXPECT_EQ(lyapunov_rate(b.model, b.design, b.model.equilibrium, Vector::Zero(b.model.n)), 0.0);
  }
}

TEST(Lyapunov, RateZeroWithoutDamping) {
  const Benchmark b = acrobot({{"kv", 0.0}});
  for (const auto& x : sample_states(b.model, 10, 8)) {
    EXPECT_EQ(lyapunov_rate(b.model, b.design, x.q, x.p), 0.0);
  }
}

TEST(Lyapunov, RateVanishesOnlyWithPassiveOutputZero) {
  const Benchmark b = acrobot();
  const Vector q = Eigen::Vector2d(0.1, 0.2);
  // p with G^T M_d^{-1} p = 0.
  const Matrix md = b.design.md_inverse(q).inverse();
  const Vector p = md * Eigen::Vector2d(1.0, 0.0);
  EXPECT_NEAR(lyapunov_rate(b.model, b.design, q, p), 0.0, 1e-12);
  EXPECT_LT(lyapunov_rate(b.model, b.design, q, md * Eigen::Vector2d(1.0, 0.1)), 0.0);
}

TEST(Lyapunov, EtaRateIsCovectorTimesVelocity) {
  const Benchmark b = vtol();
  const Vector q = Eigen::Vector3d(0.1, 0.2, -0.1);
  const Vector v = Eigen::Vector3d(1.0, -2.0, 0.5);
  EXPECT_DOUBLE_EQ(eta_rate(b.model, b.design, q, v), eta_covector(b.model, b.design, q).dot(v));
}

}  // namespace
}  // namespace idapbc
