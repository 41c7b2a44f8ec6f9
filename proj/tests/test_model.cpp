#include <gtest/gtest.h>

#include "idapbc/benchmarks.hpp"

namespace idapbc {
namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

TEST(Model, EveryBenchmarkPassesValidation) {
  for (const auto& spec : benchmark_registry()) {
    const Benchmark b = spec.make({});
    const auto report = validate_model(b.model, sample_workspace(b.model, 100, 7));
    for (const auto& c : report.checks) {
      EXPECT_TRUE(c.passed) << spec.name << ": " << c.name << " worst " << c.worst;
    }
    const auto design = validate_design(b.model, b.design, sample_workspace(b.model, 100, 8));
    EXPECT_TRUE(design.passed()) << spec.name;
  }
}

TEST(Model, AnalyticPotentialGradientMatchesDifferences) {
  for (const auto& spec : benchmark_registry()) {
    const Benchmark b = spec.make({});
    if (!b.model.potential_gradient) continue;
    for (const Vector& q : sample_workspace(b.model, 100, 3)) {
      const Vector analytic = (*b.model.potential_gradient)(q);
      const Vector fd = numerics::gradient(b.model.potential, q);
      EXPECT_LT((analytic - fd).norm() / std::max(1.0, analytic.norm()), 1e-6) << spec.name;
    }
  }
}

TEST(Model, AnnihilatorTransposeOfInputFailsCheck) {
  SystemModel model = cable_robot().model;
  model.input_annihilator = [model](const Vector& q) {
    return Matrix(model.input(q).transpose().topRows(1));
  };
  const auto report = validate_model(model, sample_workspace(model, 10, 1));
  EXPECT_FALSE(report.check("annihilator_times_input_zero").passed);
  EXPECT_FALSE(report.passed());
}

TEST(Model, AcrobotEquilibriumAtOriginIsOnManifold) {
  const Benchmark b = acrobot();
  EXPECT_TRUE(b.model.equilibrium.isZero());
  const auto report = validate_model(b.model, {b.model.equilibrium});
  EXPECT_TRUE(report.check("equilibrium_on_manifold").passed);
  EXPECT_EQ(report.check("equilibrium_on_manifold").worst, 0.0);
}

TEST(Model, EquilibriumOffManifoldIsReported) {
  SystemModel model = acrobot().model;
  model.equilibrium = Eigen::Vector2d(0.3, 0.0);
  const auto report = validate_model(model, {model.equilibrium});
  EXPECT_FALSE(report.check("equilibrium_on_manifold").passed);
}

TEST(Model, WrongAnalyticGradientIsReported) {
  SystemModel model = cable_robot().model;
  model.potential_gradient = [](const Vector&) { return Vector(Eigen::Vector3d(0, 1, 0)); };
  EXPECT_FALSE(validate_model(model, sample_workspace(model, 5, 1))
                   .check("potential_gradient_consistent")
                   .passed);
}

TEST(Model, WrongShapeAndSingularMassThrow) {
  SystemModel model = cable_robot().model;
  EXPECT_EQ(code_of([&] { model.mass(Eigen::Vector2d(0, 0)); }), ErrorCode::DimensionMismatch);

  SystemModel shape = model;
  shape.mass_matrix = [](const Vector&) { return Matrix(Matrix::Identity(2, 2)); };
  EXPECT_EQ(code_of([&] { validate_model(shape, {shape.equilibrium}); }),
            ErrorCode::DimensionMismatch);

  SystemModel singular = model;
  singular.mass_matrix = [](const Vector&) {
    return Matrix(Eigen::Vector3d(1.0, 1.0, 0.0).asDiagonal());
  };
  EXPECT_EQ(code_of([&] { validate_model(singular, {singular.equilibrium}); }),
            ErrorCode::SingularMass);
  EXPECT_EQ(code_of([&] { validate_model(model, {}); }), ErrorCode::InvalidArgument);
}

TEST(Model, StateDimensionsChecked) {
  const SystemModel model = acrobot().model;
  EXPECT_EQ(code_of([&] { model.check_state({Vector::Zero(2), Vector::Zero(3)}); }),
            ErrorCode::DimensionMismatch);
}

TEST(Model, WorkspaceSamplingIsSeededAndBoxed) {
  const SystemModel model = vtol().model;
  const auto a = sample_workspace(model, 20, 42);
  const auto b = sample_workspace(model, 20, 42);
  const auto c = sample_workspace(model, 20, 43);
  ASSERT_EQ(a.size(), 20u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i], b[i]);
    EXPECT_LE(((a[i] - model.equilibrium).cwiseAbs() - model.workspace_half_width).maxCoeff(),
              0.0);
  }
  EXPECT_NE(a[0], c[0]);
}

TEST(Design, HomogeneousPotentialVanishesAtEquilibrium) {
  for (const auto& spec : benchmark_registry()) {
    const Benchmark b = spec.make({});
    const Vector& qd = b.model.equilibrium;
    EXPECT_NEAR(b.design.vdh(qd), 0.0, 1e-14) << spec.name;
    EXPECT_LT(b.design.grad_vdh(qd).norm(), 1e-8) << spec.name;
  }
}

TEST(Design, GainCountMustMatchBasis) {
  const Benchmark b = vtol();
  EXPECT_EQ(code_of([&] { b.design.with_gains(Vector::Ones(1)); }), ErrorCode::DimensionMismatch);
  EXPECT_EQ(code_of([&] {
              ClosedLoopDesign(b.design.md_inverse_field(), b.design.basis(), b.model.equilibrium,
                               Vector::Ones(3), Matrix::Identity(2, 2));
            }),
            ErrorCode::DimensionMismatch);
}

TEST(Design, ValidationFlagsBadGainsAndNonSkewJ2) {
  const Benchmark b = acrobot();
  const auto samples = sample_workspace(b.model, 5, 1);
  EXPECT_FALSE(validate_design(b.model, b.design.with_gains(Vector::Constant(1, -1.0)), samples)
                   .check("gains_positive")
                   .passed);
  const auto sym = J2Policy::from([](const Vector&, const Vector&) {
    return Matrix(Matrix::Ones(2, 2));
  });
  EXPECT_FALSE(validate_design(b.model, b.design.with_j2(sym), samples).check("j2_skew").passed);
  EXPECT_FALSE(validate_design(b.model, b.design.with_damping(Matrix::Zero(1, 1)), samples)
                   .check("damping_spd")
                   .passed);
}

}  // namespace
}  // namespace idapbc
