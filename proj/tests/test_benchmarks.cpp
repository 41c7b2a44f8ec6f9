#include <gtest/gtest.h>

#include "idapbc/benchmarks.hpp"

namespace idapbc {
namespace {

std::string violation(const std::string& name, const Params& o) {
  try {
    make_benchmark(name, o);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConstraintViolation) << e.what();
    return e.what();
  }
  ADD_FAILURE() << name << " accepted the overrides";
  return {};
}

TEST(Registry, FiveBenchmarksInOrder) {
  std::vector<std::string> names;
  for (const auto& spec : benchmark_registry()) names.push_back(spec.name);
  EXPECT_EQ(names, (std::vector<std::string>{"cable_robot", "acrobot", "pendubot", "cart_pole",
                                             "vtol"}));
}

TEST(Registry, UnknownNamesAndParameters) {
  try {
    make_benchmark("segway");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownBenchmark);
  }
  try {
    make_benchmark("acrobot", {{"c9", 1.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigParse);
  }
}

TEST(Registry, GatingFlags) {
  EXPECT_TRUE(cable_robot().gated);
  EXPECT_TRUE(acrobot().gated);
  EXPECT_TRUE(vtol().gated);
  EXPECT_FALSE(pendubot().gated);
  EXPECT_FALSE(cart_pole().gated);
}

TEST(CableRobot, LengthsAndInputColumns) {
  const Benchmark b = cable_robot();
  const Vector q = Eigen::Vector3d(0.5, -1.0, 0.0);
  const auto [l1, l2] = cable_lengths(q, 1.0);
  EXPECT_DOUBLE_EQ(l1 * l1, 0.25 + 1.0);
  EXPECT_DOUBLE_EQ(l2 * l2, 0.25 + 1.0);
  const Matrix g = b.model.input(q);
  EXPECT_NEAR(g.col(0).norm(), 1.0, 1e-15);
  EXPECT_NEAR(g.col(1).norm(), 1.0, 1e-15);
}

TEST(CableRobot, Constraints) {
  EXPECT_NE(violation("cable_robot", {{"y_d", 0.0}}).find("y_d < 0"), std::string::npos);
  violation("cable_robot", {{"z_d", 0.1}});
  violation("cable_robot", {{"m", 0.0}});
}

TEST(Acrobot, DerivedConstants) {
  EXPECT_DOUBLE_EQ(acrobot_mu(4.0, 1.0), -1.0 / 3.0);
  const Benchmark b = acrobot();
  EXPECT_DOUBLE_EQ(b.model.params.at("mu"), -1.0 / 3.0);
  EXPECT_DOUBLE_EQ(b.model.params.at("a2"), acrobot_a2(1.0, -1.0 / 3.0));
  EXPECT_DOUBLE_EQ(b.model.params.at("a2"), -1.0);
}

TEST(Acrobot, BoundIsStrict) {
  // a2 = -a1 for c1/c2 = 4, so the bound a2 / (1 - 2) equals a1.
  EXPECT_NE(violation("acrobot", {{"a1", 1.0}, {"a3", 1.0}}).find("a3"), std::string::npos);
  EXPECT_NO_THROW(acrobot({{"a1", 1.0}, {"a3", 1.0 + 1e-6}}));
  violation("acrobot", {{"c1", 1.0}, {"c2", 1.0}, {"c3", 0.5}});
  violation("acrobot", {{"c3", 2.0}});
  violation("acrobot", {{"a2", 0.5}});
}

TEST(Acrobot, PrintedAlphaIsExact) {
  const Benchmark b = acrobot();
  const double mu = -1.0 / 3.0;
  EXPECT_EQ(b.printed_decomposition->alpha, bench::sym2(1.0, -mu, mu * mu));
}

TEST(Pendubot, DeltasAndDerivedDefaults) {
  const Benchmark b = pendubot();
  const Params& p = b.model.params;
  EXPECT_DOUBLE_EQ(p.at("b1"), -5.0);
  EXPECT_DOUBLE_EQ(p.at("b"), -5.0);
  const auto d = pendubot_deltas(p);
  EXPECT_DOUBLE_EQ(d[3], p.at("b1") * 1.5 + 2.0 * 1.5);
  EXPECT_DOUBLE_EQ(d[0], 5.0 - 1.0);
  EXPECT_DOUBLE_EQ(d[2], 0.0);
}

TEST(Pendubot, InertiaVanishingShiftAtEquilibrium) {
  for (double integrated : {0.0, 1.0}) {
    const Benchmark b = pendubot({{"integrated_a", integrated}});
    const Params& p = b.model.params;
    const Matrix a = b.design.md_inverse(b.model.equilibrium);
    EXPECT_NEAR(a(1, 1), (p.at("lambda") + p.at("b") * p.at("b")) / p.at("a1"), 1e-12);
  }
}

TEST(Pendubot, IntegratedSlopeMatchesQuadrature) {
  const Params p = pendubot().model.params;
  const double h = 1e-4;
  for (double q2 : {-0.4, 0.1, 0.3}) {
    const double fd = (pendubot_a_integrated(p, 0.0, q2 + h) - pendubot_a_integrated(p, 0.0, q2 - h)) / (2 * h);
    EXPECT_NEAR(fd, pendubot_a_slope(p, q2), 1e-7);
  }
}

TEST(Pendubot, Constraints) {
  violation("pendubot", {{"b1", -4.0}});
  violation("pendubot", {{"lambda", 0.0}});
  violation("pendubot", {{"b", 1.0}});
  violation("pendubot", {{"c3", 2.5}});
}

TEST(CartPole, DerivedConstants) {
  const Benchmark b = cart_pole();
  const Params& p = b.model.params;
  const double m = p.at("m"), mc = p.at("M_cart"), l = p.at("l");
  EXPECT_DOUBLE_EQ(p.at("c"), p.at("g") / l);
  EXPECT_DOUBLE_EQ(p.at("b"), 1.0 / l);
  EXPECT_DOUBLE_EQ(p.at("m3"), (m + mc) / (m * l * l));
}

TEST(CartPole, Constraints) {
  violation("cart_pole", {{"l", 0.0}});
  violation("cart_pole", {{"b1", 0.0}});
  violation("cart_pole", {{"b1", -1.0}});
}

TEST(Vtol, Constraints) {
  EXPECT_NO_THROW(vtol({{"eps", 0.5}, {"lambda1", 1.0}, {"lambda2", 1.5}, {"lambda3", 3.0}}));
  EXPECT_NE(violation("vtol", {{"lambda3", 2.5}}).find("lambda3 > 5 lambda1 eps"), std::string::npos);
  EXPECT_NE(violation("vtol", {{"lambda2", 2.0}}).find("lambda1/eps > lambda2"), std::string::npos);
  EXPECT_NE(violation("vtol", {{"lambda2", 1.0}}).find("lambda2 > lambda1/(2 eps)"), std::string::npos);
}

TEST(Vtol, DesiredInertiaIsPositiveDefinite) {
  const Benchmark b = vtol();
  for (const Vector& q : sample_workspace(b.model, 50, 2)) {
    EXPECT_GT(numerics::min_eigenvalue(b.design.md_inverse(q)), 0.0);
  }
}

}  // namespace
}  // namespace idapbc
