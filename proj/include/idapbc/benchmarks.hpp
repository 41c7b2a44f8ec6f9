#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "idapbc/condition.hpp"
#include "idapbc/model.hpp"

namespace idapbc {

/// A benchmark system with its design.
///
/// `gated` is false when a closed form transcribed for the design could not be
/// verified; its residuals are then informative only. Printed condition data
/// is kept next to the design so it can be compared with the numeric oracle.
struct Benchmark {
  Benchmark(std::string name_, SystemModel model_, ClosedLoopDesign design_)
      : name(std::move(name_)), model(std::move(model_)), design(std::move(design_)) {}

  std::string name;
  SystemModel model;
  ClosedLoopDesign design;
  bool gated = true;
  std::vector<std::string> notes;
  std::optional<TwoDofDecomposition> printed_decomposition;
  std::optional<Matrix> printed_eta_hessian;
};

struct BenchmarkSpec {
  std::string name;
  std::string description;
  Params defaults;
  std::function<Benchmark(const Params&)> make;
};

namespace bench {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Defaults overlaid with overrides. Unknown keys are a config error.
inline Params merge(std::string_view bench, const Params& defaults, const Params& overrides) {
  Params out = defaults;
  for (const auto& [key, value] : overrides) {
    if (!defaults.count(key)) {
      throw Error(ErrorCode::ConfigParse,
                  std::string(bench) + " has no parameter '" + key + "'");
    }
    out[key] = value;
  }
  return out;
}

inline void require(bool ok, std::string_view bench, const std::string& what) {
  if (!ok) {
    throw Error(ErrorCode::ConstraintViolation, std::string(bench) + ": " + what + " violated");
  }
}

inline Matrix damping(const Params& p, int m) { return p.at("kv") * Matrix::Identity(m, m); }

inline Vector box(int n, double half_width) { return Vector::Constant(n, half_width); }

inline Matrix sym2(double a, double b, double c) {
  Matrix out(2, 2);
  out << a, b, b, c;
  return out;
}

/// M(q) shared by the Acrobot and the Pendubot.
inline Matrix serial_2r_mass(const Params& p, const Vector& q) {
  const double c = std::cos(q(1));
  return sym2(p.at("c1") + p.at("c2") + 2.0 * p.at("c3") * c, p.at("c2") + p.at("c3") * c,
              p.at("c2"));
}

inline Matrix serial_2r_mass_dq2(const Params& p, const Vector& q) {
  const double s = std::sin(q(1));
  return sym2(-2.0 * p.at("c3") * s, -p.at("c3") * s, 0.0);
}

inline void fill_serial_2r(SystemModel& model, const Params& p) {
  model.n = 2;
  model.m = 1;
  model.mass_matrix = [p](const Vector& q) { return serial_2r_mass(p, q); };
  const double g4 = p.at("c4") * p.at("g");
  const double g5 = p.at("c5") * p.at("g");
  model.potential = [g4, g5](const Vector& q) {
    return g4 * std::cos(q(0)) + g5 * std::cos(q(0) + q(1));
  };
  model.potential_gradient = [g4, g5](const Vector& q) {
    const double s12 = std::sin(q(0) + q(1));
    Vector g(2);
    g << -g4 * std::sin(q(0)) - g5 * s12, -g5 * s12;
    return g;
  };
}

inline Vector q_pair(const Params& p, const char* k1, const char* k2) {
  Vector q(2);
  q << p.at(k1), p.at(k2);
  return q;
}

}  // namespace bench

// ---------------------------------------------------------------------------
// Cable-driven robot
// ---------------------------------------------------------------------------

inline Params cable_robot_defaults() {
  return {{"m", 1.0},   {"g", 9.81},  {"b", 1.0},  {"x_d", 0.5},
          {"y_d", -1.0}, {"z_d", 0.0}, {"k1", 10.0}, {"k2", 10.0},
          {"kv", 1.0},   {"workspace", 0.4}, {"full_potential", 0.0}};
}

/// Cable lengths l1 = |q| and l2 = |q - (b, 0, 0)|.
inline std::pair<double, double> cable_lengths(const Vector& q, double b) {
  Vector shifted = q;
  shifted(0) -= b;
  return {q.norm(), shifted.norm()};
}

/// Point mass hanging from two cables anchored at the origin and at (b, 0, 0).
/// With full_potential = 1 the design also carries V_dn = m g y.
inline Benchmark cable_robot(const Params& overrides = {}) {
  constexpr std::string_view kName = "cable_robot";
  const Params p = bench::merge(kName, cable_robot_defaults(), overrides);
  const double mass = p.at("m"), g = p.at("g"), b = p.at("b");
  const double yd = p.at("y_d"), zd = p.at("z_d"), half = p.at("workspace");
  bench::require(mass > 0.0, kName, "m > 0");
  bench::require(b != 0.0, kName, "b != 0");
  bench::require(yd < 0.0, kName, "y_d < 0");
  bench::require(zd == 0.0, kName, "z_d = 0");
  bench::require(half > 0.0 && half < -yd, kName, "0 < workspace < |y_d| (y stays negative)");

  SystemModel model;
  model.name = std::string(kName);
  model.n = 3;
  model.m = 2;
  model.mass_matrix = [mass](const Vector&) { return Matrix(mass * Matrix::Identity(3, 3)); };
  model.potential = [mass, g](const Vector& q) { return mass * g * q(1); };
  model.potential_gradient = [mass, g](const Vector&) {
    return Vector(Vector::Unit(3, 1) * mass * g);
  };
  model.input_map = [b](const Vector& q) {
    const auto [l1, l2] = cable_lengths(q, b);
    Matrix gm(3, 2);
    gm << q(0) / l1, (q(0) - b) / l2, q(1) / l1, q(1) / l2, q(2) / l1, q(2) / l2;
    return gm;
  };
  model.input_annihilator = [b](const Vector& q) {
    Matrix gp(1, 3);
    gp << 0.0, -b * q(2), b * q(1);
    return gp;
  };
  model.equilibrium = Vector(3);
  model.equilibrium << p.at("x_d"), yd, zd;
  model.workspace_half_width = bench::box(3, half);
  model.params = p;

  const double xd = p.at("x_d");
  std::vector<BasisFunction> basis{
      {"x - x_d", [xd](const Vector& q) { return q(0) - xd; },
       [](const Vector&) { return Vector(Vector::Unit(3, 0)); }},
      {"y^2 + z^2 - y_d^2",
       [yd](const Vector& q) { return q(1) * q(1) + q(2) * q(2) - yd * yd; },
       [](const Vector& q) {
         Vector g(3);
         g << 0.0, 2.0 * q(1), 2.0 * q(2);
         return g;
       }}};
  std::optional<BasisFunction> vdn;
  if (p.at("full_potential") != 0.0) {
    vdn = BasisFunction{"m g y", model.potential, model.potential_gradient};
  }
  const Matrix md_inv = Matrix::Identity(3, 3) / mass;
  ClosedLoopDesign design([md_inv](const Vector&) { return md_inv; }, std::move(basis),
                          model.equilibrium, Eigen::Vector2d(p.at("k1"), p.at("k2")),
                          bench::damping(p, 2), J2Policy::zero(), p, vdn);

  Benchmark out{std::string(kName), std::move(model), std::move(design)};
  out.printed_eta_hessian = Matrix::Zero(3, 3);
  (*out.printed_eta_hessian)(2, 2) = -mass * g * yd / (yd * yd + zd * zd);
  return out;
}

// ---------------------------------------------------------------------------
// Acrobot
// ---------------------------------------------------------------------------

inline Params acrobot_defaults() {
  return {{"c1", 4.0},  {"c2", 1.0},  {"c3", 1.5}, {"c4", 2.0},    {"c5", 2.0},
          {"g", 9.81},  {"a1", 1.0},  {"a2", bench::kNaN},         {"a3", 3.0},
          {"k", 3000.0}, {"kv", 1.0}, {"q1_d", 0.0}, {"q2_d", 0.0}, {"workspace", 0.5}};
}

inline double acrobot_mu(double c1, double c2) { return -1.0 / (1.0 + std::sqrt(c1 / c2)); }

/// The only a2 for which q1 - mu q2 solves the homogeneous equation.
inline double acrobot_a2(double a1, double mu) { return a1 * mu / (1.0 + 2.0 * mu); }

/// Acrobot (actuated elbow) with constant M_d = [a1 a2; a2 a3] and V_dh = k/2 (q1 - mu q2)^2.
/// a2 is derived from a1 when not given.
inline Benchmark acrobot(const Params& overrides = {}) {
  constexpr std::string_view kName = "acrobot";
  const Params p = bench::merge(kName, acrobot_defaults(), overrides);
  const double c1 = p.at("c1"), c2 = p.at("c2"), c3 = p.at("c3");
  bench::require(c1 > 0.0 && c2 > 0.0, kName, "c1, c2 > 0");
  bench::require(c1 * c2 > c3 * c3, kName, "c1 c2 > c3^2");
  bench::require(c1 != c2, kName, "c1 != c2");
  const double mu = acrobot_mu(c1, c2);
  const double a1 = p.at("a1");
  const double a2_derived = acrobot_a2(a1, mu);
  double a2 = p.at("a2");
  if (std::isnan(a2)) {
    a2 = a2_derived;
  } else {
    bench::require(std::abs(a2 - a2_derived) <= 1e-9 * std::max(1.0, std::abs(a2_derived)),
                   kName, "a2 = a1 mu / (1 + 2 mu) = " + std::to_string(a2_derived));
  }
  const double a3 = p.at("a3");
  // Strict inequalities with a relative margin, so rounding in the derived a2 cannot
  // admit a point on the boundary.
  const double bound = a2 / (1.0 - std::sqrt(c1 / c2));
  bench::require(a3 - bound > 1e-9 * std::max(1.0, std::abs(bound)), kName,
                 "a3 > a2 / (1 - sqrt(c1/c2))");
  bench::require(a1 > 0.0 && a1 * a3 - a2 * a2 > 1e-9 * std::max(1.0, a1 * a3), kName, "M_d > 0");

  Params record = p;
  record["a2"] = a2;
  record["mu"] = mu;

  SystemModel model;
  model.name = std::string(kName);
  bench::fill_serial_2r(model, p);
  model.input_map = [](const Vector&) { return Matrix(Eigen::Vector2d(0.0, 1.0)); };
  model.input_annihilator = [](const Vector&) {
    return Matrix(Eigen::RowVector2d(1.0, 0.0));
  };
  model.equilibrium = bench::q_pair(p, "q1_d", "q2_d");
  model.workspace_half_width = bench::box(2, p.at("workspace"));
  model.params = record;

  const Matrix md = bench::sym2(a1, a2, a3);
  const Matrix md_inv = md.inverse();
  std::vector<BasisFunction> basis{
      {"q1 - mu q2", [mu](const Vector& q) { return q(0) - mu * q(1); },
       [mu](const Vector&) { return Vector(Eigen::Vector2d(1.0, -mu)); }}};
  ClosedLoopDesign design([md_inv](const Vector&) { return md_inv; }, std::move(basis),
                          model.equilibrium, Vector::Constant(1, p.at("k")),
                          bench::damping(p, 1), J2Policy::pointwise_solve(), record);

  const double det = a1 * a3 - a2 * a2;
  const double g = p.at("g"), c4 = p.at("c4"), c5 = p.at("c5");
  const double r1 = a3 * c1 + a3 * c2 + 2.0 * a3 * c3 - a2 * c2 - a2 * c3;
  const double r2 = a3 * c2 + a3 * c3 - a2 * c2;
  const double beta1 = (-c4 * g - c5 * g) / det * r1;
  const double beta2 = -c5 * g / (2.0 * det) * r1 + (-c4 * g - c5 * g) / (2.0 * det) * r2;
  const double beta3 = -c5 * g / det * r2;

  Benchmark out{std::string(kName), std::move(model), std::move(design)};
  out.printed_decomposition =
      TwoDofDecomposition{bench::sym2(1.0, -mu, mu * mu), bench::sym2(beta1, beta2, beta3)};
  return out;
}

// ---------------------------------------------------------------------------
// Pendubot
// ---------------------------------------------------------------------------

inline Params pendubot_defaults() {
  return {{"c1", 4.0},        {"c2", 1.0},         {"c3", 1.5},    {"c4", 3.0},
          {"c5", 2.0},        {"g", 9.81},         {"a1", 1.0},    {"b1", bench::kNaN},
          {"b", bench::kNaN}, {"lambda", 5.0},     {"k", 3500.0},  {"kv", 1.0},
          {"q1_d", 0.0},      {"q2_d", 0.0},       {"workspace", 0.5},
          {"printed_basis", 0.0}, {"integrated_a", 0.0}};
}

/// delta_1..delta_4 of the Pendubot V_dh solution.
inline std::array<double, 4> pendubot_deltas(const Params& p) {
  const double c1 = p.at("c1"), c2 = p.at("c2"), c3 = p.at("c3");
  const double a1 = p.at("a1"), b1 = p.at("b1");
  return {-b1 * c2 - a1 * c2, -a1 * c3, b1 * c2 + a1 * c1 + a1 * c2, b1 * c3 + 2.0 * a1 * c3};
}

/// a(q2) as printed, with |.| inside every logarithm.
inline double pendubot_a_printed(const Params& p, double q2) {
  const double c1 = p.at("c1"), c2 = p.at("c2"), c3 = p.at("c3");
  const double a1 = p.at("a1"), b1 = p.at("b1");
  const double c = std::cos(q2);
  const double den = c1 * c2 * (b1 * c3 + 2.0 * a1 * c3);
  const double r = std::sqrt(c3 * c3 / (c1 * c2));
  const double t1 = (-a1 * c1 * c2 * c3 + b1 * c1 * c2 * c3) / den *
                    std::log(std::abs(c1 * c2 - c3 * c3 * c * c));
  const double t2 = (2.0 * a1 * c1 * c2 * c3 - 2.0 * b1 * c1 * c2 * c3) / den * c;
  const double t3 = std::log(std::abs((1.0 + r * c) / (1.0 - r * c))) *
                    (2.0 * a1 * c3 * c3 * c3 + 2.0 * a1 * c3 * c3 * (c1 + c2) +
                     2.0 * b1 * c2 * c3 * c3 * (b1 - 2.0)) /
                    (2.0 * a1 * std::sqrt(c1 * c2 * c3 * c3) * (b1 * c3 + 2.0 * a1 * c3));
  const double t4 = b1 * c3 * c3 * c3 / (c3 * c3 * (b1 * c3 + 2.0 * a1 * c3)) *
                    std::log(std::abs(c3 * c3 * c * c - c1 * c2));
  return t1 + t2 + t3 + t4;
}

/// a'(q2) required by the kinetic equation: along p = (-b1, a1), where M_d^{-1} p
/// has no first component, the J2 term drops out and a' is fixed by
///   p^T dM^{-1}/dq2 p = a1 a' p^T M^{-1} e2.
inline double pendubot_a_slope(const Params& p, double q2) {
  Vector q(2);
  q << 0.0, q2;
  const Matrix mass = bench::serial_2r_mass(p, q);
  const Matrix mi = mass.inverse();
  const Matrix dmi = -mi * bench::serial_2r_mass_dq2(p, q) * mi;
  const Eigen::Vector2d v(-p.at("b1"), p.at("a1"));
  return v.dot(dmi * v) / (p.at("a1") * v.dot(mi.col(1)));
}

inline double pendubot_a_integrated(const Params& p, double q2d, double q2) {
  using boost::math::quadrature::gauss;
  return gauss<double, 30>::integrate([&p](double t) { return pendubot_a_slope(p, t); }, q2d,
                                      q2);
}

/// V_dh argument for the Pendubot. The default places (d1 d4 - d2 d3) in front of
/// the logarithm; `printed` keeps it inside, as typeset.
inline BasisFunction pendubot_basis(const Params& p, bool printed) {
  const auto [d1, d2, d3, d4] = pendubot_deltas(p);
  const double r = std::sqrt(d4 * d4 - d3 * d3);
  const double cross = d1 * d4 - d2 * d3;
  const auto num = [=](double q2) { return d4 + d3 * std::cos(q2) + r * std::sin(q2); };
  const auto den = [=](double q2) { return d3 + d4 * std::cos(q2); };
  const auto dlog = [=](double q2) {
    return (-d3 * std::sin(q2) + r * std::cos(q2)) / num(q2) +
           d4 * std::sin(q2) / den(q2);
  };
  if (printed) {
    return {"printed pendubot xi",
            [=](const Vector& q) {
              return std::log(std::abs(num(q(1)) / (den(q(1)) * cross))) / (d4 * r) +
                     d2 / d4 * q(1) - q(0);
            },
            [=](const Vector& q) {
              return Vector(Eigen::Vector2d(-1.0, dlog(q(1)) / (d4 * r) + d2 / d4));
            }};
  }
  return {"pendubot xi",
          [=](const Vector& q) {
            return cross / (d4 * r) * std::log(std::abs(num(q(1)) / den(q(1)))) +
                   d2 / d4 * q(1) - q(0);
          },
          [=](const Vector& q) {
            return Vector(Eigen::Vector2d(-1.0, cross / (d4 * r) * dlog(q(1)) + d2 / d4));
          }};
}

/// Pendubot (actuated shoulder) with M_d^{-1} = [a1 b1; b1 (lambda e^a + b^2)/a1].
///
/// a(q2) is the printed closed form shifted to vanish at q_d, with J2 solved
/// pointwise. integrated_a = 1 replaces it by the quadrature of the slope the
/// kinetic equation demands, together with the matching J2 in closed form.
inline Benchmark pendubot(const Params& overrides = {}) {
  constexpr std::string_view kName = "pendubot";
  Params p = bench::merge(kName, pendubot_defaults(), overrides);
  const double c1 = p.at("c1"), c2 = p.at("c2"), c3 = p.at("c3");
  bench::require(c1 > 0.0 && c2 > 0.0 && c3 != 0.0, kName, "c1, c2 > 0 and c3 != 0");
  bench::require(c1 * c2 > c3 * c3, kName, "c1 c2 > c3^2");
  const double a1 = p.at("a1");
  bench::require(a1 > 0.0, kName, "a1 > 0");
  if (std::isnan(p.at("b1"))) p["b1"] = -a1 * (c1 + c2) / c2;
  if (std::isnan(p.at("b"))) p["b"] = p.at("b1");
  const double b1 = p.at("b1"), b = p.at("b"), lambda = p.at("lambda");
  bench::require(std::abs(a1 * c1 + a1 * c2 + b1 * c2) <= 1e-12 * std::max(1.0, a1 * (c1 + c2)),
                 kName, "a1 c1 + a1 c2 + b1 c2 = 0");
  bench::require(b1 != 0.0, kName, "b1 != 0");
  bench::require(lambda > 0.0, kName, "lambda > 0");
  bench::require(b * b >= b1 * b1, kName, "b^2 >= b1^2 (M_d^{-1} > 0)");
  const auto deltas = pendubot_deltas(p);
  bench::require(std::abs(deltas[3]) > std::abs(deltas[2]), kName, "|delta_4| > |delta_3|");
  const bool integrated = p.at("integrated_a") != 0.0;
  if (integrated) bench::require(c1 != c2, kName, "c1 != c2 (integrated a)");

  SystemModel model;
  model.name = std::string(kName);
  bench::fill_serial_2r(model, p);
  model.input_map = [](const Vector&) { return Matrix(Eigen::Vector2d(1.0, 0.0)); };
  model.input_annihilator = [](const Vector&) {
    return Matrix(Eigen::RowVector2d(0.0, 1.0));
  };
  model.equilibrium = bench::q_pair(p, "q1_d", "q2_d");
  model.workspace_half_width = bench::box(2, p.at("workspace"));
  model.params = p;

  const double q2d = model.equilibrium(1);
  std::function<double(double)> a_of;
  if (integrated) {
    a_of = [p, q2d](double q2) { return pendubot_a_integrated(p, q2d, q2); };
  } else {
    const double a0 = pendubot_a_printed(p, q2d);
    a_of = [p, a0](double q2) { return pendubot_a_printed(p, q2) - a0; };
  }
  const MatrixField md_inv = [a_of, a1, b1, b, lambda](const Vector& q) {
    return bench::sym2(a1, b1, (lambda * std::exp(a_of(q(1))) + b * b) / a1);
  };

  J2Policy j2 = J2Policy::pointwise_solve();
  if (integrated) {
    // j = l^T p / 2 with p^T Q p = (M_d^{-1} p)_1 (l^T p); Q's diagonal gives l.
    j2 = J2Policy::from([p, a1, b1](const Vector& q, const Vector& mom) {
      const Matrix mi = bench::serial_2r_mass(p, q).inverse();
      const Matrix d = -mi * bench::serial_2r_mass_dq2(p, q) * mi;
      const double l1 = d(0, 0) / a1;
      const double l2 = (2.0 * d(0, 1) - b1 * d(0, 0) / a1) / a1;
      const double j = 0.5 * (l1 * mom(0) + l2 * mom(1));
      Matrix out(2, 2);
      out << 0.0, j, -j, 0.0;
      return out;
    });
  }

  const bool printed_basis = p.at("printed_basis") != 0.0;
  ClosedLoopDesign design(md_inv, {pendubot_basis(p, printed_basis)}, model.equilibrium,
                          Vector::Constant(1, p.at("k")), bench::damping(p, 1), j2, p);

  // Printed beta, with the (2,2) entry of M_d^{-1} at q_d in place of (lambda a(0) + b^2)/a1.
  const double s0 = design.md_inverse(model.equilibrium)(1, 1);
  const double g5 = p.at("c5") * p.at("g");
  const double beta1 = -b1 * g5 * (c1 + c2 + 2.0 * c3) - s0 * g5 * (c2 + c3);
  const double beta2 = -b1 * g5 * (c2 + c3) / 2.0 - s0 / 2.0 * c2 * g5 -
                       b1 * g5 * (c1 + c2 + 2.0 * c3) / 2.0 - s0 / 2.0 * g5 * (c2 + c3);
  const double beta3 = -b1 * g5 * (c2 + c3) - s0 * c2 * g5;
  const double alpha2 = -1.0 / (deltas[3] * (deltas[2] + deltas[3]));

  Benchmark out{std::string(kName), std::move(model), std::move(design)};
  out.gated = false;
  out.notes.push_back(integrated ? "a(q2) integrated from the kinetic equation"
                                 : "a(q2) as printed; kinetic equation not verified");
  if (printed_basis) out.notes.push_back("V_dh argument as printed");
  out.printed_decomposition = TwoDofDecomposition{bench::sym2(1.0, alpha2, alpha2 * alpha2),
                                                  bench::sym2(beta1, beta2, beta3)};
  return out;
}

/// The injected alpha/beta pair of the Pendubot numeric example.
inline TwoDofDecomposition pendubot_numeric_case() {
  return {bench::sym2(1.0, 5.0 / 9.0, 25.0 / 81.0), bench::sym2(-550.0, -420.0, -290.0)};
}

// ---------------------------------------------------------------------------
// Cart-pole
// ---------------------------------------------------------------------------

inline Params cart_pole_defaults() {
  return {{"m", 0.5},   {"M_cart", 1.0}, {"l", 1.0},   {"g", 9.81},
          {"a1", 1.0},  {"b1", -4.0},    {"lambda", 200.0},
          {"k", 500.0}, {"kv", 1.0},     {"x_d", 0.0}, {"workspace", 0.5}};
}

/// a(q) as printed, reading the x in tan^2(x/2) as the cart position q2.
inline double cart_pole_a_printed(const Params& p, const Vector& q) {
  const double a1 = p.at("a1"), b1 = p.at("b1"), m = p.at("m");
  const double b = p.at("b"), m3 = p.at("m3");
  const double t1 = std::pow(std::tan(q(0) / 2.0), 2);
  const double tx = std::pow(std::tan(q(1) / 2.0), 2);
  const double common = m3 * a1 * a1 - 2.0 * m3 * a1 * b1 + b1 * b1;
  const double den = a1 * a1 * a1 * m3 + a1 * a1 * b1 * std::sqrt(m3);
  const double sm = std::sqrt(m);
  return 2.0 * std::log(std::abs(b * b1 + a1 * m3 * (a1 * m3 - b * b1) * t1)) /
             (a1 * (m3 * a1 * a1 - b1 * b1)) * common -
         std::log(std::abs(b * t1 - b + sm + sm * tx)) / den * common -
         std::log(std::abs(b - b * tx + sm + sm * tx)) / den * common;
}

/// Cart-pole q = (theta, x) with M_d^{-1} = [(lambda e^a + b^2)/a1 b1; b1 a1].
inline Benchmark cart_pole(const Params& overrides = {}) {
  constexpr std::string_view kName = "cart_pole";
  Params p = bench::merge(kName, cart_pole_defaults(), overrides);
  const double m = p.at("m"), mc = p.at("M_cart"), l = p.at("l"), g = p.at("g");
  bench::require(m > 0.0 && mc > 0.0 && l > 0.0, kName, "m, M, l > 0");
  const double b = 1.0 / l, c = g / l, m3 = (m + mc) / (m * l * l);
  p["b"] = b;
  p["c"] = c;
  p["m3"] = m3;
  const double a1 = p.at("a1"), b1 = p.at("b1"), lambda = p.at("lambda");
  bench::require(a1 > 0.0, kName, "a1 > 0");
  bench::require(b1 != 0.0, kName, "b1 != 0");
  bench::require(lambda > 0.0, kName, "lambda > 0");
  bench::require(b * b * b1 * b1 > a1 * a1 * m3 * m3, kName, "b^2 b1^2 > a1^2 m3^2");

  SystemModel model;
  model.name = std::string(kName);
  model.n = 2;
  model.m = 1;
  model.mass_matrix = [b, m3](const Vector& q) { return bench::sym2(1.0, b * std::cos(q(0)), m3); };
  model.potential = [c](const Vector& q) { return c * std::cos(q(0)); };
  model.potential_gradient = [c](const Vector& q) {
    return Vector(Eigen::Vector2d(-c * std::sin(q(0)), 0.0));
  };
  model.input_map = [](const Vector&) { return Matrix(Eigen::Vector2d(0.0, 1.0)); };
  model.input_annihilator = [](const Vector&) {
    return Matrix(Eigen::RowVector2d(1.0, 0.0));
  };
  model.equilibrium = Eigen::Vector2d(0.0, p.at("x_d"));
  model.workspace_half_width = bench::box(2, p.at("workspace"));
  model.params = p;

  const double a0 = cart_pole_a_printed(p, model.equilibrium);
  const MatrixField md_inv = [p, a0, a1, b1, b, lambda](const Vector& q) {
    return bench::sym2((lambda * std::exp(cart_pole_a_printed(p, q) - a0) + b * b) / a1, b1, a1);
  };

  const double r = std::sqrt(b * b * b1 * b1 - a1 * a1 * m3 * m3);
  const double kcoef = (-b * m3 * a1 * a1 + b * b1 * b1) / (b * b1 * r);
  const auto num = [=](double t) { return b * b1 + std::sin(t) * r + a1 * m3 * std::cos(t); };
  const auto den = [=](double t) { return a1 * m3 + b * b1 * std::cos(t); };
  BasisFunction xi{
      "cart-pole xi",
      [=](const Vector& q) {
        return -std::log(std::abs(num(q(0)) / den(q(0)))) * kcoef - a1 * q(0) / b1 - q(1);
      },
      [=](const Vector& q) {
        const double t = q(0);
        const double dn = r * std::cos(t) - a1 * m3 * std::sin(t);
        const double dd = -b * b1 * std::sin(t);
        return Vector(Eigen::Vector2d(-kcoef * (dn / num(t) - dd / den(t)) - a1 / b1, -1.0));
      }};
  ClosedLoopDesign design(md_inv, {xi}, model.equilibrium, Vector::Constant(1, p.at("k")),
                          bench::damping(p, 1), J2Policy::pointwise_solve(), p);

  const double s0 = design.md_inverse(model.equilibrium)(0, 0);
  const double alpha2 =
      (-b * m3 * a1 * a1 + b * b1 * b1) / (b * b1 * (a1 * m3 + b * b1) + a1 / b1);
  const double beta1 = -c * s0 - b * b1 * c;
  const double beta3 = -b * c * s0 - b1 * m3 * c;

  Benchmark out{std::string(kName), std::move(model), std::move(design)};
  out.gated = false;
  out.notes.push_back("a(q) as printed with x read as q2; kinetic equation not verified");
  out.printed_decomposition =
      TwoDofDecomposition{bench::sym2(alpha2 * alpha2, alpha2, 1.0),
                          bench::sym2(beta1, 0.5 * (beta1 + beta3), beta3)};
  return out;
}

// ---------------------------------------------------------------------------
// VTOL aircraft
// ---------------------------------------------------------------------------

inline Params vtol_defaults() {
  return {{"eps", 0.5},     {"g", 9.81},   {"lambda1", 1.0}, {"lambda2", 1.5},
          {"lambda3", 3.0}, {"k1", 10.0},  {"k2", 10.0},     {"kv", 1.0},
          {"x_d", 0.0},     {"y_d", 0.0},  {"workspace", 0.5}};
}

/// The VTOL desired inertia (this matrix is M_d; the design stores its inverse).
inline Matrix vtol_desired_inertia(const Params& p, double theta) {
  const double l1 = p.at("lambda1"), l2 = p.at("lambda2"), l3 = p.at("lambda3");
  const double eps = p.at("eps");
  const double c = std::cos(theta), s = std::sin(theta);
  Matrix md(3, 3);
  md << l1 * eps * c * c + l3, l1 * eps * c * s, l1 * c,
        l1 * eps * c * s, -l1 * eps * c * c + l3, l1 * s,
        l1 * c, l1 * s, l2;
  return md;
}

/// Planar VTOL q = (x, y, theta) with two-function V_dh.
inline Benchmark vtol(const Params& overrides = {}) {
  constexpr std::string_view kName = "vtol";
  const Params p = bench::merge(kName, vtol_defaults(), overrides);
  const double eps = p.at("eps"), g = p.at("g");
  const double l1 = p.at("lambda1"), l2 = p.at("lambda2"), l3 = p.at("lambda3");
  bench::require(eps > 0.0, kName, "eps > 0");
  bench::require(l3 > 5.0 * l1 * eps, kName, "lambda3 > 5 lambda1 eps");
  bench::require(l1 / eps > l2, kName, "lambda1/eps > lambda2");
  bench::require(l2 > l1 / (2.0 * eps), kName, "lambda2 > lambda1/(2 eps)");

  SystemModel model;
  model.name = std::string(kName);
  model.n = 3;
  model.m = 2;
  model.mass_matrix = [](const Vector&) { return Matrix(Matrix::Identity(3, 3)); };
  model.potential = [g, eps](const Vector& q) { return g / eps * std::cos(q(2)); };
  model.potential_gradient = [g, eps](const Vector& q) {
    return Vector(Eigen::Vector3d(0.0, 0.0, -g / eps * std::sin(q(2))));
  };
  model.input_map = [eps](const Vector& q) {
    Matrix gm(3, 2);
    gm << 1.0, 0.0, 0.0, 1.0, std::cos(q(2)) / eps, std::sin(q(2)) / eps;
    return gm;
  };
  model.input_annihilator = [eps](const Vector& q) {
    Matrix gp(1, 3);
    gp << -std::cos(q(2)), -std::sin(q(2)), eps;
    return gp;
  };
  model.equilibrium = Eigen::Vector3d(p.at("x_d"), p.at("y_d"), 0.0);
  model.workspace_half_width = bench::box(3, p.at("workspace"));
  model.params = p;

  const double mu1 = l3 / (l1 - l2 * eps);
  const double mu2 = (l3 - l1 * eps) / (l1 - l2 * eps);
  const double xd = p.at("x_d"), yd = p.at("y_d");
  std::vector<BasisFunction> basis{
      {"x - x_d - mu1 sin(theta)",
       [=](const Vector& q) { return q(0) - xd - mu1 * std::sin(q(2)); },
       [=](const Vector& q) {
         return Vector(Eigen::Vector3d(1.0, 0.0, -mu1 * std::cos(q(2))));
       }},
      {"y - y_d + mu2 (cos(theta) - 1)",
       [=](const Vector& q) { return q(1) - yd + mu2 * (std::cos(q(2)) - 1.0); },
       [=](const Vector& q) {
         return Vector(Eigen::Vector3d(0.0, 1.0, -mu2 * std::sin(q(2))));
       }}};
  const MatrixField md_inv = [p](const Vector& q) {
    return Matrix(vtol_desired_inertia(p, q(2)).inverse());
  };
  ClosedLoopDesign design(md_inv, std::move(basis), model.equilibrium,
                          Eigen::Vector2d(p.at("k1"), p.at("k2")), bench::damping(p, 2),
                          J2Policy::pointwise_solve(), p);

  // The printed k3 is read as lambda3.
  const double den = (l1 * eps + l3) * (-l1 * eps + l3) * l2 - l1 * (-l1 * eps + l3) * l1;
  const double theta1 =
      g * eps * (-l1 * l2 * eps + l2 * l3 - l1 * l1 * eps * eps + l1 * l3 * eps) / den;
  const double theta2 =
      g * eps * (l1 * l1 * eps - l1 * l3 + l1 * l1 * eps * eps * eps - l3 * l3 * eps) / den;

  Benchmark out{std::string(kName), std::move(model), std::move(design)};
  out.notes.push_back("printed theta use k3 = lambda3");
  out.printed_eta_hessian = Matrix::Zero(3, 3);
  (*out.printed_eta_hessian)(2, 0) = theta1;
  (*out.printed_eta_hessian)(2, 2) = theta2;
  return out;
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

inline const std::vector<BenchmarkSpec>& benchmark_registry() {
  static const std::vector<BenchmarkSpec> registry{
      {"cable_robot", "point mass on two cables, n=3, m=2", cable_robot_defaults(),
       [](const Params& o) { return cable_robot(o); }},
      {"acrobot", "2R arm actuated at the elbow, n=2, m=1", acrobot_defaults(),
       [](const Params& o) { return acrobot(o); }},
      {"pendubot", "2R arm actuated at the shoulder, n=2, m=1", pendubot_defaults(),
       [](const Params& o) { return pendubot(o); }},
      {"cart_pole", "inverted pendulum on a cart, n=2, m=1", cart_pole_defaults(),
       [](const Params& o) { return cart_pole(o); }},
      {"vtol", "planar vertical take-off aircraft, n=3, m=2", vtol_defaults(),
       [](const Params& o) { return vtol(o); }},
  };
  return registry;
}

inline const BenchmarkSpec& find_benchmark(std::string_view name) {
  for (const auto& spec : benchmark_registry()) {
    if (spec.name == name) return spec;
  }
  throw Error(ErrorCode::UnknownBenchmark, "no benchmark named '" + std::string(name) + "'");
}

inline Benchmark make_benchmark(std::string_view name, const Params& overrides = {}) {
  return find_benchmark(name).make(overrides);
}

}  // namespace idapbc
