#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "idapbc/numerics.hpp"

namespace idapbc {

struct IntegratorOptions {
  double rtol = 1e-9;
  double atol = 1e-11;
  double max_step = std::numeric_limits<double>::infinity();
  double initial_step = 0.0;  // 0 selects a step automatically
  long max_steps = 50'000'000;
};

struct IntegratorStats {
  long steps = 0;
  long rejected = 0;
  long evaluations = 0;
};

enum class StepStatus { Ok, StepSizeCollapse, TooManySteps, NonFinite };

/// Dormand-Prince 5(4) with PI step-size control.
///
/// `advance` lands exactly on the requested end time; step size and controller
/// memory carry over between calls so sampled output does not restart the
/// controller.
class DormandPrince45 {
 public:
  using Rhs = std::function<Vector(double, const Vector&)>;

  explicit DormandPrince45(IntegratorOptions opts = {}) : opts_(opts) {}

  const IntegratorStats& stats() const { return stats_; }
  const IntegratorOptions& options() const { return opts_; }

  StepStatus advance(const Rhs& f, double& t, Vector& y, double t_end) {
    if (!have_k1_) {
      k1_ = eval(f, t, y);
      if (!k1_.allFinite()) return StepStatus::NonFinite;
      have_k1_ = true;
      if (h_ <= 0.0) h_ = opts_.initial_step > 0.0 ? opts_.initial_step : initial_step(f, t, y);
    }
    while (t < t_end) {
      if (stats_.steps + stats_.rejected >= opts_.max_steps) return StepStatus::TooManySteps;
      const double remaining = t_end - t;
      double h = std::min({h_, opts_.max_step, remaining});
      const bool clipped = h < h_;
      if (h < 1e-14 * std::max(1.0, std::abs(t))) return StepStatus::StepSizeCollapse;

      const Vector k2 = eval(f, t + c2 * h, y + h * (a21 * k1_));
      const Vector k3 = eval(f, t + c3 * h, y + h * (a31 * k1_ + a32 * k2));
      const Vector k4 = eval(f, t + c4 * h, y + h * (a41 * k1_ + a42 * k2 + a43 * k3));
      const Vector k5 =
          eval(f, t + c5 * h, y + h * (a51 * k1_ + a52 * k2 + a53 * k3 + a54 * k4));
      const Vector k6 =
          eval(f, t + h, y + h * (a61 * k1_ + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      const Vector y_new =
          y + h * (a71 * k1_ + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
      const Vector k7 = eval(f, t + h, y_new);
      const Vector err_vec =
          h * (e1 * k1_ + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

      double err = error_norm(err_vec, y, y_new);
      if (!std::isfinite(err) || !k7.allFinite()) {
        ++stats_.rejected;
        h_ = 0.25 * h;
        continue;
      }

      // PI controller (Gustafsson), exponents as in Hairer's DOPRI5.
      const double fac11 = std::pow(std::max(err, 1e-300), kExpo1);
      if (err <= 1.0) {
        double fac = fac11 / std::pow(err_prev_, kBeta);
        fac = std::clamp(fac / kSafety, 1.0 / kMaxGrow, 1.0 / kMinShrink);
        err_prev_ = std::max(err, 1e-4);
        t = (h == remaining) ? t_end : t + h;
        y = y_new;
        k1_ = k7;
        ++stats_.steps;
        const double proposed = h / fac;
        // A step shortened to hit t_end says nothing about the controller's step.
        h_ = clipped ? std::max(h_, proposed) : proposed;
      } else {
        ++stats_.rejected;
        h_ = h / std::min(1.0 / kMinShrink, fac11 / kSafety);
      }
    }
    return StepStatus::Ok;
  }

 private:
  Vector eval(const Rhs& f, double t, const Vector& y) {
    ++stats_.evaluations;
    return f(t, y);
  }

  double error_norm(const Vector& err, const Vector& y0, const Vector& y1) const {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
      const double sc = opts_.atol + opts_.rtol * std::max(std::abs(y0(i)), std::abs(y1(i)));
      const double r = err(i) / sc;
      acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(std::max<Eigen::Index>(1, err.size())));
  }

  double initial_step(const Rhs& f, double t, const Vector& y) {
    Vector sc(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) sc(i) = opts_.atol + opts_.rtol * std::abs(y(i));
    const double d0 = y.cwiseQuotient(sc).norm();
    const double d1 = k1_.cwiseQuotient(sc).norm();
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, opts_.max_step);
    const Vector f1 = eval(f, t + h0, y + h0 * k1_);
    const double d2 = (f1 - k1_).cwiseQuotient(sc).norm() / h0;
    const double dm = std::max(d1, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
    return std::min({100.0 * h0, h1, opts_.max_step});
  }

  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                          a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  static constexpr double kBeta = 0.04;
  static constexpr double kExpo1 = 0.2 - kBeta * 0.75;
  static constexpr double kSafety = 0.9;
  static constexpr double kMinShrink = 0.2;
  static constexpr double kMaxGrow = 10.0;

  IntegratorOptions opts_;
  IntegratorStats stats_;
  Vector k1_;
  bool have_k1_ = false;
  double h_ = 0.0;
  double err_prev_ = 1e-4;
};

inline std::string_view to_string(StepStatus s) {
  switch (s) {
    case StepStatus::Ok: return "ok";
    case StepStatus::StepSizeCollapse: return "step size collapsed";
    case StepStatus::TooManySteps: return "step budget exhausted";
    case StepStatus::NonFinite: return "non-finite derivative";
  }
  return "unknown";
}

}  // namespace idapbc
