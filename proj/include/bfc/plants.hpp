#pragma once

#include "bfc/types.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <variant>
#include <vector>

namespace bfc {

// ---------------------------------------------------------------------------
// Planar two-link (2R) manipulator with identical uniform links.

struct ScaraParams {
  double m = 1.0;   // link mass, kg
  double l = 1.0;   // link length, m
  double g = 9.81;  // gravity, m/s^2

  void validate() const {
    if (!(m > 0.0) || !(l > 0.0) || !(g >= 0.0) || !std::isfinite(m) || !std::isfinite(l) ||
        !std::isfinite(g)) {
      throw ConfigError("scara2r: require m > 0, l > 0, g >= 0");
    }
  }
  friend bool operator==(const ScaraParams&, const ScaraParams&) = default;
};

struct ScaraTerms {
  Eigen::Matrix2d M;  // inertia, kg m^2
  Eigen::Vector2d V;  // Coriolis/centrifugal, N m
  Eigen::Vector2d G;  // gravity, N m
};

/// M(x) xdd + V(x, xd) + G(x) = tau + d, in joint coordinates [theta1, theta2].
inline ScaraTerms scara_matrices(const ScaraParams& p, const Vec& x, const Vec& v) {
  detail::require_dim(x.size(), 2, "scara_matrices(x)");
  detail::require_dim(v.size(), 2, "scara_matrices(v)");
  const double c1 = std::cos(x[0]);
  const double c2 = std::cos(x[1]);
  const double s2 = std::sin(x[1]);
  const double c12 = std::cos(x[0] + x[1]);
  const double ml2 = p.m * p.l * p.l;
  const double mgl = p.m * p.g * p.l;

  ScaraTerms out;
  out.M << 5.0 / 3.0 + c2, 1.0 / 3.0 + 0.5 * c2,
           1.0 / 3.0 + 0.5 * c2, 1.0 / 3.0;
  out.M *= ml2;
  out.V << -0.5 * v[1] * v[1] - v[0] * v[1], 0.5 * v[0] * v[0];
  out.V *= ml2 * s2;
  out.G << 1.5 * c1 + 0.5 * c12, 0.5 * c12;
  out.G *= mgl;
  return out;
}

/// Joint acceleration M^-1 (tau + d - V - G), via the closed-form 2x2 solve.
inline Vec scara_accel(const ScaraParams& p, const Vec& x, const Vec& v, const Vec& tau,
                       const Vec& d) {
  detail::require_dim(tau.size(), 2, "scara_accel(tau)");
  detail::require_dim(d.size(), 2, "scara_accel(d)");
  const ScaraTerms t = scara_matrices(p, x, v);
  const double det = t.M(0, 0) * t.M(1, 1) - t.M(0, 1) * t.M(1, 0);
  if (!(std::abs(det) > 1e-9)) {
    throw NumericalError("scara_accel: inertia matrix is singular (det = " + std::to_string(det) + ")");
  }
  const Eigen::Vector2d rhs = tau + d - t.V - t.G;
  Vec a(2);
  a[0] = (t.M(1, 1) * rhs[0] - t.M(0, 1) * rhs[1]) / det;
  a[1] = (t.M(0, 0) * rhs[1] - t.M(1, 0) * rhs[0]) / det;
  return a;
}

// ---------------------------------------------------------------------------
// Omnidirectional base, pose [x, y, theta], body velocities [v_x, v_y, omega].

/// Body-to-world velocity map, with the second row [sin, -cos, 0].
inline Eigen::Matrix3d omni_input_matrix(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Eigen::Matrix3d r;
  r << c, s, 0.0,
       s, -c, 0.0,
       0.0, 0.0, 1.0;
  return r;
}

inline Vec omni_rates(const Vec& x, const Vec& u, const Vec& d) {
  detail::require_dim(x.size(), 3, "omni_rates(x)");
  detail::require_dim(u.size(), 3, "omni_rates(u)");
  detail::require_dim(d.size(), 3, "omni_rates(d)");
  return omni_input_matrix(x[2]) * u + d;
}

/// Body velocities that realise the world-frame rate `w` at pose `x`.
inline Vec omni_body_velocity(const Vec& x, const Vec& w) {
  detail::require_dim(x.size(), 3, "omni_body_velocity(x)");
  detail::require_dim(w.size(), 3, "omni_body_velocity(w)");
  // The block is symmetric and orthogonal, hence its own inverse.
  return omni_input_matrix(x[2]).transpose() * w;
}

// ---------------------------------------------------------------------------
// Deterministic disturbances.

struct ConstantDisturbance {
  Vec value;
};

struct SinusoidDisturbance {
  Vec amplitude;
  Vec omega;  // rad/s
  Vec phase;  // rad
};

/// `magnitude` applied on [t_start, t_start + duration), zero elsewhere.
struct JerkPulse {
  double t_start = 0.0;
  double duration = 0.0;
  Vec magnitude;
};

using DisturbanceTerm = std::variant<ConstantDisturbance, SinusoidDisturbance, JerkPulse>;

/// Sum of terms; an empty model is the zero disturbance.
class DisturbanceModel {
 public:
  DisturbanceModel() = default;
  DisturbanceModel(Eigen::Index n, std::vector<DisturbanceTerm> terms)
      : n_(n), terms_(std::move(terms)) {
    validate();
  }

  static DisturbanceModel zero(Eigen::Index n) { return DisturbanceModel(n, {}); }

  Eigen::Index dim() const { return n_; }
  const std::vector<DisturbanceTerm>& terms() const { return terms_; }

  Vec eval(double t) const {
    detail::require_time(t, "DisturbanceModel::eval");
    Vec d = Vec::Zero(n_);
    for (const auto& term : terms_) {
      if (const auto* c = std::get_if<ConstantDisturbance>(&term)) {
        d += c->value;
      } else if (const auto* s = std::get_if<SinusoidDisturbance>(&term)) {
        for (Eigen::Index i = 0; i < n_; ++i) {
          d[i] += s->amplitude[i] * std::sin(s->omega[i] * t + s->phase[i]);
        }
      } else if (const auto* j = std::get_if<JerkPulse>(&term)) {
        if (t >= j->t_start && t < j->t_start + j->duration) d += j->magnitude;
      }
    }
    return d;
  }

  /// Elementwise sup_t |d(t)| (triangle bound over the terms).
  Vec bound() const {
    Vec b = Vec::Zero(n_);
    for (const auto& term : terms_) {
      if (const auto* c = std::get_if<ConstantDisturbance>(&term)) {
        b += c->value.cwiseAbs();
      } else if (const auto* s = std::get_if<SinusoidDisturbance>(&term)) {
        b += s->amplitude;
      } else if (const auto* j = std::get_if<JerkPulse>(&term)) {
        b += j->magnitude.cwiseAbs();
      }
    }
    return b;
  }

 private:
  void validate() const {
    if (n_ < 1) throw ConfigError("disturbance: dimension must be >= 1");
    for (const auto& term : terms_) {
      if (const auto* c = std::get_if<ConstantDisturbance>(&term)) {
        if (c->value.size() != n_) throw ConfigError("disturbance constant: dimension mismatch");
      } else if (const auto* s = std::get_if<SinusoidDisturbance>(&term)) {
        if (s->amplitude.size() != n_ || s->omega.size() != n_ || s->phase.size() != n_) {
          throw ConfigError("disturbance sinusoid: dimension mismatch");
        }
        if (!((s->amplitude.array() >= 0.0).all())) {
          throw ConfigError("disturbance sinusoid: amplitude must be >= 0");
        }
      } else if (const auto* j = std::get_if<JerkPulse>(&term)) {
        if (j->magnitude.size() != n_) throw ConfigError("disturbance jerk_pulse: dimension mismatch");
        if (!(j->duration > 0.0)) throw ConfigError("disturbance jerk_pulse: duration must be > 0");
        if (!(j->t_start >= 0.0)) throw ConfigError("disturbance jerk_pulse: t_start must be >= 0");
      }
    }
  }

  Eigen::Index n_ = 0;
  std::vector<DisturbanceTerm> terms_;
};

// ---------------------------------------------------------------------------
// Plant models as seen by the simulator.

enum class PlantOrder { second_order_torque_input, first_order_velocity_input };

struct ScaraPlant {
  ScaraParams params;
  static constexpr Eigen::Index kDim = 2;
  static constexpr PlantOrder kOrder = PlantOrder::second_order_torque_input;

  /// (x, v, tau, d) -> v_dot
  Vec acceleration(const Vec& x, const Vec& v, const Vec& tau, const Vec& d) const {
    return scara_accel(params, x, v, tau, d);
  }
};

struct OmniPlant {
  static constexpr Eigen::Index kDim = 3;
  static constexpr PlantOrder kOrder = PlantOrder::first_order_velocity_input;

  /// (x, world-frame velocity command, d) -> x_dot. The command is mapped
  /// to body velocities at the current heading before it reaches the
  /// kinematics.
  Vec rates(const Vec& x, const Vec& world_command, const Vec& d) const {
    return omni_rates(x, omni_body_velocity(x, world_command), d);
  }
};

using PlantModel = std::variant<ScaraPlant, OmniPlant>;

inline Eigen::Index plant_dim(const PlantModel& p) {
  return std::visit([](const auto& m) { return std::decay_t<decltype(m)>::kDim; }, p);
}

inline PlantOrder plant_order(const PlantModel& p) {
  return std::visit([](const auto& m) { return std::decay_t<decltype(m)>::kOrder; }, p);
}

}  // namespace bfc
