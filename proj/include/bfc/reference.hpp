#pragma once

#include "bfc/types.hpp"

#include <cmath>
#include <type_traits>
#include <variant>

namespace bfc {

struct ConstantReference {
  Vec setpoint;
};

/// center_i + amplitude_i sin(omega_i t + phase_i)
struct SinusoidReference {
  Vec center;
  Vec amplitude;
  Vec omega;
  Vec phase;
};

/// (cx + R cos(omega t), cy + R sin(omega t)); two dimensions only.
struct CircleReference {
  Vec center;
  double radius = 0.0;
  double omega = 0.0;
};

struct RefSample {
  Vec x;
  Vec xdot;
};

/// Continuously differentiable reference trajectory with an analytic
/// velocity bound.
class ReferenceTrajectory {
 public:
  using Kind = std::variant<ConstantReference, SinusoidReference, CircleReference>;

  ReferenceTrajectory() = default;
  explicit ReferenceTrajectory(Kind kind) : kind_(std::move(kind)) { validate(); }

  const Kind& kind() const { return kind_; }

  Eigen::Index dim() const {
    return std::visit(
        [](const auto& k) -> Eigen::Index {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, ConstantReference>) return k.setpoint.size();
          else if constexpr (std::is_same_v<K, SinusoidReference>) return k.center.size();
          else return 2;
        },
        kind_);
  }

  RefSample eval(double t) const {
    detail::require_time(t, "ReferenceTrajectory::eval");
    return std::visit(
        [t](const auto& k) -> RefSample {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, ConstantReference>) {
            return {k.setpoint, Vec::Zero(k.setpoint.size())};
          } else if constexpr (std::is_same_v<K, SinusoidReference>) {
            const Eigen::ArrayXd arg = k.omega.array() * t + k.phase.array();
            return {(k.center.array() + k.amplitude.array() * arg.sin()).matrix(),
                    (k.amplitude.array() * k.omega.array() * arg.cos()).matrix()};
          } else {
            const double c = std::cos(k.omega * t);
            const double s = std::sin(k.omega * t);
            RefSample r{Vec(2), Vec(2)};
            r.x << k.center[0] + k.radius * c, k.center[1] + k.radius * s;
            r.xdot << -k.radius * k.omega * s, k.radius * k.omega * c;
            return r;
          }
        },
        kind_);
  }

  /// Tight elementwise bound on |xdot|.
  Vec velocity_bound() const {
    return std::visit(
        [](const auto& k) -> Vec {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, ConstantReference>) {
            return Vec::Zero(k.setpoint.size());
          } else if constexpr (std::is_same_v<K, SinusoidReference>) {
            return (k.amplitude.array() * k.omega.array()).abs().matrix();
          } else {
            return Vec::Constant(2, std::abs(k.radius * k.omega));
          }
        },
        kind_);
  }

 private:
  void validate() const {
    std::visit(
        [](const auto& k) {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, ConstantReference>) {
            if (k.setpoint.size() == 0) throw ConfigError("reference constant: empty setpoint");
          } else if constexpr (std::is_same_v<K, SinusoidReference>) {
            const auto n = k.center.size();
            if (n == 0 || k.amplitude.size() != n || k.omega.size() != n || k.phase.size() != n) {
              throw ConfigError("reference sinusoid: center, amplitude, omega, phase must share one dimension");
            }
          } else {
            if (k.center.size() != 2) throw ConfigError("reference circle_joint: center must have 2 entries");
            if (!(k.radius >= 0.0)) throw ConfigError("reference circle_joint: radius must be >= 0");
          }
        },
        kind_);
  }

  Kind kind_ = ConstantReference{Vec::Zero(1)};
};

}  // namespace bfc
