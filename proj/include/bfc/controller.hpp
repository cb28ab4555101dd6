#pragma once

#include "bfc/funnel.hpp"
#include "bfc/transform.hpp"
#include "bfc/types.hpp"

#include <optional>
#include <string>

namespace bfc {

enum class ControlMode {
  /// Position funnel -> velocity reference -> velocity funnel -> torque.
  two_stage,
  /// Position funnel -> velocity command, for velocity-input plants.
  single_stage,
};

struct ControllerParams {
  FunnelSpec funnel_x;
  std::optional<FunnelSpec> funnel_v;
  Transform psi_x;
  std::optional<Transform> psi_v;
  Vec v_max;
  std::optional<Vec> tau_max;

  ControlMode mode() const {
    return funnel_v ? ControlMode::two_stage : ControlMode::single_stage;
  }
  Eigen::Index dim() const { return funnel_x.dim(); }

  /// Bound on the emitted command: tau_max (two-stage) or v_max.
  const Vec& command_bound() const { return tau_max ? *tau_max : v_max; }

  void validate() const {
    const auto n = dim();
    if (v_max.size() != n) throw ConfigError("controller: v_max dimension mismatch");
    if (!((v_max.array() > 0.0).all()) || !v_max.allFinite()) {
      throw ConfigError("controller: v_max must be > 0 in every dimension");
    }
    const bool any_stage2 = funnel_v || psi_v || tau_max;
    const bool all_stage2 = funnel_v && psi_v && tau_max;
    if (any_stage2 && !all_stage2) {
      throw ConfigError("controller: funnel_v, psi_v and tau_max must be given together");
    }
    if (all_stage2) {
      if (funnel_v->dim() != n) throw ConfigError("controller: funnel_v dimension mismatch");
      if (tau_max->size() != n) throw ConfigError("controller: tau_max dimension mismatch");
      if (!((tau_max->array() > 0.0).all()) || !tau_max->allFinite()) {
        throw ConfigError("controller: tau_max must be > 0 in every dimension");
      }
    }
  }
};

/// Quantities computed along the way; stage-II fields are empty in
/// single-stage mode.
struct ControlDiagnostics {
  Vec e_x;
  Vec eps_x;
  Vec v_r;
  Vec e_v;
  Vec eps_v;
  Containment inside_x;
  Containment inside_v;
};

struct ControlOutput {
  /// Torque (two-stage) or velocity (single-stage) command.
  Vec command;
  ControlDiagnostics diag;
};

/// Approximation-free funnel controller. Reads only measured state, the
/// reference and its own parameters; it never touches a plant model.
class FunnelController {
 public:
  FunnelController() = default;
  explicit FunnelController(ControllerParams params) : params_(std::move(params)) {
    params_.validate();
  }

  const ControllerParams& params() const { return params_; }
  ControlMode mode() const { return params_.mode(); }
  Eigen::Index dim() const { return params_.dim(); }

  /// v_r = -v_max .* Psi_x(e_x ./ rho_x(t)). Fills e_x, eps_x, v_r, inside_x.
  Vec stage1_velocity(double t, const Vec& x, const Vec& x_ref, ControlDiagnostics& diag) const {
    detail::require_time(t, "stage1_velocity");
    detail::require_dim(x.size(), dim(), "stage1_velocity(x)");
    detail::require_dim(x_ref.size(), dim(), "stage1_velocity(x_ref)");
    diag.e_x = x - x_ref;
    diag.eps_x = params_.funnel_x.normalize(diag.e_x, t);
    diag.inside_x = params_.funnel_x.contains(diag.e_x, t);
    diag.v_r = -(params_.v_max.array() * params_.psi_x.apply(diag.eps_x).array()).matrix();
    return diag.v_r;
  }

  Vec stage1_velocity(double t, const Vec& x, const Vec& x_ref) const {
    ControlDiagnostics d;
    return stage1_velocity(t, x, x_ref, d);
  }

  /// tau = -tau_max .* Psi_v((v - v_r) ./ rho_v(t)). Fills e_v, eps_v, inside_v.
  Vec stage2_torque(double t, const Vec& v, const Vec& v_r, ControlDiagnostics& diag) const {
    require_two_stage("stage2_torque");
    detail::require_time(t, "stage2_torque");
    detail::require_dim(v.size(), dim(), "stage2_torque(v)");
    detail::require_dim(v_r.size(), dim(), "stage2_torque(v_r)");
    diag.e_v = v - v_r;
    diag.eps_v = params_.funnel_v->normalize(diag.e_v, t);
    diag.inside_v = params_.funnel_v->contains(diag.e_v, t);
    return -(params_.tau_max->array() * params_.psi_v->apply(diag.eps_v).array()).matrix();
  }

  Vec stage2_torque(double t, const Vec& v, const Vec& v_r) const {
    ControlDiagnostics d;
    return stage2_torque(t, v, v_r, d);
  }

  /// Full law. In single-stage mode `v` is ignored and the velocity
  /// reference is the command.
  ControlOutput step(double t, const Vec& x, const Vec& v, const Vec& x_ref) const {
    ControlOutput out;
    Vec v_r = stage1_velocity(t, x, x_ref, out.diag);
    if (mode() == ControlMode::single_stage) {
      out.command = std::move(v_r);
      return out;
    }
    out.command = stage2_torque(t, v, v_r, out.diag);
    return out;
  }

 private:
  void require_two_stage(const char* what) const {
    if (mode() != ControlMode::two_stage) {
      throw ConfigError(std::string(what) + ": controller is configured single-stage");
    }
  }

  ControllerParams params_;
};

}  // namespace bfc
