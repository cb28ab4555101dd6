#pragma once

#include "bfc/funnel.hpp"
#include "bfc/transform.hpp"
#include "bfc/types.hpp"

#include <string>
#include <vector>

namespace bfc {

/// Known bounds on the (otherwise unknown) plant, disturbance and reference.
struct FeasibilityBounds {
  Vec d_bar;            ///< |d| <= d_bar
  double m_lower = 1.0; ///< m_lower * tau_max <= M^-1 tau_max
  Vec vm_lower;         ///< lower bound on V_M = -M^-1 (V + G)
  Vec vm_upper;         ///< upper bound on V_M
  double m_i = 1.0;     ///< |M^-1 d| <= m_i d_bar
  Vec v_ref_bar;        ///< |d x_ref / dt| <= v_ref_bar
  Vec a_ref_bar;        ///< |d v_r / dt| <= a_ref_bar

  Eigen::Index dim() const { return v_ref_bar.size(); }

  void validate() const {
    if (!(m_lower > 0.0)) throw ConfigError("feasibility: m_lower must be > 0");
    if (!(m_i > 0.0)) throw ConfigError("feasibility: m_i must be > 0");
    const auto nonneg = [](const Vec& v) { return v.allFinite() && (v.array() >= 0.0).all(); };
    if (!nonneg(d_bar)) throw ConfigError("feasibility: d_bar must be >= 0");
    if (!nonneg(v_ref_bar)) throw ConfigError("feasibility: v_ref_bar must be >= 0");
    if (!nonneg(a_ref_bar)) throw ConfigError("feasibility: a_ref_bar must be >= 0");
    const auto n = dim();
    if (d_bar.size() != n || vm_lower.size() != n || vm_upper.size() != n || a_ref_bar.size() != n) {
      throw ConfigError("feasibility: bound vectors must share one dimension");
    }
  }
};

/// Per-dimension report of one inequality  lhs >= rhs.
struct StageReport {
  int stage = 1;
  Vec lhs;
  Vec rhs;
  Vec margin;
  std::vector<bool> pass;
  bool all_pass = true;
};

namespace detail {

inline StageReport make_report(int stage, Vec lhs, Vec rhs) {
  StageReport r;
  r.stage = stage;
  r.margin = lhs - rhs;
  r.lhs = std::move(lhs);
  r.rhs = std::move(rhs);
  r.pass.resize(static_cast<std::size_t>(r.margin.size()));
  for (Eigen::Index i = 0; i < r.margin.size(); ++i) {
    const bool ok = r.margin[i] >= 0.0;
    r.pass[static_cast<std::size_t>(i)] = ok;
    r.all_pass = r.all_pass && ok;
  }
  return r;
}

inline Vec vm_bound(const FeasibilityBounds& b) {
  return (-b.vm_lower).cwiseMax(b.vm_upper);
}

}  // namespace detail

/// Funnel decay term mu (p - q), the worst-case |d rho / dt|.
inline Vec decay_budget(const FunnelSpec& f) {
  return (f.mu().array() * (f.p() - f.q()).array()).matrix();
}

/// Velocity budget: v_max >= decay_x + v_ref_bar. Takes the decay term
/// directly so degenerate (p = q) envelopes can be checked.
inline StageReport check_stage1(const Vec& decay_x, const Vec& v_max, const FeasibilityBounds& b) {
  const auto n = decay_x.size();
  detail::require_dim(v_max.size(), n, "check_stage1(v_max)");
  detail::require_dim(b.v_ref_bar.size(), n, "check_stage1(v_ref_bar)");
  return detail::make_report(1, v_max, decay_x + b.v_ref_bar);
}

/// v_max >= mu_x (p_x - q_x) + v_ref_bar.
inline StageReport check_stage1(const FunnelSpec& funnel_x, const Vec& v_max,
                                const FeasibilityBounds& b) {
  return check_stage1(decay_budget(funnel_x), v_max, b);
}

/// Torque budget:
///   tau_max >= (max(-vm_lower, vm_upper) + m_i d_bar + decay_v + a_ref_bar) / m_lower.
inline StageReport check_stage2(const Vec& decay_v, const Vec& tau_max, const FeasibilityBounds& b) {
  const auto n = decay_v.size();
  detail::require_dim(tau_max.size(), n, "check_stage2(tau_max)");
  detail::require_dim(b.d_bar.size(), n, "check_stage2(d_bar)");
  detail::require_dim(b.vm_lower.size(), n, "check_stage2(vm_lower)");
  detail::require_dim(b.vm_upper.size(), n, "check_stage2(vm_upper)");
  detail::require_dim(b.a_ref_bar.size(), n, "check_stage2(a_ref_bar)");
  Vec rhs = (detail::vm_bound(b) + b.m_i * b.d_bar + decay_v + b.a_ref_bar) / b.m_lower;
  return detail::make_report(2, tau_max, std::move(rhs));
}

inline StageReport check_stage2(const FunnelSpec& funnel_v, const Vec& tau_max,
                                const FeasibilityBounds& b) {
  return check_stage2(decay_budget(funnel_v), tau_max, b);
}

/// Largest disturbance bound that keeps the torque budget satisfied,
/// clamped at zero. `b.d_bar` is ignored.
inline Vec max_disturbance(const Vec& decay_v, const Vec& tau_max, const FeasibilityBounds& b) {
  const auto n = decay_v.size();
  detail::require_dim(tau_max.size(), n, "max_disturbance(tau_max)");
  detail::require_dim(b.vm_lower.size(), n, "max_disturbance(vm_lower)");
  detail::require_dim(b.vm_upper.size(), n, "max_disturbance(vm_upper)");
  detail::require_dim(b.a_ref_bar.size(), n, "max_disturbance(a_ref_bar)");
  if (!(b.m_i > 0.0)) throw DomainError("max_disturbance: m_i must be > 0");
  const Vec slack = b.m_lower * tau_max - detail::vm_bound(b) - decay_v - b.a_ref_bar;
  return (slack / b.m_i).cwiseMax(0.0);
}

inline Vec max_disturbance(const FunnelSpec& funnel_v, const Vec& tau_max,
                           const FeasibilityBounds& b) {
  return max_disturbance(decay_budget(funnel_v), tau_max, b);
}

/// Opt-in helper for a_ref_bar: Lipschitz constant of Psi_x times v_max
/// (5 v_max for tanh(5 s)).
inline Vec default_a_ref_bar(const Transform& psi_x, const Vec& v_max) {
  const double lip = psi_x.lipschitz();
  if (!std::isfinite(lip)) {
    throw ConfigError("default_a_ref_bar: transform has no usable Lipschitz constant; set a_ref_bar");
  }
  return lip * v_max;
}

}  // namespace bfc
