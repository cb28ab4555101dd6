#pragma once

#include "bfc/controller.hpp"
#include "bfc/plants.hpp"
#include "bfc/reference.hpp"
#include "bfc/types.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bfc {

/// Classical fourth-order Runge-Kutta step for y' = f(t, y).
template <class F>
Vec rk4_step(F&& f, const Vec& y, double t, double dt) {
  if (!(dt > 0.0)) throw DomainError("rk4_step: dt must be > 0");
  const auto checked = [](Vec k) {
    if (!k.allFinite()) throw NumericalError("rk4_step: non-finite derivative");
    return k;
  };
  const Vec k1 = checked(f(t, y));
  const Vec k2 = checked(f(t + 0.5 * dt, Vec(y + 0.5 * dt * k1)));
  const Vec k3 = checked(f(t + 0.5 * dt, Vec(y + 0.5 * dt * k2)));
  const Vec k4 = checked(f(t + dt, Vec(y + dt * k3)));
  return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// When the control law is evaluated inside a step.
enum class ControlSampling {
  /// At every Runge-Kutta stage: the integrator solves the continuous closed loop.
  continuous,
  /// Once at the start of the step, held across it.
  zoh,
};

inline std::string_view to_string(ControlSampling s) {
  return s == ControlSampling::continuous ? "continuous" : "zoh";
}

struct SimConfig {
  double dt = 1e-3;
  double horizon = 60.0;
  int log_stride = 1;
  ControlSampling sampling = ControlSampling::continuous;
  /// Defaults to 1e-3 * max(command bound).
  std::optional<double> halt_threshold;
  double halt_dwell = 1.0;

  PlantModel plant = ScaraPlant{};
  DisturbanceModel disturbance;
  ReferenceTrajectory reference;
  ControllerParams controller;

  /// Initial configuration; defaults to x_ref(0).
  std::optional<Vec> x0;
  /// Initial velocity (second-order plants); defaults to zero.
  std::optional<Vec> v0;

  double resolved_halt_threshold() const {
    return halt_threshold.value_or(1e-3 * controller.command_bound().maxCoeff());
  }

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("sim: dt must be > 0");
    if (!(horizon >= dt) || !std::isfinite(horizon)) throw ConfigError("sim: horizon must be >= dt");
    if (log_stride < 1) throw ConfigError("sim: log_stride must be >= 1");
    if (!(halt_dwell >= 0.0)) throw ConfigError("sim: halt_dwell must be >= 0");
    if (halt_threshold && !(*halt_threshold > 0.0)) throw ConfigError("sim: halt_threshold must be > 0");
    controller.validate();
    const auto n = plant_dim(plant);
    if (controller.dim() != n) throw ConfigError("sim: controller dimension does not match plant");
    if (reference.dim() != n) throw ConfigError("sim: reference dimension does not match plant");
    if (disturbance.dim() != n) throw ConfigError("sim: disturbance dimension does not match plant");
    const bool second_order = plant_order(plant) == PlantOrder::second_order_torque_input;
    if (second_order != (controller.mode() == ControlMode::two_stage)) {
      throw ConfigError(second_order
                            ? "sim: torque-input plant needs the two-stage controller (funnel_v, psi_v, tau_max)"
                            : "sim: velocity-input plant takes the single-stage controller only");
    }
    if (x0 && x0->size() != n) throw ConfigError("sim: x0 dimension mismatch");
    if (v0 && v0->size() != n) throw ConfigError("sim: v0 dimension mismatch");
    if (v0 && !second_order) throw ConfigError("sim: v0 is only meaningful for second-order plants");
  }
};

struct TraceRow {
  double t = 0.0;
  Vec x, x_ref, e_x, rho_x, eps_x;
  /// Second order: measured velocity. First order: realised rate x_dot.
  Vec v;
  Vec v_r;
  Vec e_v, rho_v, eps_v;  // empty in single-stage mode
  Vec command;
  Vec d;
  Containment inside_x;
  Containment inside_v;  // all-true in single-stage mode
};

enum class EventType { exit, reentry, halt, abort };
enum class Stage { x, v };

inline std::string_view to_string(EventType e) {
  switch (e) {
    case EventType::exit: return "exit";
    case EventType::reentry: return "reentry";
    case EventType::halt: return "halt";
    case EventType::abort: return "abort";
  }
  return "?";
}
inline std::string_view to_string(Stage s) { return s == Stage::x ? "x" : "v"; }

struct Event {
  EventType type = EventType::exit;
  Stage stage = Stage::x;
  int dim = 0;  // 1-based; 0 when not tied to a dimension
  double t = 0.0;
  friend bool operator==(const Event&, const Event&) = default;
};

struct Trace {
  bool two_stage = true;
  Eigen::Index n = 0;
  std::vector<TraceRow> rows;
  std::vector<Event> events;
};

struct ExitInterval {
  Stage stage = Stage::x;
  double t_exit = 0.0;
  double t_end = 0.0;
  bool reentered = false;
};

struct Metrics {
  double containment_fraction_x = 1.0;
  std::optional<double> containment_fraction_v;
  double max_abs_eps_x = 0.0;
  std::optional<double> max_abs_eps_v;
  std::vector<ExitInterval> exit_intervals;
  std::optional<double> recovery_time;
  std::optional<double> halt_time;
  double saturation_fraction = 0.0;
  double control_effort = 0.0;
  double max_command_ratio = 0.0;  // max_i,k |cmd_i| / bound_i
};

struct EventOptions {
  double halt_threshold = 1e-2;
  double halt_dwell = 1.0;
};

namespace detail {

inline int first_violation(const Containment& c) {
  for (std::size_t i = 0; i < c.per_dim.size(); ++i) {
    if (!c.per_dim[i]) return static_cast<int>(i) + 1;
  }
  return 0;
}

inline double inf_norm(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace detail

/// Exit: first row where a previously contained stage violates its funnel.
/// Re-entry: first later row where every dimension is contained again.
/// Halt: outside some funnel with ||command||_inf < threshold for at
/// least `halt_dwell` seconds; reported once per such stretch, at the
/// first row that completes the dwell.
inline std::vector<Event> detect_events(const std::vector<TraceRow>& rows, const EventOptions& opt) {
  std::vector<Event> events;
  bool out_x = false;
  bool out_v = false;
  std::optional<double> quiet_since;
  bool halt_reported = false;
  for (const auto& r : rows) {
    const auto track = [&](Stage stage, const Containment& c, bool& out) {
      if (!out && !c.all) {
        events.push_back({EventType::exit, stage, detail::first_violation(c), r.t});
        out = true;
      } else if (out && c.all) {
        events.push_back({EventType::reentry, stage, 0, r.t});
        out = false;
      }
    };
    track(Stage::x, r.inside_x, out_x);
    track(Stage::v, r.inside_v, out_v);

    const bool outside = !r.inside_x.all || !r.inside_v.all;
    if (outside && detail::inf_norm(r.command) < opt.halt_threshold) {
      if (!quiet_since) quiet_since = r.t;
      if (!halt_reported && r.t - *quiet_since >= opt.halt_dwell) {
        const bool x_side = !r.inside_x.all;
        events.push_back({EventType::halt, x_side ? Stage::x : Stage::v,
                          detail::first_violation(x_side ? r.inside_x : r.inside_v), r.t});
        halt_reported = true;
      }
    } else {
      quiet_since.reset();
      halt_reported = false;
    }
  }
  return events;
}

/// Summary statistics over the logged rows of `trace`.
inline Metrics compute_metrics(const Trace& trace, const Vec& command_bound, double halt_threshold) {
  const auto& rows = trace.rows;
  if (rows.empty()) throw DomainError("compute_metrics: empty trace");
  Metrics m;
  const double count = static_cast<double>(rows.size());
  std::size_t in_x = 0, in_v = 0, saturated = 0;
  double max_v = 0.0;
  for (const auto& r : rows) {
    in_x += r.inside_x.all ? 1 : 0;
    in_v += r.inside_v.all ? 1 : 0;
    m.max_abs_eps_x = std::max(m.max_abs_eps_x, detail::inf_norm(r.eps_x));
    if (trace.two_stage) max_v = std::max(max_v, detail::inf_norm(r.eps_v));
    const Eigen::ArrayXd ratio = r.command.array().abs() / command_bound.array();
    m.max_command_ratio = std::max(m.max_command_ratio, ratio.maxCoeff());
    if ((ratio > 0.99).any()) ++saturated;
  }
  m.containment_fraction_x = static_cast<double>(in_x) / count;
  if (trace.two_stage) {
    m.containment_fraction_v = static_cast<double>(in_v) / count;
    m.max_abs_eps_v = max_v;
  }
  m.saturation_fraction = static_cast<double>(saturated) / count;

  for (std::size_t k = 1; k < rows.size(); ++k) {
    m.control_effort += 0.5 * (rows[k].t - rows[k - 1].t) *
                        (rows[k].command.norm() + rows[k - 1].command.norm());
  }

  const double t_end = rows.back().t;
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const Event& e = trace.events[i];
    if (e.type != EventType::exit) continue;
    ExitInterval iv{e.stage, e.t, t_end, false};
    for (std::size_t j = i + 1; j < trace.events.size(); ++j) {
      const Event& f = trace.events[j];
      if (f.type == EventType::reentry && f.stage == e.stage) {
        iv.t_end = f.t;
        iv.reentered = true;
        break;
      }
    }
    m.exit_intervals.push_back(iv);
  }
  for (const auto& iv : m.exit_intervals) {
    if (iv.stage != Stage::x) continue;
    if (iv.reentered) m.recovery_time = iv.t_end - iv.t_exit;
    break;
  }

  std::optional<double> quiet_from;
  for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
    if (detail::inf_norm(it->command) < halt_threshold) {
      quiet_from = it->t;
    } else {
      break;
    }
  }
  m.halt_time = quiet_from;
  return m;
}

struct SimResult {
  Trace trace;
  Metrics metrics;
  bool aborted = false;
  std::string abort_reason;
};

namespace detail {

inline TraceRow make_row(double t, const Vec& x, const Vec& v, const RefSample& ref,
                         const ControlOutput& out, const Vec& d, const ControllerParams& p) {
  TraceRow r;
  r.t = t;
  r.x = x;
  r.x_ref = ref.x;
  r.e_x = out.diag.e_x;
  r.rho_x = p.funnel_x.eval(t);
  r.eps_x = out.diag.eps_x;
  r.v = v;
  r.v_r = out.diag.v_r;
  r.command = out.command;
  r.d = d;
  r.inside_x = out.diag.inside_x;
  if (p.funnel_v) {
    r.e_v = out.diag.e_v;
    r.rho_v = p.funnel_v->eval(t);
    r.eps_v = out.diag.eps_v;
    r.inside_v = out.diag.inside_v;
  } else {
    r.inside_v.per_dim.assign(static_cast<std::size_t>(x.size()), true);
    r.inside_v.all = true;
  }
  return r;
}

}  // namespace detail

inline Vec initial_position(const SimConfig& cfg) {
  return cfg.x0 ? *cfg.x0 : cfg.reference.eval(0.0).x;
}

/// Both initial errors must sit strictly inside their funnels at t = 0:
/// |e_x(0)| < p_x and, for two-stage control, |v(0) - v_r(0)| < p_v.
inline void check_initial_conditions(const SimConfig& cfg) {
  const FunnelController ctrl(cfg.controller);
  const auto n = plant_dim(cfg.plant);
  const Vec x = initial_position(cfg);
  const Vec v = cfg.v0 ? *cfg.v0 : Vec::Zero(n);
  const ControlOutput o = ctrl.step(0.0, x, v, cfg.reference.eval(0.0).x);
  if (!o.diag.inside_x.all) {
    throw ConfigError("initial position error is not strictly inside p_x (dimension " +
                      std::to_string(detail::first_violation(o.diag.inside_x)) + ")");
  }
  if (ctrl.mode() == ControlMode::two_stage && !o.diag.inside_v.all) {
    throw ConfigError("initial velocity error is not strictly inside p_v (dimension " +
                      std::to_string(detail::first_violation(o.diag.inside_v)) + ")");
  }
}

/// Fixed-step closed-loop simulation over [0, horizon].
///
/// Throws ConfigError when the configuration is inconsistent or the
/// initial errors are not strictly inside their funnels. Numerical
/// failure does not throw: the result is marked aborted, keeps the rows
/// logged so far, and carries an abort event.
inline SimResult run(const SimConfig& cfg) {
  cfg.validate();
  const FunnelController ctrl(cfg.controller);
  const auto n = plant_dim(cfg.plant);
  const bool two_stage = ctrl.mode() == ControlMode::two_stage;

  Vec x = initial_position(cfg);
  Vec v = cfg.v0 ? *cfg.v0 : Vec::Zero(n);

  check_initial_conditions(cfg);

  SimResult result;
  result.trace.two_stage = two_stage;
  result.trace.n = n;
  const long long steps = std::llround(cfg.horizon / cfg.dt);
  result.trace.rows.reserve(static_cast<std::size_t>(steps / cfg.log_stride + 2));

  const auto command_at = [&](double t, const Vec& xs, const Vec& vs) {
    if (!xs.allFinite() || !vs.allFinite()) throw NumericalError("non-finite state");
    return ctrl.step(t, xs, vs, cfg.reference.eval(t).x).command;
  };

  double abort_time = 0.0;
  for (long long k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    const RefSample ref = cfg.reference.eval(t);
    const ControlOutput out = ctrl.step(t, x, v, ref.x);
    const Vec d = cfg.disturbance.eval(t);

    Vec rate;  // realised x_dot for first-order plants
    if (!two_stage) rate = std::get<OmniPlant>(cfg.plant).rates(x, out.command, d);

    const auto log_row = [&] {
      result.trace.rows.push_back(
          detail::make_row(t, x, two_stage ? v : rate, ref, out, d, cfg.controller));
    };
    const bool logged = k % cfg.log_stride == 0 || k == steps;
    if (logged) log_row();
    if (k == steps) break;

    try {
      if (two_stage) {
        const auto& plant = std::get<ScaraPlant>(cfg.plant);
        Vec y(2 * n);
        y << x, v;
        const auto f = [&](double ts, const Vec& ys) -> Vec {
          const Vec xs = ys.head(n);
          const Vec vs = ys.tail(n);
          const Vec tau =
              cfg.sampling == ControlSampling::zoh ? out.command : command_at(ts, xs, vs);
          Vec dy(2 * n);
          dy << vs, plant.acceleration(xs, vs, tau, cfg.disturbance.eval(ts));
          return dy;
        };
        y = rk4_step(f, y, t, cfg.dt);
        x = y.head(n);
        v = y.tail(n);
      } else {
        const auto& plant = std::get<OmniPlant>(cfg.plant);
        const Vec none = Vec::Zero(n);
        const auto f = [&](double ts, const Vec& xs) -> Vec {
          const Vec u =
              cfg.sampling == ControlSampling::zoh ? out.command : command_at(ts, xs, none);
          return plant.rates(xs, u, cfg.disturbance.eval(ts));
        };
        x = rk4_step(f, x, t, cfg.dt);
      }
      if (!x.allFinite() || !v.allFinite()) throw NumericalError("non-finite state");
    } catch (const std::exception& e) {
      // NumericalError from the plant/integrator, DomainError from a
      // transform fed a non-finite normalized error.
      if (!logged) log_row();
      result.aborted = true;
      result.abort_reason = std::string(e.what()) + " in step starting at t=" + std::to_string(t);
      abort_time = t;
      break;
    }
  }

  const double threshold = cfg.resolved_halt_threshold();
  result.trace.events =
      detect_events(result.trace.rows, EventOptions{threshold, cfg.halt_dwell});
  if (result.aborted) {
    result.trace.events.push_back({EventType::abort, Stage::x, 0, abort_time});
  }
  result.metrics = compute_metrics(result.trace, cfg.controller.command_bound(), threshold);
  return result;
}

}  // namespace bfc
