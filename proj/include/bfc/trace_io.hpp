#pragma once

// CSV trace and JSON summary writers.

#include "bfc/config.hpp"
#include "bfc/feasibility.hpp"
#include "bfc/sim.hpp"

#include <charconv>
#include <ostream>
#include <string>
#include <vector>

namespace bfc {

namespace detail {

// Shortest representation that parses back to the same double.
inline void put_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

inline void put_columns(std::vector<std::string>& cols, const std::string& stem, Eigen::Index n) {
  for (Eigen::Index i = 1; i <= n; ++i) cols.push_back(stem + "_" + std::to_string(i));
}

inline Json vec_json(const Vec& v) { return to_json_vec(v); }

}  // namespace detail

inline std::vector<std::string> trace_columns(const Trace& trace) {
  std::vector<std::string> cols{"t"};
  const auto n = trace.n;
  for (const char* stem : {"x", "x_ref", "e_x", "rho_x", "eps_x"}) detail::put_columns(cols, stem, n);
  detail::put_columns(cols, trace.two_stage ? "v" : "xdot", n);
  detail::put_columns(cols, "v_r", n);
  if (trace.two_stage) {
    for (const char* stem : {"e_v", "rho_v", "eps_v"}) detail::put_columns(cols, stem, n);
  }
  detail::put_columns(cols, trace.two_stage ? "tau" : "u", n);
  detail::put_columns(cols, "d", n);
  cols.push_back("inside_x");
  if (trace.two_stage) cols.push_back("inside_v");
  return cols;
}

inline void write_trace_csv(std::ostream& os, const Trace& trace) {
  const auto cols = trace_columns(trace);
  std::string line;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) line += ',';
    line += cols[i];
  }
  line += '\n';
  os << line;

  for (const TraceRow& r : trace.rows) {
    line.clear();
    detail::put_double(line, r.t);
    const auto put = [&](const Vec& v) {
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        line += ',';
        detail::put_double(line, v[i]);
      }
    };
    put(r.x);
    put(r.x_ref);
    put(r.e_x);
    put(r.rho_x);
    put(r.eps_x);
    put(r.v);
    put(r.v_r);
    if (trace.two_stage) {
      put(r.e_v);
      put(r.rho_v);
      put(r.eps_v);
    }
    put(r.command);
    put(r.d);
    line += r.inside_x.all ? ",1" : ",0";
    if (trace.two_stage) line += r.inside_v.all ? ",1" : ",0";
    line += '\n';
    os << line;
  }
}

inline Json report_json(const StageReport& r) {
  Json j;
  j["stage"] = r.stage;
  j["lhs"] = detail::vec_json(r.lhs);
  j["rhs"] = detail::vec_json(r.rhs);
  j["margin"] = detail::vec_json(r.margin);
  j["pass"] = r.pass;
  j["all_pass"] = r.all_pass;
  return j;
}

struct FeasibilityResult {
  StageReport stage1;
  std::optional<StageReport> stage2;
  std::optional<Vec> d_bar_max;

  bool all_pass() const { return stage1.all_pass && (!stage2 || stage2->all_pass); }
};

inline FeasibilityResult evaluate_feasibility(const ScenarioConfig& cfg) {
  if (!cfg.feasibility) throw ConfigError("feasibility: scenario has no feasibility bounds");
  const auto& c = cfg.sim.controller;
  const auto& b = cfg.feasibility->bounds;
  FeasibilityResult out{check_stage1(c.funnel_x, c.v_max, b), std::nullopt, std::nullopt};
  if (c.mode() == ControlMode::two_stage) {
    out.stage2 = check_stage2(*c.funnel_v, *c.tau_max, b);
    out.d_bar_max = max_disturbance(*c.funnel_v, *c.tau_max, b);
  }
  return out;
}

inline Json feasibility_json(const FeasibilityResult& f) {
  Json j;
  j["stage1"] = report_json(f.stage1);
  if (f.stage2) j["stage2"] = report_json(*f.stage2);
  if (f.d_bar_max) j["d_bar_max"] = detail::vec_json(*f.d_bar_max);
  j["all_pass"] = f.all_pass();
  return j;
}

inline Json metrics_json(const Metrics& m) {
  Json j;
  j["containment_fraction_x"] = m.containment_fraction_x;
  if (m.containment_fraction_v) j["containment_fraction_v"] = *m.containment_fraction_v;
  j["max_abs_eps_x"] = m.max_abs_eps_x;
  if (m.max_abs_eps_v) j["max_abs_eps_v"] = *m.max_abs_eps_v;
  Json intervals = Json::array();
  for (const auto& e : m.exit_intervals) {
    intervals.push_back({{"stage", std::string(to_string(e.stage))},
                         {"t_exit", e.t_exit},
                         {"t_end", e.t_end},
                         {"reentered", e.reentered}});
  }
  j["exit_intervals"] = intervals;
  j["recovery_time"] = m.recovery_time ? Json(*m.recovery_time) : Json(nullptr);
  j["halt_time"] = m.halt_time ? Json(*m.halt_time) : Json(nullptr);
  j["saturation_fraction"] = m.saturation_fraction;
  j["control_effort"] = m.control_effort;
  j["max_command_ratio"] = m.max_command_ratio;
  return j;
}

inline Json events_json(const std::vector<Event>& events) {
  Json a = Json::array();
  for (const auto& e : events) {
    a.push_back({{"type", std::string(to_string(e.type))},
                 {"stage", std::string(to_string(e.stage))},
                 {"dim", e.dim},
                 {"t", e.t}});
  }
  return a;
}

inline Json summary_json(const ScenarioConfig& cfg, const SimResult& r,
                         const std::optional<FeasibilityResult>& feas,
                         const std::vector<std::string>& warnings) {
  Json j;
  j["name"] = cfg.name;
  j["aborted"] = r.aborted;
  if (r.aborted) j["abort_reason"] = r.abort_reason;
  j["samples"] = r.trace.rows.size();
  j["metrics"] = metrics_json(r.metrics);
  j["events"] = events_json(r.trace.events);
  if (feas) j["feasibility"] = feasibility_json(*feas);
  j["warnings"] = warnings;
  j["config"] = to_json(cfg);
  return j;
}

}  // namespace bfc
