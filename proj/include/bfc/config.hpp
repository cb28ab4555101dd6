#pragma once

// Scenario documents: one JSON object describing plant, reference,
// disturbance, controller, feasibility bounds, simulation settings and
// output file names. Scalars given where a vector is expected broadcast
// to the plant dimension; unknown keys are rejected.

#include "bfc/controller.hpp"
#include "bfc/feasibility.hpp"
#include "bfc/plants.hpp"
#include "bfc/reference.hpp"
#include "bfc/sim.hpp"
#include "bfc/types.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace bfc {

using Json = nlohmann::ordered_json;

/// Malformed document text (not valid JSON).
class ConfigSyntaxError : public ConfigError {
 public:
  ConfigSyntaxError(const std::string& msg, std::size_t line, std::size_t column)
      : ConfigError(msg), line_(line), column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Feasibility bounds as written in a document: reference bounds may be
/// requested as "auto" and are then resolved from the reference/transform.
struct FeasibilitySpec {
  FeasibilityBounds bounds;
  bool v_ref_bar_auto = false;
  bool a_ref_bar_auto = false;
};

/// File names, relative to the output directory. Default to
/// "<name>_trace.csv" and "<name>_summary.json".
struct OutputSpec {
  std::string trace;
  std::string summary;
};

struct ScenarioConfig {
  std::string name;
  std::string description;
  SimConfig sim;
  std::optional<FeasibilitySpec> feasibility;
  OutputSpec output;
};

namespace detail {

class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError((path_.empty() ? std::string("<root>") : path_) + ": " + msg);
  }

  bool has(const std::string& key) {
    return j_.contains(key);
  }

  const Json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) fail("missing required key '" + key + "'");
    return j_.at(key);
  }

  std::optional<Json> opt_raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) return std::nullopt;
    return std::optional<Json>(std::in_place, j_.at(key));
  }

  Reader child(const std::string& key) { return Reader(raw(key), sub(key)); }

  double number(const std::string& key) { return as_number(raw(key), sub(key)); }

  double number_or(const std::string& key, double fallback) {
    const auto v = opt_raw(key);
    return v ? as_number(*v, sub(key)) : fallback;
  }

  std::optional<double> opt_number(const std::string& key) {
    const auto v = opt_raw(key);
    if (!v) return std::nullopt;
    return as_number(*v, sub(key));
  }

  std::string string(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_string()) Reader::fail_at(sub(key), "expected a string");
    return v.get<std::string>();
  }

  std::string string_or(const std::string& key, const std::string& fallback) {
    const auto v = opt_raw(key);
    if (!v) return fallback;
    if (!v->is_string()) Reader::fail_at(sub(key), "expected a string");
    return v->get<std::string>();
  }

  bool boolean_or(const std::string& key, bool fallback) {
    const auto v = opt_raw(key);
    if (!v) return fallback;
    if (!v->is_boolean()) Reader::fail_at(sub(key), "expected true or false");
    return v->get<bool>();
  }

  /// Scalar (broadcast) or array of exactly n numbers.
  Vec vec(const std::string& key, Eigen::Index n) { return as_vec(raw(key), sub(key), n); }

  Vec vec_or(const std::string& key, Eigen::Index n, double fallback) {
    const auto v = opt_raw(key);
    return v ? as_vec(*v, sub(key), n) : Vec::Constant(n, fallback);
  }

  std::optional<Vec> opt_vec(const std::string& key, Eigen::Index n) {
    const auto v = opt_raw(key);
    if (!v) return std::nullopt;
    return as_vec(*v, sub(key), n);
  }

  /// Rejects keys that were never looked up.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) fail("unknown key '" + it.key() + "'");
    }
  }

  std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  [[noreturn]] static void fail_at(const std::string& path, const std::string& msg) {
    throw ConfigError(path + ": " + msg);
  }

  static double as_number(const Json& v, const std::string& path) {
    if (!v.is_number()) fail_at(path, "expected a number");
    return v.get<double>();
  }

  static Vec as_vec(const Json& v, const std::string& path, Eigen::Index n) {
    if (v.is_number()) return Vec::Constant(n, v.get<double>());
    if (!v.is_array()) fail_at(path, "expected a number or an array of numbers");
    if (static_cast<Eigen::Index>(v.size()) != n) {
      fail_at(path, "expected " + std::to_string(n) + " entries, got " + std::to_string(v.size()));
    }
    Vec out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      out[i] = as_number(v[static_cast<std::size_t>(i)], path + "[" + std::to_string(i) + "]");
    }
    return out;
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline Json to_json_vec(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline FunnelSpec parse_funnel(Reader r, Eigen::Index n) {
  const Vec p = r.vec("p", n);
  const Vec q = r.vec("q", n);
  const Vec mu = r.vec("mu", n);
  r.finish();
  try {
    return FunnelSpec(p, q, mu);
  } catch (const ConfigError& e) {
    r.fail(e.what());
  }
}

inline Transform parse_transform(Reader r) {
  const std::string name = r.string("kind");
  const auto kind = transform_kind_from_string(name);
  if (!kind) r.fail("unknown transform kind '" + name + "'");
  const auto a = r.opt_number("a");
  std::optional<double> c;
  if (is_zeroing(*kind)) {
    c = r.opt_number("c");
  }
  const bool renormalize = r.boolean_or("renormalize", false);
  r.finish();
  try {
    const Transform t = Transform::make(*kind, a, c);
    return renormalize ? t.renormalized() : t;
  } catch (const ConfigError& e) {
    r.fail(e.what());
  }
}

inline PlantModel parse_plant(Reader r) {
  const std::string name = r.string("plant");
  if (name == "scara2r") {
    ScaraParams p;
    p.m = r.number_or("m", p.m);
    p.l = r.number_or("l", p.l);
    p.g = r.number_or("g", p.g);
    r.finish();
    try {
      p.validate();
    } catch (const ConfigError& e) {
      r.fail(e.what());
    }
    return ScaraPlant{p};
  }
  if (name == "omni") {
    r.finish();
    return OmniPlant{};
  }
  r.fail("unknown plant '" + name + "' (expected scara2r or omni)");
}

inline ReferenceTrajectory parse_reference(Reader r, Eigen::Index n) {
  const std::string kind = r.string("kind");
  ReferenceTrajectory::Kind k;
  if (kind == "constant") {
    k = ConstantReference{r.vec("setpoint", n)};
  } else if (kind == "sinusoid") {
    SinusoidReference s;
    s.center = r.vec_or("center", n, 0.0);
    s.amplitude = r.vec("amplitude", n);
    s.omega = r.vec("omega", n);
    s.phase = r.vec_or("phase", n, 0.0);
    k = s;
  } else if (kind == "circle_joint") {
    if (n != 2) r.fail("circle_joint needs a 2-dimensional plant");
    CircleReference c;
    c.center = r.vec("center", 2);
    c.radius = r.number("radius");
    c.omega = r.number("omega");
    k = c;
  } else {
    r.fail("unknown reference kind '" + kind + "'");
  }
  r.finish();
  try {
    return ReferenceTrajectory(std::move(k));
  } catch (const ConfigError& e) {
    r.fail(e.what());
  }
}

inline std::optional<DisturbanceTerm> parse_disturbance_term(Reader r, Eigen::Index n) {
  const std::string kind = r.string("kind");
  std::optional<DisturbanceTerm> term;
  if (kind == "zero") {
  } else if (kind == "constant") {
    term = ConstantDisturbance{r.vec("value", n)};
  } else if (kind == "sinusoid") {
    term = SinusoidDisturbance{r.vec("amplitude", n), r.vec("omega", n), r.vec_or("phase", n, 0.0)};
  } else if (kind == "jerk_pulse") {
    JerkPulse j;
    j.t_start = r.number("t_start");
    j.duration = r.number("duration");
    j.magnitude = r.vec("magnitude", n);
    term = j;
  } else {
    r.fail("unknown disturbance kind '" + kind + "'");
  }
  r.finish();
  return term;
}

inline DisturbanceModel parse_disturbance(const std::optional<Json>& j, const std::string& path,
                                          Eigen::Index n) {
  std::vector<DisturbanceTerm> terms;
  if (j) {
    const Json list = j->is_array() ? *j : Json::array({*j});
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string p = path + "[" + std::to_string(i) + "]";
      if (auto t = parse_disturbance_term(Reader(list[i], p), n)) terms.push_back(std::move(*t));
    }
  }
  try {
    return DisturbanceModel(n, std::move(terms));
  } catch (const ConfigError& e) {
    Reader::fail_at(path, e.what());
  }
}

inline ControllerParams parse_controller(Reader r, Eigen::Index n) {
  ControllerParams c;
  c.funnel_x = parse_funnel(r.child("funnel_x"), n);
  c.psi_x = parse_transform(r.child("psi_x"));
  c.v_max = r.vec("v_max", n);
  if (r.has("funnel_v")) c.funnel_v = parse_funnel(r.child("funnel_v"), n);
  if (r.has("psi_v")) c.psi_v = parse_transform(r.child("psi_v"));
  c.tau_max = r.opt_vec("tau_max", n);
  r.finish();
  try {
    c.validate();
  } catch (const ConfigError& e) {
    r.fail(e.what());
  }
  return c;
}

inline Vec auto_or_vec(Reader& r, const std::string& key, Eigen::Index n, bool& is_auto) {
  const Json& v = r.raw(key);
  if (v.is_string()) {
    if (v.get<std::string>() != "auto") Reader::fail_at(r.sub(key), "expected a number, array or \"auto\"");
    is_auto = true;
    return Vec::Zero(n);
  }
  is_auto = false;
  return Reader::as_vec(v, r.sub(key), n);
}

inline FeasibilitySpec parse_feasibility(Reader r, const SimConfig& sim) {
  const auto n = plant_dim(sim.plant);
  const bool two_stage = sim.controller.mode() == ControlMode::two_stage;
  FeasibilitySpec f;
  FeasibilityBounds& b = f.bounds;
  b.v_ref_bar = auto_or_vec(r, "v_ref_bar", n, f.v_ref_bar_auto);
  if (f.v_ref_bar_auto) b.v_ref_bar = sim.reference.velocity_bound();
  if (two_stage) {
    b.d_bar = r.vec("d_bar", n);
    b.m_lower = r.number("m_lower");
    b.m_i = r.number("m_i");
    b.vm_lower = r.vec("vm_lower", n);
    b.vm_upper = r.vec("vm_upper", n);
    b.a_ref_bar = auto_or_vec(r, "a_ref_bar", n, f.a_ref_bar_auto);
    if (f.a_ref_bar_auto) b.a_ref_bar = default_a_ref_bar(sim.controller.psi_x, sim.controller.v_max);
  } else {
    b.d_bar = r.vec_or("d_bar", n, 0.0);
    b.vm_lower = Vec::Zero(n);
    b.vm_upper = Vec::Zero(n);
    b.a_ref_bar = Vec::Zero(n);
  }
  r.finish();
  try {
    b.validate();
  } catch (const ConfigError& e) {
    r.fail(e.what());
  }
  return f;
}

inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace detail

/// Parse and fully validate a scenario document held in `text`.
inline ScenarioConfig parse_config(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    // nlohmann reports the byte just past the offending token.
    const std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
    const auto [line, col] = detail::line_column(text, byte);
    throw ConfigSyntaxError("syntax error at line " + std::to_string(line) + ", column " +
                                std::to_string(col) + ": " + e.what(),
                            line, col);
  }

  detail::Reader root(doc, "");
  ScenarioConfig cfg;
  cfg.name = root.string("name");
  if (cfg.name.empty()) root.fail("name must not be empty");
  cfg.description = root.string_or("description", "");
  cfg.output = {cfg.name + "_trace.csv", cfg.name + "_summary.json"};
  SimConfig& sim = cfg.sim;
  sim.plant = detail::parse_plant(root.child("plant"));
  const auto n = plant_dim(sim.plant);
  sim.reference = detail::parse_reference(root.child("reference"), n);
  sim.disturbance = detail::parse_disturbance(root.opt_raw("disturbance"), "disturbance", n);
  sim.controller = detail::parse_controller(root.child("controller"), n);

  if (root.has("sim")) {
    detail::Reader s = root.child("sim");
    sim.dt = s.number_or("dt", sim.dt);
    sim.horizon = s.number_or("horizon", sim.horizon);
    const double stride = s.number_or("log_stride", 1.0);
    if (stride != std::floor(stride) || stride < 1.0) s.fail("log_stride must be a positive integer");
    sim.log_stride = static_cast<int>(stride);
    const std::string sampling = s.string_or("control_sampling", "continuous");
    if (sampling == "continuous") {
      sim.sampling = ControlSampling::continuous;
    } else if (sampling == "zoh") {
      sim.sampling = ControlSampling::zoh;
    } else {
      s.fail("control_sampling must be \"continuous\" or \"zoh\"");
    }
    sim.halt_threshold = s.opt_number("halt_threshold");
    sim.halt_dwell = s.number_or("halt_dwell", sim.halt_dwell);
    s.finish();
  }
  if (root.has("initial")) {
    detail::Reader i = root.child("initial");
    sim.x0 = i.opt_vec("x0", n);
    sim.v0 = i.opt_vec("v0", n);
    i.finish();
  }
  if (root.has("feasibility")) cfg.feasibility = detail::parse_feasibility(root.child("feasibility"), sim);
  if (root.has("output")) {
    detail::Reader o = root.child("output");
    cfg.output.trace = o.string_or("trace", cfg.output.trace);
    cfg.output.summary = o.string_or("summary", cfg.output.summary);
    o.finish();
  }
  root.finish();

  sim.validate();
  check_initial_conditions(sim);
  return cfg;
}

/// Canonical form: every field explicit, every vector expanded.
inline Json to_json(const ScenarioConfig& cfg) {
  using detail::to_json_vec;
  const SimConfig& sim = cfg.sim;
  Json j;
  j["name"] = cfg.name;
  if (!cfg.description.empty()) j["description"] = cfg.description;

  if (const auto* s = std::get_if<ScaraPlant>(&sim.plant)) {
    j["plant"] = {{"plant", "scara2r"}, {"m", s->params.m}, {"l", s->params.l}, {"g", s->params.g}};
  } else {
    j["plant"] = {{"plant", "omni"}};
  }

  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, ConstantReference>) {
          j["reference"] = {{"kind", "constant"}, {"setpoint", to_json_vec(k.setpoint)}};
        } else if constexpr (std::is_same_v<K, SinusoidReference>) {
          j["reference"] = {{"kind", "sinusoid"},
                            {"center", to_json_vec(k.center)},
                            {"amplitude", to_json_vec(k.amplitude)},
                            {"omega", to_json_vec(k.omega)},
                            {"phase", to_json_vec(k.phase)}};
        } else {
          j["reference"] = {{"kind", "circle_joint"},
                            {"center", to_json_vec(k.center)},
                            {"radius", k.radius},
                            {"omega", k.omega}};
        }
      },
      sim.reference.kind());

  Json dist = Json::array();
  for (const auto& term : sim.disturbance.terms()) {
    if (const auto* c = std::get_if<ConstantDisturbance>(&term)) {
      dist.push_back({{"kind", "constant"}, {"value", to_json_vec(c->value)}});
    } else if (const auto* s = std::get_if<SinusoidDisturbance>(&term)) {
      dist.push_back({{"kind", "sinusoid"},
                      {"amplitude", to_json_vec(s->amplitude)},
                      {"omega", to_json_vec(s->omega)},
                      {"phase", to_json_vec(s->phase)}});
    } else if (const auto* p = std::get_if<JerkPulse>(&term)) {
      dist.push_back({{"kind", "jerk_pulse"},
                      {"t_start", p->t_start},
                      {"duration", p->duration},
                      {"magnitude", to_json_vec(p->magnitude)}});
    }
  }
  j["disturbance"] = dist;

  const auto funnel = [](const FunnelSpec& f) {
    return Json{{"p", to_json_vec(f.p())}, {"q", to_json_vec(f.q())}, {"mu", to_json_vec(f.mu())}};
  };
  const auto transform = [](const Transform& t) {
    Json o{{"kind", std::string(to_string(t.kind()))}, {"a", t.a()}};
    if (t.zeroing()) o["c"] = t.c();
    return o;
  };
  const ControllerParams& c = sim.controller;
  Json ctrl;
  ctrl["funnel_x"] = funnel(c.funnel_x);
  ctrl["psi_x"] = transform(c.psi_x);
  ctrl["v_max"] = to_json_vec(c.v_max);
  if (c.funnel_v) ctrl["funnel_v"] = funnel(*c.funnel_v);
  if (c.psi_v) ctrl["psi_v"] = transform(*c.psi_v);
  if (c.tau_max) ctrl["tau_max"] = to_json_vec(*c.tau_max);
  j["controller"] = ctrl;

  Json s{{"dt", sim.dt},
         {"horizon", sim.horizon},
         {"log_stride", sim.log_stride},
         {"control_sampling", std::string(to_string(sim.sampling))},
         {"halt_dwell", sim.halt_dwell}};
  if (sim.halt_threshold) s["halt_threshold"] = *sim.halt_threshold;
  j["sim"] = s;

  if (sim.x0 || sim.v0) {
    Json init = Json::object();
    if (sim.x0) init["x0"] = to_json_vec(*sim.x0);
    if (sim.v0) init["v0"] = to_json_vec(*sim.v0);
    j["initial"] = init;
  }

  if (cfg.feasibility) {
    const auto& f = *cfg.feasibility;
    Json fj;
    fj["v_ref_bar"] = f.v_ref_bar_auto ? Json("auto") : to_json_vec(f.bounds.v_ref_bar);
    fj["d_bar"] = to_json_vec(f.bounds.d_bar);
    if (c.mode() == ControlMode::two_stage) {
      fj["m_lower"] = f.bounds.m_lower;
      fj["m_i"] = f.bounds.m_i;
      fj["vm_lower"] = to_json_vec(f.bounds.vm_lower);
      fj["vm_upper"] = to_json_vec(f.bounds.vm_upper);
      fj["a_ref_bar"] = f.a_ref_bar_auto ? Json("auto") : to_json_vec(f.bounds.a_ref_bar);
    }
    j["feasibility"] = fj;
  }

  j["output"] = {{"trace", cfg.output.trace}, {"summary", cfg.output.summary}};
  return j;
}

}  // namespace bfc
