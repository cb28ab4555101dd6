// Acceptance gate: one PASS/FAIL line per criterion, details indented
// below. Exit status is nonzero if any criterion fails.

#include "bfc/bfc.hpp"

#include <Eigen/LU>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace bfc;

namespace {

struct Criterion {
  int id;
  std::string title;
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

ScenarioConfig load(const std::string& name) {
  std::ifstream in(std::string(BFC_SCENARIO_DIR) + "/" + name + ".json");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

const std::vector<std::string> kScenarios = {"scara_nominal",  "scara_jerk_saturation", "scara_jerk_zeroing",
                                             "omni_nominal",   "omni_jerk_saturation",  "omni_jerk_zeroing"};

// Every logged command within its elementwise bound, no tolerance.
bool commands_bounded(const Trace& tr, const Vec& bound, std::size_t& violations) {
  violations = 0;
  for (const auto& r : tr.rows) {
    for (Eigen::Index i = 0; i < r.command.size(); ++i) {
      if (!(std::abs(r.command[i]) <= bound[i])) ++violations;
    }
  }
  return violations == 0;
}

// ---------------------------------------------------------------------------

Criterion containment() {
  Criterion c{1, "containment in the feasible regime (scara_nominal)"};
  const auto cfg = load("scara_nominal");
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run(cfg.sim);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.check(!r.aborted, "run completes");
  c.check(r.metrics.containment_fraction_x == 1.0,
          "containment_fraction_x = " + fmt(r.metrics.containment_fraction_x));
  c.check(r.metrics.containment_fraction_v && *r.metrics.containment_fraction_v == 1.0,
          "containment_fraction_v = " + fmt(r.metrics.containment_fraction_v.value_or(-1)));
  c.check(wall < 10.0, "runtime " + fmt(wall) + " s < 10 s");
  return c;
}

Criterion boundedness() {
  Criterion c{2, "hard input bound (six scenarios + 1000 fuzz cases)"};
  for (const auto& name : kScenarios) {
    const auto cfg = load(name);
    const auto r = run(cfg.sim);
    std::size_t bad = 0;
    const bool ok = commands_bounded(r.trace, cfg.sim.controller.command_bound(), bad);
    c.check(ok && !r.aborted, name + ": " + std::to_string(r.trace.rows.size()) + " rows, " +
                                  std::to_string(bad) + " violations");
  }

  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> eps(-10.0, 10.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::vector<Transform> psis = {Transform::saturation_tanh(5), Transform::saturation_logistic(5),
                                       Transform::saturation_smooth(5), Transform::zeroing_sine_gauss(),
                                       Transform::zeroing_poly_sine_gauss()};
  std::size_t bad = 0;
  for (int k = 0; k < 1000; ++k) {
    ControllerParams p;
    const Eigen::Index n = 1 + k % 3;
    p.funnel_x = FunnelSpec::broadcast(0.2 + unit(rng), 0.02, 0.05 + unit(rng), n);
    p.psi_x = psis[static_cast<std::size_t>(k) % psis.size()];
    p.v_max = Vec::NullaryExpr(n, [&] { return 0.05 + 10 * unit(rng); });
    const bool two = k % 2 == 0;
    if (two) {
      p.funnel_v = FunnelSpec::broadcast(2.0 + unit(rng), 0.02, 0.05 + unit(rng), n);
      p.psi_v = psis[static_cast<std::size_t>(k / 5) % psis.size()];
      p.tau_max = Vec::NullaryExpr(n, [&] { return 0.1 + 20 * unit(rng); });
    }
    const FunnelController ctrl(p);
    const double t = 60.0 * unit(rng);
    // Place the errors so that eps_x and eps_v take the drawn values.
    const Vec ex = Vec::NullaryExpr(n, [&] { return eps(rng); }).cwiseProduct(p.funnel_x.eval(t));
    const Vec x_ref = Vec::NullaryExpr(n, [&] { return unit(rng); });
    const Vec x = x_ref + ex;
    Vec v = Vec::Zero(n);
    if (two) {
      const Vec vr = ctrl.stage1_velocity(t, x, x_ref);
      v = vr + Vec::NullaryExpr(n, [&] { return eps(rng); }).cwiseProduct(p.funnel_v->eval(t));
    }
    const auto out = ctrl.step(t, x, v, x_ref);
    const Vec& bound = p.command_bound();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(std::abs(out.command[i]) <= bound[i])) ++bad;
      if (!(std::abs(out.diag.v_r[i]) <= p.v_max[i])) ++bad;
    }
  }
  c.check(bad == 0, "fuzz: 1000 cases, " + std::to_string(bad) + " violations");
  return c;
}

Criterion saturation_recovery() {
  Criterion c{3, "saturation recovery after a jerk (scara_jerk_saturation)"};
  const auto cfg = load("scara_jerk_saturation");
  const auto r = run(cfg.sim);
  const auto& ev = r.trace.events;
  std::optional<double> exit_t, reentry_t;
  for (const auto& e : ev) {
    if (e.stage != Stage::x) continue;
    if (e.type == EventType::exit && !exit_t) exit_t = e.t;
    if (e.type == EventType::reentry && exit_t && !reentry_t) reentry_t = e.t;
  }
  c.check(exit_t.has_value(), "exit event" + (exit_t ? " at t=" + fmt(*exit_t) : std::string()));
  c.check(reentry_t.has_value(), "re-entry event" + (reentry_t ? " at t=" + fmt(*reentry_t) : std::string()));

  // Time outside: first exit to the last re-entry, over both stages.
  bool all_back = true;
  double first_out = INFINITY, last_back = -INFINITY;
  for (const auto& iv : r.metrics.exit_intervals) {
    all_back = all_back && iv.reentered;
    first_out = std::min(first_out, iv.t_exit);
    last_back = std::max(last_back, iv.t_end);
  }
  const double outside = last_back - first_out;
  c.check(all_back && !r.metrics.exit_intervals.empty() && outside < 10.0,
          "every exit re-enters; span outside " + fmt(outside) + " s < 10 s");
  std::size_t bad = 0;
  c.check(commands_bounded(r.trace, cfg.sim.controller.command_bound(), bad),
          "command bound holds (" + std::to_string(bad) + " violations)");
  return c;
}

Criterion zeroing_halt() {
  Criterion c{4, "zeroing halt after a jerk (scara_jerk_zeroing)"};
  const auto cfg = load("scara_jerk_zeroing");
  const auto r = run(cfg.sim);
  std::optional<double> halt_t;
  for (const auto& e : r.trace.events) {
    if (e.type == EventType::halt) {
      halt_t = e.t;
      break;
    }
  }
  c.check(halt_t.has_value(), "halt event" + (halt_t ? " at t=" + fmt(*halt_t) : std::string()));
  const double limit = 1e-3 * cfg.sim.controller.tau_max->maxCoeff();
  double worst = 0.0;
  if (halt_t) {
    for (const auto& row : r.trace.rows) {
      if (row.t >= *halt_t) worst = std::max(worst, row.command.cwiseAbs().maxCoeff());
    }
  }
  c.check(halt_t && worst < limit, "max |tau| after halt " + fmt(worst) + " < " + fmt(limit));
  return c;
}

Criterion transform_properties() {
  Criterion c{5, "transform properties (five standard instantiations)"};
  const std::vector<std::pair<std::string, Transform>> psis = {
      {"saturation_tanh(5)", Transform::saturation_tanh(5)},
      {"saturation_logistic(5)", Transform::saturation_logistic(5)},
      {"saturation_smooth(5)", Transform::saturation_smooth(5)},
      {"zeroing_sine_gauss(2.52, 0.656)", Transform::zeroing_sine_gauss()},
      {"zeroing_poly_sine_gauss(3.1, 1.125)", Transform::zeroing_poly_sine_gauss()}};
  for (const auto& [name, psi] : psis) {
    c.check(psi(0.0) == 0.0, name + ": Psi(0) = 0");

    double odd = 0.0;
    for (int i = 0; i < 10000; ++i) {
      const double s = -20.0 + 40.0 * i / 9999.0;
      odd = std::max(odd, std::abs(psi(-s) + psi(s)));
    }
    c.check(odd <= 1e-12, name + ": oddness max |Psi(-s) + Psi(s)| = " + fmt(odd));

    // Largest drop between consecutive grid points (0 if nondecreasing).
    const auto max_drop = [&](double lo, double hi, double step, bool open) {
      double drop = 0.0;
      const int n = static_cast<int>(std::lround((hi - lo) / step));
      double prev = psi(open ? lo + step : lo);
      for (int i = open ? 2 : 1; i <= (open ? n - 1 : n); ++i) {
        const double y = psi(lo + i * step);
        drop = std::max(drop, prev - y);
        prev = y;
      }
      return drop;
    };

    if (!psi.zeroing()) {
      const double drop = max_drop(-10.0, 10.0, 1e-3, false);
      c.check(drop <= 0.0, name + ": nondecreasing on [-10, 10], max drop " + fmt(drop));
      const double hi = psi(10.0), lo = psi(-10.0);
      c.check(hi >= 1 - 1e-6 && hi <= 1 && -lo >= 1 - 1e-6 && -lo <= 1,
              name + ": |Psi(+-10)| = " + fmt(hi) + ", " + fmt(-lo));
    } else {
      const double drop = max_drop(-1.0, 1.0, 1e-4, true);
      c.check(drop <= 0.0, name + ": nondecreasing on (-1, 1), max drop " + fmt(drop));
      c.check(std::abs(psi(1.0) - 1.0) < 1e-2 && std::abs(psi(-1.0) + 1.0) < 1e-2,
              name + ": Psi(1) = " + fmt(psi(1.0)));
      c.check(std::abs(psi(20.0)) < 1e-3 && std::abs(psi(-20.0)) < 1e-3,
              name + ": |Psi(20)| = " + fmt(std::abs(psi(20.0))));
    }
  }
  return c;
}

Criterion feasibility_arithmetic() {
  Criterion c{6, "feasibility arithmetic (nominal bound set)"};
  FeasibilityBounds b;
  b.d_bar = Vec::Constant(2, 2.0);
  b.m_lower = 1.5;
  b.vm_lower = Vec::Constant(2, -5.0);
  b.vm_upper = Vec::Constant(2, 5.0);
  b.m_i = 1.6;
  b.v_ref_bar = Vec::Zero(2);
  b.a_ref_bar = Vec::Constant(2, 6.0);
  const FunnelSpec fv = FunnelSpec::broadcast(2.0, 0.02, 0.1, 2);
  const Vec tau = Vec::Constant(2, 10.0);

  // 10 - (5 + 1.6*2 + 0.1*1.98 + 6) / 1.5 = 10 - 14.398/1.5 = 0.401333...
  const double expected = 0.4013 + 1.0 / 30000.0;
  const auto r = check_stage2(fv, tau, b);
  const double err = (r.margin.array() - expected).abs().maxCoeff();
  c.check(err <= 1e-12 && r.all_pass, "stage II margin " + fmt(r.margin[0]) + ", |err| " + fmt(err));

  auto rt = b;
  rt.d_bar = max_disturbance(fv, tau, b);
  const double back = check_stage2(fv, tau, rt).margin.cwiseAbs().maxCoeff();
  c.check(back <= 1e-12, "d_bar_max " + fmt(rt.d_bar[0]) + " round-trips to margin " + fmt(back));

  auto hi = b;
  hi.a_ref_bar = Vec::Constant(2, 30.0);
  const auto f = check_stage2(fv, tau, hi);
  const double rhs = 38.398 / 1.5;
  c.check(!f.all_pass && std::abs(f.rhs[0] - rhs) <= 1e-12 && std::abs(f.rhs[0] - 25.599) < 5e-4,
          "a_ref_bar = 30 fails with RHS " + fmt(f.rhs[0]));
  return c;
}

Criterion numerical_plumbing() {
  Criterion c{7, "numerical plumbing (RK4 order, funnel rate, SCARA residual)"};
  const auto global_error = [](double dt) {
    Vec y = Vec::Ones(1);
    const int n = static_cast<int>(std::lround(1.0 / dt));
    for (int k = 0; k < n; ++k) y = rk4_step([](double, const Vec& s) -> Vec { return -s; }, y, k * dt, dt);
    return std::abs(y[0] - std::exp(-1.0));
  };
  const double e1 = global_error(1e-2), e2 = global_error(5e-3), e3 = global_error(2.5e-3);
  const double o1 = std::log2(e1 / e2), o2 = std::log2(e2 / e3);
  c.check(o1 >= 3.9 && o2 >= 3.9, "RK4 observed order " + fmt(o1) + ", " + fmt(o2));

  const FunnelSpec f(Vec::Constant(3, 0.2), Vec::Constant(3, 0.02), (Vec(3) << 0.1, 0.5, 2.0).finished());
  // Sampled over mu * t in (0, 10] with h scaled by 1 / mu; beyond that rho - q is
  // below the rounding noise of rho and no double difference quotient resolves it.
  double worst = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double mu = f.mu()[i], h = 1e-4 / mu;
    for (int k = 1; k <= 100; ++k) {
      const double t = 0.1 * k / mu;
      const double fd = (f.eval(t + h)[i] - f.eval(t - h)[i]) / (2 * h);
      const double an = f.rate(t)[i];
      worst = std::max(worst, std::abs(fd - an) / std::abs(an));
    }
  }
  c.check(worst < 1e-6, "funnel rate vs central difference, max rel err " + fmt(worst));

  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  double residual = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const ScaraParams p{1.0 + 0.5 * U(rng), 1.0 + 0.5 * U(rng), 9.81};
    const Vec x = Vec::NullaryExpr(2, [&] { return M_PI * U(rng); });
    const Vec v = Vec::NullaryExpr(2, [&] { return 3.0 * U(rng); });
    const Vec tau = Vec::NullaryExpr(2, [&] { return 10.0 * U(rng); });
    const Vec d = Vec::NullaryExpr(2, [&] { return 2.0 * U(rng); });
    const Vec a = scara_accel(p, x, v, tau, d);
    const auto t = scara_matrices(p, x, v);
    residual = std::max(residual, (t.M * a + t.V + t.G - tau - d).cwiseAbs().maxCoeff());
  }
  c.check(residual < 1e-10, "SCARA residual max " + fmt(residual));
  return c;
}

Criterion normalization_equivalence() {
  Criterion c{8, "normalization equivalence (10^4 random triples)"};
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::size_t mismatches = 0, exceptions = 0, inside = 0;
  for (int k = 0; k < 10000; ++k) {
    try {
      const Eigen::Index n = 1 + k % 4;
      const Vec q = Vec::NullaryExpr(n, [&] { return 1e-3 + U(rng); });
      const Vec p = q + Vec::NullaryExpr(n, [&] { return 1e-3 + 3 * U(rng); });
      const Vec mu = Vec::NullaryExpr(n, [&] { return 1e-3 + 2 * U(rng); });
      const FunnelSpec f(p, q, mu);
      const double t = 100.0 * U(rng);
      const Vec rho = f.eval(t);
      // Half the draws are exactly on the boundary in one coordinate.
      Vec e = Vec::NullaryExpr(n, [&] { return (2 * U(rng) - 1) * 1.3; }).cwiseProduct(rho);
      if (k % 2) e[k % n] = (k % 4 == 1 ? 1 : -1) * rho[k % n];
      const bool a = f.contains(e, t).all;
      const bool b = f.normalize(e, t).cwiseAbs().maxCoeff() < 1.0;
      inside += a ? 1 : 0;
      if (a != b) ++mismatches;
    } catch (...) {
      ++exceptions;
    }
  }
  c.check(mismatches == 0, std::to_string(mismatches) + " mismatches (" + std::to_string(inside) + " contained)");
  c.check(exceptions == 0, std::to_string(exceptions) + " exceptions");
  return c;
}

}  // namespace

int main() {
  const std::vector<Criterion (*)()> all = {containment,      boundedness,           saturation_recovery,
                                            zeroing_halt,     transform_properties,  feasibility_arithmetic,
                                            numerical_plumbing, normalization_equivalence};
  int failed = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    Criterion c{static_cast<int>(i) + 1, "(aborted)"};
    try {
      c = all[i]();
    } catch (const std::exception& e) {
      c.pass = false;
      c.notes.push_back(std::string("FAIL exception: ") + e.what());
    }
    std::cout << (c.pass ? "PASS" : "FAIL") << "  criterion " << c.id << ": " << c.title << '\n';
    for (const auto& n : c.notes) std::cout << "        " << n << '\n';
    failed += c.pass ? 0 : 1;
  }
  std::cout << (failed ? std::to_string(failed) + " criterion(s) failed\n" : "all criteria passed\n");
  return failed ? 1 : 0;
}
