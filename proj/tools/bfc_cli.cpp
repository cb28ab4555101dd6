// bfc: run funnel-control scenarios, report feasibility, sweep one parameter.
//
// Exit codes: 0 ok, 2 usage, 3 config (semantic), 4 numerical abort,
// 5 config (syntax).

#include "bfc/bfc.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#ifndef BFC_SCENARIO_DIR
#define BFC_SCENARIO_DIR "scenarios"
#endif

namespace fs = std::filesystem;

namespace {

enum Exit : int { kOk = 0, kUsage = 2, kConfig = 3, kAbort = 4, kSyntax = 5 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::mutex g_io;

void say(std::ostream& os, const std::string& msg) {
  std::lock_guard lock(g_io);
  os << msg << std::flush;
}

// A path to an existing file, or the name of a bundled scenario.
fs::path resolve_config(const std::string& arg) {
  if (fs::is_regular_file(arg)) return arg;
  const fs::path bundled = fs::path(BFC_SCENARIO_DIR) / (arg + ".json");
  if (fs::is_regular_file(bundled)) return bundled;
  throw UsageError("config not found: " + arg);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw UsageError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path default_out_dir() {
  if (const char* env = std::getenv("BFC_OUTPUT_DIR"); env && *env) return env;
  return "out";
}

int classify(const std::exception_ptr& ep, std::string& msg) {
  try {
    std::rethrow_exception(ep);
  } catch (const UsageError& e) {
    msg = e.what();
    return kUsage;
  } catch (const bfc::ConfigSyntaxError& e) {
    msg = e.what();
    return kSyntax;
  } catch (const bfc::ConfigError& e) {
    msg = std::string("config error: ") + e.what();
    return kConfig;
  } catch (const bfc::NumericalError& e) {
    msg = std::string("numerical error: ") + e.what();
    return kAbort;
  } catch (const std::exception& e) {
    msg = e.what();
    return kConfig;
  }
}

// Worst code wins: usage and syntax outrank semantic errors, which
// outrank aborts.
int severity(int code) {
  switch (code) {
    case kUsage: return 4;
    case kSyntax: return 3;
    case kConfig: return 2;
    case kAbort: return 1;
    default: return 0;
  }
}

template <class F>
void parallel_for(std::size_t count, unsigned jobs, F&& body) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(count)));
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) body(i);
  };
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

struct Overrides {
  std::optional<double> dt;
  std::optional<double> horizon;
  std::optional<std::string> sampling;
};

void apply_overrides(bfc::ScenarioConfig& cfg, const Overrides& o) {
  if (o.dt) cfg.sim.dt = *o.dt;
  if (o.horizon) cfg.sim.horizon = *o.horizon;
  if (o.sampling) {
    cfg.sim.sampling =
        *o.sampling == "zoh" ? bfc::ControlSampling::zoh : bfc::ControlSampling::continuous;
  }
  cfg.sim.validate();
}

std::vector<std::string> feasibility_warnings(const bfc::FeasibilityResult& f) {
  std::vector<std::string> out;
  const auto scan = [&](const bfc::StageReport& r) {
    for (std::size_t i = 0; i < r.pass.size(); ++i) {
      if (r.pass[i]) continue;
      std::ostringstream ss;
      ss << "feasibility: stage " << r.stage << " fails in dimension " << i + 1 << " (lhs "
         << r.lhs[static_cast<Eigen::Index>(i)] << " < rhs " << r.rhs[static_cast<Eigen::Index>(i)]
         << "); containment is not guaranteed";
      out.push_back(ss.str());
    }
  };
  scan(f.stage1);
  if (f.stage2) scan(*f.stage2);
  return out;
}

struct RunOutcome {
  int code = kOk;
  std::string message;
  std::optional<bfc::Metrics> metrics;
  bool aborted = false;
  double wall_s = 0.0;
};

RunOutcome run_one(const bfc::ScenarioConfig& cfg, const fs::path& out_dir, bool write_files) {
  RunOutcome o;
  std::vector<std::string> warnings;
  std::optional<bfc::FeasibilityResult> feas;
  if (cfg.feasibility) {
    feas = bfc::evaluate_feasibility(cfg);
    warnings = feasibility_warnings(*feas);
    for (const auto& w : warnings) say(std::cerr, cfg.name + ": warning: " + w + "\n");
  }

  const auto t0 = std::chrono::steady_clock::now();
  const bfc::SimResult r = bfc::run(cfg.sim);
  o.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.metrics = r.metrics;
  o.aborted = r.aborted;

  if (write_files) {
    fs::create_directories(out_dir);
    {
      std::ofstream csv(out_dir / cfg.output.trace);
      if (!csv) throw UsageError("cannot write " + (out_dir / cfg.output.trace).string());
      bfc::write_trace_csv(csv, r.trace);
    }
    std::ofstream js(out_dir / cfg.output.summary);
    if (!js) throw UsageError("cannot write " + (out_dir / cfg.output.summary).string());
    js << bfc::summary_json(cfg, r, feas, warnings).dump(2) << '\n';
  }

  if (r.aborted) {
    o.code = kAbort;
    o.message = "aborted: " + r.abort_reason;
  }
  return o;
}

std::string fmt_opt(const std::optional<double>& v) {
  if (!v) return "-";
  std::ostringstream ss;
  ss << *v;
  return ss.str();
}

// ---------------------------------------------------------------------------

int cmd_run(const std::vector<std::string>& configs, const fs::path& out_dir, unsigned jobs,
            const Overrides& ov) {
  std::vector<int> codes(configs.size(), kOk);
  parallel_for(configs.size(), jobs, [&](std::size_t i) {
    std::string msg;
    try {
      bfc::ScenarioConfig cfg = bfc::parse_config(read_file(resolve_config(configs[i])));
      apply_overrides(cfg, ov);
      const RunOutcome o = run_one(cfg, out_dir, true);
      const auto& m = *o.metrics;
      std::ostringstream ss;
      ss << cfg.name << ": " << (o.aborted ? "ABORTED" : "ok") << "  containment_x "
         << m.containment_fraction_x << "  containment_v " << fmt_opt(m.containment_fraction_v)
         << "  max|eps_x| " << m.max_abs_eps_x << "  wall " << std::setprecision(3) << o.wall_s
         << " s\n";
      if (o.aborted) ss << cfg.name << ": " << o.message << "\n";
      say(o.aborted ? std::cerr : std::cout, ss.str());
      codes[i] = o.code;
    } catch (...) {
      codes[i] = classify(std::current_exception(), msg);
      say(std::cerr, configs[i] + ": " + msg + "\n");
    }
  });
  int worst = kOk;
  for (int c : codes) {
    if (severity(c) > severity(worst)) worst = c;
  }
  return worst;
}

void print_report(std::ostream& os, const bfc::StageReport& r) {
  for (Eigen::Index i = 0; i < r.margin.size(); ++i) {
    os << std::setw(6) << r.stage << std::setw(5) << i + 1 << std::setw(14) << r.lhs[i]
       << std::setw(14) << r.rhs[i] << std::setw(14) << r.margin[i] << "  "
       << (r.pass[static_cast<std::size_t>(i)] ? "pass" : "FAIL") << '\n';
  }
}

int cmd_feasibility(const std::string& config, const std::optional<fs::path>& record) {
  const bfc::ScenarioConfig cfg = bfc::parse_config(read_file(resolve_config(config)));
  const bfc::FeasibilityResult f = bfc::evaluate_feasibility(cfg);

  std::cout << cfg.name << '\n' << std::setprecision(8);
  std::cout << std::setw(6) << "stage" << std::setw(5) << "dim" << std::setw(14) << "lhs"
            << std::setw(14) << "rhs" << std::setw(14) << "margin" << "  result\n";
  print_report(std::cout, f.stage1);
  if (f.stage2) print_report(std::cout, *f.stage2);
  if (f.d_bar_max) {
    std::cout << "d_bar_max:";
    for (Eigen::Index i = 0; i < f.d_bar_max->size(); ++i) std::cout << ' ' << (*f.d_bar_max)[i];
    std::cout << '\n';
  }
  std::cout << (f.all_pass() ? "feasible\n" : "NOT feasible\n");

  if (record) {
    if (record->has_parent_path()) fs::create_directories(record->parent_path());
    std::ofstream js(*record);
    if (!js) throw UsageError("cannot write " + record->string());
    bfc::Json j = bfc::feasibility_json(f);
    j["name"] = cfg.name;
    js << j.dump(2) << '\n';
  }
  return kOk;
}

// "controller.v_max" -> "/controller/v_max"; numeric segments index arrays.
bfc::Json::json_pointer dotted_pointer(const std::string& path) {
  std::string ptr;
  std::stringstream ss(path);
  std::string seg;
  while (std::getline(ss, seg, '.')) {
    if (seg.empty()) throw UsageError("bad parameter path: " + path);
    ptr += "/" + seg;
  }
  return bfc::Json::json_pointer(ptr);
}

bfc::Json parse_value(const std::string& text) {
  try {
    return bfc::Json::parse(text);
  } catch (const bfc::Json::parse_error&) {
    return text;  // bare word, e.g. a transform kind
  }
}

std::vector<std::string> split_values(const std::string& list) {
  // Commas inside brackets belong to array values.
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char ch : list) {
    if (ch == '[') ++depth;
    if (ch == ']') --depth;
    if (ch == ',' && depth == 0) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

int cmd_sweep(const std::string& config, const std::string& param, const std::string& values,
              const fs::path& out_dir, unsigned jobs, bool traces, const Overrides& ov) {
  const std::string text = read_file(resolve_config(config));
  bfc::Json base;
  try {
    base = bfc::Json::parse(text);
  } catch (const bfc::Json::parse_error&) {
    bfc::parse_config(text);  // rethrows with line information
    throw;
  }
  const auto ptr = dotted_pointer(param);
  if (!base.contains(ptr.parent_pointer())) throw UsageError("no such parameter section: " + param);
  const auto points = split_values(values);
  if (points.empty()) throw UsageError("--values is empty");
  const std::string base_name = base.value("name", std::string("sweep"));

  std::vector<RunOutcome> outcomes(points.size());
  parallel_for(points.size(), jobs, [&](std::size_t i) {
    try {
      bfc::Json doc = base;
      doc[ptr] = parse_value(points[i]);
      doc["name"] = base_name + "_" + std::to_string(i);
      doc.erase("output");
      bfc::ScenarioConfig cfg = bfc::parse_config(doc.dump());
      apply_overrides(cfg, ov);
      outcomes[i] = run_one(cfg, out_dir, traces);
    } catch (...) {
      outcomes[i].code = classify(std::current_exception(), outcomes[i].message);
    }
  });

  fs::create_directories(out_dir);
  const fs::path table = out_dir / (base_name + "_sweep.csv");
  std::ofstream csv(table);
  if (!csv) throw UsageError("cannot write " + table.string());
  const std::string header =
      "index,value,status,containment_fraction_x,containment_fraction_v,max_abs_eps_x,"
      "max_abs_eps_v,recovery_time,halt_time,saturation_fraction,control_effort\n";
  csv << header;
  std::cout << header;
  int worst = kOk;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const RunOutcome& o = outcomes[i];
    if (severity(o.code) > severity(worst)) worst = o.code;
    std::ostringstream row;
    std::string value = points[i];
    std::replace(value.begin(), value.end(), ',', ';');
    row << i << ',' << value << ',';
    if (!o.metrics) {
      row << "error,,,,,,,,\n";
      say(std::cerr, "point " + std::to_string(i) + ": " + o.message + "\n");
    } else {
      const auto& m = *o.metrics;
      row << (o.aborted ? "aborted" : "ok") << ',' << m.containment_fraction_x << ','
          << (m.containment_fraction_v ? std::to_string(*m.containment_fraction_v) : "") << ','
          << m.max_abs_eps_x << ','
          << (m.max_abs_eps_v ? std::to_string(*m.max_abs_eps_v) : "") << ','
          << (m.recovery_time ? std::to_string(*m.recovery_time) : "") << ','
          << (m.halt_time ? std::to_string(*m.halt_time) : "") << ',' << m.saturation_fraction
          << ',' << m.control_effort << '\n';
    }
    csv << row.str();
    std::cout << row.str();
  }
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Input-bounded funnel tracking control: simulate, check feasibility, sweep"};
  app.require_subcommand(1);

  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  std::string out_arg;
  Overrides ov;
  const auto add_overrides = [&](CLI::App* sub) {
    sub->add_option("--dt", ov.dt, "Override the integration step [s]")->check(CLI::PositiveNumber);
    sub->add_option("--horizon", ov.horizon, "Override the horizon [s]")->check(CLI::PositiveNumber);
    sub->add_option("--sampling", ov.sampling, "Override control sampling")
        ->check(CLI::IsMember({"continuous", "zoh"}));
  };

  std::vector<std::string> run_configs;
  auto* run = app.add_subcommand("run", "Simulate one or more scenarios");
  run->add_option("-c,--config", run_configs, "Scenario file or bundled scenario name")
      ->required();
  run->add_option("-o,--out", out_arg, "Output directory (default $BFC_OUTPUT_DIR or ./out)");
  run->add_option("-j,--jobs", jobs, "Parallel runs")->check(CLI::PositiveNumber);
  add_overrides(run);

  std::string feas_config;
  std::optional<std::string> record;
  auto* feas = app.add_subcommand("feasibility", "Print the actuation budget report");
  feas->add_option("-c,--config", feas_config, "Scenario file or bundled scenario name")
      ->required();
  feas->add_option("--record", record, "Also write the report as JSON to this path");

  std::string sweep_config, param, values;
  bool sweep_traces = false;
  auto* sweep = app.add_subcommand("sweep", "Grid over one parameter, one metrics row per point");
  sweep->add_option("-c,--config", sweep_config, "Scenario file or bundled scenario name")
      ->required();
  sweep->add_option("-p,--param", param, "Dotted path, e.g. controller.v_max")->required();
  sweep->add_option("-v,--values", values, "Comma-separated JSON values, e.g. 2,4,[6,8]")
      ->required();
  sweep->add_option("-o,--out", out_arg, "Output directory (default $BFC_OUTPUT_DIR or ./out)");
  sweep->add_option("-j,--jobs", jobs, "Parallel runs")->check(CLI::PositiveNumber);
  sweep->add_flag("--traces", sweep_traces, "Also write trace and summary per point");
  add_overrides(sweep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  const fs::path out_dir = out_arg.empty() ? default_out_dir() : fs::path(out_arg);
  try {
    if (*run) return cmd_run(run_configs, out_dir, jobs, ov);
    if (*feas) return cmd_feasibility(feas_config, record ? std::optional<fs::path>(*record) : std::nullopt);
    if (*sweep) return cmd_sweep(sweep_config, param, values, out_dir, jobs, sweep_traces, ov);
  } catch (...) {
    std::string msg;
    const int code = classify(std::current_exception(), msg);
    std::cerr << msg << '\n';
    return code;
  }
  return kUsage;
}
