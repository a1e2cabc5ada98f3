// Command-line front end. Talks to the library exclusively through epg.h.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "epg/epg.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 1;

struct Owned {
  char* p = nullptr;
  ~Owned() { epg_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

struct ScenarioHandle {
  epg_scenario* p = nullptr;
  ~ScenarioHandle() { epg_scenario_free(p); }
};

struct TrajectoryHandle {
  epg_trajectory* p = nullptr;
  ~TrajectoryHandle() { epg_trajectory_free(p); }
};

int report(epg_status st) {
  if (st == EPG_OK) return 0;
  std::cerr << "error [" << epg_last_error_kind() << "]: " << epg_last_error() << '\n';
  switch (st) {
    case EPG_ERR_VALIDATION:
    case EPG_ERR_INTEGRATION:
    case EPG_ERR_PRECONDITION:
      return static_cast<int>(st);
    default:
      return kExitUsage;
  }
}

std::string pct(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g%%", 100.0 * fraction);
  return buf;
}

std::string path_in(const std::string& dir, const std::string& file) {
  return (fs::path(dir) / file).string();
}

bool ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    std::cerr << "error: cannot create " << dir << ": " << ec.message() << '\n';
    return false;
  }
  return true;
}

struct Common {
  std::string scenario;
  std::string out = "out";
  std::optional<double> tol;
  std::optional<double> t_end;
  bool plot = false;
};

void add_common(CLI::App* cmd, Common& c, bool run_controls) {
  cmd->add_option("--scenario", c.scenario, "scenario JSON file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "output directory")->capture_default_str();
  cmd->add_option("--tol", c.tol, run_controls ? "integrator relative tolerance" : "tolerance on pi*");
  if (run_controls) cmd->add_option("--t-end", c.t_end, "simulation horizon in days");
  cmd->add_flag("--plot", c.plot, "also write SVG plots");
}

int load(const Common& c, ScenarioHandle& s) {
  return report(epg_scenario_load(c.scenario.c_str(), &s.p));
}

int cmd_design(const Common& c) {
  ScenarioHandle s;
  if (int rc = load(c, s)) return rc;
  Owned text;
  if (int rc = report(epg_design_report(s.p, &text.p))) return rc;
  const json r = json::parse(text.str());
  std::cout << "case           " << r["case"].get<std::string>() << '\n'
            << "beta*          " << r["beta_star"].get<double>() << '\n'
            << "x*             " << r["x_star"].dump() << '\n'
            << "I*, R*         " << r["I_star_percent"].get<std::string>() << "%, "
            << r["R_star_percent"].get<std::string>() << "%\n"
            << "r*             " << r["r_star"].dump() << '\n'
            << "rho*           " << r["rho_star"].get<double>()
            << (r["rho_valid"].get<bool>() ? " (valid)" : " (invalid)") << '\n'
            << "zeta1, zeta2   " << r["zeta1"].get<double>() << ", " << r["zeta2"].get<double>() << '\n'
            << "q limit set    [" << r["q_limit_set"][0].get<double>() << ", "
            << r["q_limit_set"][1].get<double>() << "]\n"
            << "assumption 1   " << (r["assumption1"].get<bool>() ? "holds" : "violated") << '\n';
  if (!ensure_dir(c.out)) return kExitUsage;
  {
    std::ofstream f(path_in(c.out, "design.json"));
    f << r.dump(2) << '\n';
  }
  return report(epg_design_embed(s.p, path_in(c.out, "scenario_with_design.json").c_str()));
}

int cmd_simulate(const Common& c, std::optional<double> upsilon) {
  ScenarioHandle s;
  if (int rc = load(c, s)) return rc;
  if (c.tol) {
    if (int rc = report(epg_scenario_set_number(s.p, "run.tol", *c.tol))) return rc;
  }
  if (c.t_end) {
    if (int rc = report(epg_scenario_set_number(s.p, "run.t_end", *c.t_end))) return rc;
  }
  if (upsilon) {
    if (int rc = report(epg_scenario_set_number(s.p, "design.upsilon", *upsilon))) return rc;
  }
  TrajectoryHandle t;
  if (int rc = report(epg_simulate(s.p, &t.p))) return rc;
  if (!ensure_dir(c.out)) return kExitUsage;
  if (int rc = report(epg_trajectory_write_csv(t.p, path_in(c.out, "trajectory.csv").c_str()))) return rc;
  if (c.plot) {
    if (int rc = report(epg_trajectory_write_svg(t.p, path_in(c.out, "trajectory.svg").c_str(),
                                                 fs::path(c.scenario).stem().string().c_str())))
      return rc;
  }
  Owned text;
  if (int rc = report(epg_trajectory_summary(t.p, &text.p))) return rc;
  const json r = json::parse(text.str());
  {
    std::ofstream f(path_in(c.out, "summary.json"));
    f << r.dump(2) << '\n';
  }
  std::cout << "peak I/I*        " << r["peak_I_ratio"].get<double>() << " at t = "
            << r["peak_time"].get<double>() << " (peak I = " << r["peak_I_percent"].get<std::string>()
            << "%, I* = " << r["I_star_percent"].get<std::string>() << "%)\n";
  std::cout << "settling time    ";
  if (r["settling_time"].is_null()) std::cout << "not settled within the horizon\n";
  else std::cout << r["settling_time"].get<double>() << '\n';
  std::cout << "long-run r'x     " << r["long_run_cost"].get<double>() << " over the last "
            << r["cost_window"].get<double>() << " days (c* = " << r["c_star"].get<double>() << ")\n";
  std::cout << "late |q| dist    " << r["late_q_distance"].get<double>() << '\n';
  std::cout << "max |B - beta*|  " << r["max_beta_deviation"].get<double>() << '\n';
  if (r.contains("dissipation")) {
    std::cout << "dissipation      worst margin " << r["dissipation"]["worst_margin"].get<double>()
              << ", max L increase " << r["dissipation"]["max_lyapunov_increase"].get<double>() << '\n';
  }
  return 0;
}

int cmd_bound(const Common& c, std::vector<double> upsilons, double from, double to, int count,
              int oracle_grid, std::optional<double> beta_tilde) {
  ScenarioHandle s;
  if (int rc = load(c, s)) return rc;
  if (upsilons.empty()) {
    for (int k = 0; k < count; ++k) upsilons.push_back(count == 1 ? from : from + (to - from) * k / (count - 1));
  }
  if (!ensure_dir(c.out)) return kExitUsage;
  const std::string csv = path_in(c.out, "bound.csv");
  const std::string svg = path_in(c.out, "bound.svg");
  epg_bound_options opts{c.tol.value_or(1e-4), oracle_grid, beta_tilde.has_value(),
                         beta_tilde.value_or(0.0)};
  Owned text;
  if (int rc = report(epg_bound_table(s.p, upsilons.data(), upsilons.size(), &opts, csv.c_str(),
                                      c.plot ? svg.c_str() : nullptr, &text.p)))
    return rc;
  const json rows = json::parse(text.str());
  std::printf("%10s %14s %10s %10s%s\n", "upsilon", "alpha", "pi_star", "floor",
              oracle_grid > 0 ? "     oracle" : "");
  for (const auto& r : rows) {
    std::printf("%10.4f %14.6e %10.6f %10.6f", r["upsilon"].get<double>(), r["alpha"].get<double>(),
                r["pi_star"].get<double>(), r["floor"].is_number() ? r["floor"].get<double>() : NAN);
    if (!r["oracle_value"].is_null()) std::printf(" %10.6f", r["oracle_value"].get<double>());
    std::printf("\n");
  }
  return 0;
}

int cmd_select(const Common& c, double target) {
  ScenarioHandle s;
  if (int rc = load(c, s)) return rc;
  double upsilon = 0.0, bound = 0.0, floor = 0.0;
  if (int rc = report(epg_select_upsilon(s.p, target, &upsilon, &bound, &floor))) return rc;
  std::printf("upsilon   %.6f\nbound     %.6f (target %.6g, overshoot %s)\nfloor     %.6f\n", upsilon,
              bound, target, pct(target - 1.0).c_str(), floor);
  if (int rc = report(epg_scenario_set_number(s.p, "design.upsilon", upsilon))) return rc;
  if (!ensure_dir(c.out)) return kExitUsage;
  const std::string derived = path_in(c.out, fs::path(c.scenario).stem().string() + "_selected.json");
  if (int rc = report(epg_scenario_save(s.p, derived.c_str()))) return rc;
  std::cout << "wrote " << derived << '\n';
  return 0;
}

int cmd_sweep(const std::string& manifest, const std::string& out, unsigned threads) {
  Owned text;
  const epg_status st = epg_sweep(manifest.c_str(), out.c_str(), threads, &text.p);
  if (text.p != nullptr) {
    for (const auto& job : json::parse(text.str())) {
      std::cout << (job["ok"].get<bool>() ? "ok      " : "FAILED  ") << job["name"].get<std::string>();
      if (!job["ok"].get<bool>()) std::cout << ": " << job["error"].get<std::string>();
      std::cout << '\n';
    }
  }
  if (st == EPG_OK) std::cout << "wrote " << path_in(out, "summary.csv") << '\n';
  return report(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Epidemic population game laboratory"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(epg_version()));

  Common design_opts, sim_opts, bound_opts, select_opts;
  auto* design = app.add_subcommand("design", "compute the optimal endemic target and reward");
  add_common(design, design_opts, false);

  auto* simulate = app.add_subcommand("simulate", "integrate the closed loop");
  add_common(simulate, sim_opts, true);
  std::optional<double> sim_upsilon;
  simulate->add_option("--upsilon", sim_upsilon, "override design.upsilon");

  auto* bound = app.add_subcommand("bound", "tabulate the anytime bound on I/I* over upsilon");
  add_common(bound, bound_opts, false);
  std::vector<double> upsilons;
  double from = 0.05, to = 2.5;
  int count = 100, oracle_grid = 0;
  bound->add_option("--upsilon", upsilons, "explicit upsilon values")->delimiter(',');
  bound->add_option("--from", from, "grid start")->capture_default_str();
  bound->add_option("--to", to, "grid end")->capture_default_str();
  bound->add_option("--count", count, "grid points")->capture_default_str()->check(CLI::PositiveNumber);
  bound->add_option("--oracle-grid", oracle_grid, "grid oracle resolution, 0 disables")
      ->capture_default_str();
  std::optional<double> beta_tilde;
  bound->add_option("--beta-tilde", beta_tilde,
                    "evaluate at a fixed transmission deviation instead of the initial state");

  auto* select = app.add_subcommand("select-upsilon", "largest upsilon meeting an overshoot target");
  add_common(select, select_opts, false);
  double target = 0.0;
  select->add_option("--target", target, "bound on I/I*, e.g. 1.344")->required();

  auto* sweep = app.add_subcommand("sweep", "run a manifest of scenario variations concurrently");
  std::string manifest, sweep_out = "out";
  unsigned threads = 0;
  sweep->add_option("--manifest", manifest, "sweep manifest JSON")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", sweep_out, "output directory")->capture_default_str();
  sweep->add_option("--threads", threads, "worker threads, 0 = hardware")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  if (*design) return cmd_design(design_opts);
  if (*simulate) return cmd_simulate(sim_opts, sim_upsilon);
  if (*bound) return cmd_bound(bound_opts, upsilons, from, to, count, oracle_grid, beta_tilde);
  if (*select) return cmd_select(select_opts, target);
  if (*sweep) return cmd_sweep(manifest, sweep_out, threads);
  return kExitUsage;
}
