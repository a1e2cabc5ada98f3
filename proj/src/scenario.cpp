#include "epg/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include "epg/svg_plot.hpp"

namespace epg {

namespace {

constexpr double kEndemicStartTolerance = 1e-9;
constexpr double kRoundTripTolerance = 1e-12;
constexpr double kDissipationTolerance = 1e-6;

[[noreturn]] void parse_fail(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::ParseError, where + ": " + what);
}

const Json& require_object(const Json& parent, const char* key, const std::string& where) {
  if (!parent.contains(key)) parse_fail(where, std::string("missing section '") + key + "'");
  const Json& v = parent.at(key);
  if (!v.is_object()) parse_fail(where + "." + key, "expected an object");
  return v;
}

void reject_unknown(const Json& obj, std::initializer_list<const char*> allowed,
                    const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return it.key() == k; });
    if (!known) parse_fail(where, "unknown key '" + it.key() + "'");
  }
}

double number(const Json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) parse_fail(where, std::string("missing '") + key + "'");
  const Json& v = obj.at(key);
  if (!v.is_number()) parse_fail(where + "." + key, "expected a number");
  return v.get<double>();
}

double number_or(const Json& obj, const char* key, double fallback, const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  return number(obj, key, where);
}

Vector vector_of(const Json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) parse_fail(where, std::string("missing '") + key + "'");
  const Json& v = obj.at(key);
  if (!v.is_array()) parse_fail(where + "." + key, "expected an array of numbers");
  Vector out;
  for (const auto& e : v) {
    if (!e.is_number()) parse_fail(where + "." + key, "expected an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

EpidemicParams parse_params(const Json& root) {
  const Json& e = require_object(root, "epidemic", "scenario");
  reject_unknown(e, {"g", "sigma_bar", "omega_bar", "gamma"}, "epidemic");
  return EpidemicParams::make(number_or(e, "g", 0.0, "epidemic"), number(e, "sigma_bar", "epidemic"),
                              number(e, "omega_bar", "epidemic"), number(e, "gamma", "epidemic"));
}

StrategyProfile parse_profile(const Json& root, const EpidemicParams& params) {
  const Json& p = require_object(root, "profile", "scenario");
  reject_unknown(p, {"beta", "cost"}, "profile");
  return StrategyProfile::make(vector_of(p, "beta", "profile"), vector_of(p, "cost", "profile"),
                               params);
}

SaturationConfig parse_saturation(const Json& run) {
  SaturationConfig cfg;
  if (!run.contains("saturation")) return cfg;
  const Json& s = run.at("saturation");
  if (!s.is_object()) parse_fail("run.saturation", "expected an object");
  reject_unknown(s, {"mode", "q_min", "q_max", "rho"}, "run.saturation");
  const std::string mode = s.value("mode", std::string("off"));
  if (mode == "off") {
    cfg.mode = SaturationMode::Off;
  } else if (mode == "manual") {
    cfg.mode = SaturationMode::Manual;
    cfg.q_min = number(s, "q_min", "run.saturation");
    cfg.q_max = number(s, "q_max", "run.saturation");
  } else if (mode == "smith_auto") {
    cfg.mode = SaturationMode::SmithAuto;
  } else {
    parse_fail("run.saturation.mode", "expected off, manual or smith_auto, got '" + mode + "'");
  }
  if (s.contains("rho") && !s.at("rho").is_null()) cfg.rho = number(s, "rho", "run.saturation");
  return cfg;
}

BaselineConfig parse_baseline(const Json& run) {
  BaselineConfig cfg;
  if (!run.contains("baseline")) return cfg;
  const Json& b = run.at("baseline");
  if (!b.is_object()) parse_fail("run.baseline", "expected an object");
  reject_unknown(b, {"enabled", "mu", "x_check"}, "run.baseline");
  cfg.enabled = b.value("enabled", false);
  cfg.mu = number_or(b, "mu", 1.0, "run.baseline");
  if (b.contains("x_check")) cfg.x_check = vector_of(b, "x_check", "run.baseline");
  return cfg;
}

void check_embedded_report(const Scenario& s) {
  if (!s.tree.contains("design_report")) return;
  const Json& embedded = s.tree.at("design_report");
  const Json fresh = design_report(s, s.design());
  for (const char* key : {"beta_star", "I_star", "R_star", "rho_star", "zeta1", "zeta2"}) {
    if (!embedded.contains(key)) continue;
    const double a = embedded.at(key).get<double>();
    const double b = fresh.at(key).get<double>();
    if (std::abs(a - b) > kRoundTripTolerance * std::max(1.0, std::abs(b))) {
      std::ostringstream os;
      os << "embedded design_report." << key << " = " << a << " but the scenario yields " << b;
      throw Error(ErrorCode::InvalidArgument, os.str());
    }
  }
  for (const char* key : {"x_star", "r_star"}) {
    if (!embedded.contains(key)) continue;
    const auto a = embedded.at(key).get<Vector>();
    const auto b = fresh.at(key).get<Vector>();
    bool same = a.size() == b.size();
    for (std::size_t i = 0; same && i < a.size(); ++i) {
      same = std::abs(a[i] - b[i]) <= kRoundTripTolerance * std::max(1.0, std::abs(b[i]));
    }
    if (!same) {
      throw Error(ErrorCode::InvalidArgument,
                  std::string("embedded design_report.") + key + " does not match the scenario");
    }
  }
}

}  // namespace

Scenario Scenario::from_json(const Json& tree) {
  if (!tree.is_object()) parse_fail("scenario", "expected a JSON object at the top level");
  reject_unknown(tree,
                 {"name", "profile", "epidemic", "design", "protocol", "initial", "run",
                  "design_report"},
                 "scenario");

  EpidemicParams params = parse_params(tree);
  StrategyProfile profile = parse_profile(tree, params);

  const Json& d = require_object(tree, "design", "scenario");
  reject_unknown(d, {"c_star", "upsilon", "rho_star"}, "design");
  const double c_star = number(d, "c_star", "design");
  const double upsilon = number(d, "upsilon", "design");
  if (!(upsilon > 0.0) || !std::isfinite(upsilon)) {
    throw Error(ErrorCode::InvalidArgument, "design.upsilon must be positive");
  }

  double lambda = 0.1;
  double rate_cap = 0.1;
  if (tree.contains("protocol")) {
    const Json& p = require_object(tree, "protocol", "scenario");
    reject_unknown(p, {"kind", "lambda", "T_bar"}, "protocol");
    const std::string kind = p.value("kind", std::string("smith"));
    if (kind != "smith") parse_fail("protocol.kind", "only 'smith' is supported, got '" + kind + "'");
    lambda = number_or(p, "lambda", lambda, "protocol");
    rate_cap = number_or(p, "T_bar", rate_cap, "protocol");
  }
  SmithProtocol(lambda, rate_cap);  // validates

  const Json& in = require_object(tree, "initial", "scenario");
  reject_unknown(in, {"endemic_at_beta", "I", "R", "x", "q"}, "initial");
  SystemState initial;
  std::optional<double> endemic_beta;
  {
    const auto pop = PopulationState::make(vector_of(in, "x", "initial"));
    initial.x.assign(pop.values().begin(), pop.values().end());
  }
  if (in.contains("endemic_at_beta")) {
    if (in.contains("I") || in.contains("R") || in.contains("q")) {
      parse_fail("initial", "endemic_at_beta excludes explicit I, R and q");
    }
    const double b = number(in, "endemic_at_beta", "initial");
    if (initial.x.size() != profile.size()) {
      throw Error(ErrorCode::InvalidArgument, "initial.x length does not match the profile");
    }
    const double bx = profile.transmission(initial.x);
    if (std::abs(bx - b) > kSimplexTolerance) {
      std::ostringstream os;
      os << "endemic_at_beta = " << b << " but beta'x = " << bx;
      throw Error(ErrorCode::InvalidArgument, os.str());
    }
    if (!(b > params.sigma())) {
      throw Error(ErrorCode::InvalidArgument, "endemic_at_beta must exceed sigma");
    }
    const auto eq = endemic_fractions(params, b);
    initial.I = eq.I;
    initial.R = eq.R;
    initial.q = 0.0;
    endemic_beta = b;
  } else {
    initial.I = number(in, "I", "initial");
    initial.R = number(in, "R", "initial");
    initial.q = number_or(in, "q", 0.0, "initial");
  }
  validate_state(initial, profile);

  IntegrationOptions run;
  SaturationConfig saturation;
  BaselineConfig baseline;
  if (tree.contains("run")) {
    const Json& r = require_object(tree, "run", "scenario");
    reject_unknown(r, {"t_end", "tol", "abs_tol", "sample_interval", "saturation", "baseline"},
                   "run");
    run.t_end = number_or(r, "t_end", run.t_end, "run");
    run.rel_tol = number_or(r, "tol", run.rel_tol, "run");
    run.abs_tol = number_or(r, "abs_tol", run.abs_tol, "run");
    run.sample_interval = number_or(r, "sample_interval", run.sample_interval, "run");
    saturation = parse_saturation(r);
    baseline = parse_baseline(r);
  }
  if (!(run.t_end > 0.0) || !(run.rel_tol > 0.0) || !(run.abs_tol > 0.0) ||
      !(run.sample_interval > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "run.t_end, tol, abs_tol and sample_interval must be positive");
  }
  if (baseline.enabled && baseline.x_check.size() != profile.size()) {
    throw Error(ErrorCode::InvalidArgument, "run.baseline.x_check length does not match the profile");
  }

  // The design is computed once here so that every invalid budget or rho
  // surfaces at load time.
  bool rho_defaulted = !d.contains("rho_star") || d.at("rho_star").is_null();
  double rho_star = 0.0;
  if (rho_defaulted) {
    const DesignTarget probe = optimal_target(profile, params, c_star, 1.0);
    rho_star = min_valid_rho(profile, probe.beta_star);
  } else {
    rho_star = number(d, "rho_star", "design");
  }

  Scenario s{tree.value("name", std::string("scenario")),
             params,
             profile,
             c_star,
             upsilon,
             rho_star,
             rho_defaulted,
             lambda,
             rate_cap,
             std::move(initial),
             endemic_beta,
             run,
             saturation,
             baseline,
             tree};
  (void)s.design();
  check_embedded_report(s);
  return s;
}

Scenario Scenario::parse(const std::string& text) {
  Json tree;
  try {
    tree = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  try {
    return from_json(tree);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

Scenario Scenario::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open scenario file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

DesignTarget Scenario::design() const { return optimal_target(profile, params, c_star, rho_star); }

MechanismConfig Scenario::mechanism(const DesignTarget& design) const {
  MechanismConfig cfg;
  cfg.design = design;
  cfg.upsilon = upsilon;
  cfg.saturation = saturation;
  cfg.baseline = baseline;
  return cfg;
}

std::optional<double> lookup_number(const Json& tree, const std::string& dotted_key) {
  const Json* node = &tree;
  std::stringstream ss(dotted_key);
  std::string part;
  while (std::getline(ss, part, '.')) {
    if (node->is_object() && node->contains(part)) {
      node = &node->at(part);
    } else if (node->is_array() && !part.empty() &&
               std::all_of(part.begin(), part.end(), ::isdigit)) {
      const std::size_t idx = std::stoul(part);
      if (idx >= node->size()) return std::nullopt;
      node = &node->at(idx);
    } else {
      return std::nullopt;
    }
  }
  if (!node->is_number()) return std::nullopt;
  return node->get<double>();
}

Scenario with_number(const Scenario& scenario, const std::string& dotted_key, double value) {
  if (dotted_key.empty()) throw Error(ErrorCode::InvalidArgument, "empty key");
  Json tree = scenario.tree;
  Json* node = &tree;
  std::stringstream ss(dotted_key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const std::string& p = parts[k];
    const bool last = k + 1 == parts.size();
    if (node->is_array()) {
      if (p.empty() || !std::all_of(p.begin(), p.end(), ::isdigit)) {
        throw Error(ErrorCode::InvalidArgument, "'" + p + "' is not an array index in " + dotted_key);
      }
      const std::size_t idx = std::stoul(p);
      if (idx >= node->size()) {
        throw Error(ErrorCode::InvalidArgument, "index out of range in " + dotted_key);
      }
      node = &(*node)[idx];
    } else {
      if (!node->is_object()) *node = Json::object();
      node = &(*node)[p];
    }
    if (last) *node = value;
  }
  return Scenario::from_json(tree);
}

Scenario with_patch(const Scenario& scenario, const Json& patch) {
  Json tree = scenario.tree;
  tree.merge_patch(patch);
  try {
    return Scenario::from_json(tree);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

std::string percent4(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", 100.0 * fraction);
  return buf;
}

Json design_report(const Scenario& scenario, const DesignTarget& design) {
  Json j;
  j["c_star"] = design.c_star;
  j["beta_star"] = design.beta_star;
  j["x_star"] = design.x_star;
  j["I_star"] = design.I_star;
  j["R_star"] = design.R_star;
  j["I_star_percent"] = percent4(design.I_star);
  j["R_star_percent"] = percent4(design.R_star);
  j["case"] = design.classification.kind == DesignCase::I ? "I" : "II";
  // One-based strategy indices carrying x*.
  Json support = Json::array();
  for (std::size_t i = 0; i < design.x_star.size(); ++i) {
    if (design.x_star[i] > 0.0) support.push_back(i + 1);
  }
  j["support"] = support;
  j["r_star"] = design.r_star;
  j["r_offset"] = design.r_offset;
  j["rho_star"] = design.rho_star;
  j["rho_star_defaulted"] = scenario.rho_defaulted;
  j["rho_valid"] =
      validate_rho(scenario.profile, design.classification, design.beta_star, design.rho_star);
  j["zeta1"] = design.zeta1;
  j["zeta2"] = design.zeta2;
  j["q_limit_set"] = {design.q_lo, design.q_hi};
  j["assumption1"] = check_assumption1(scenario.profile);
  return j;
}

SimulationResult simulate(const Scenario& scenario) {
  SimulationResult out{scenario.design(), {}, {}, {}};
  const auto protocol = scenario.protocol();
  out.trajectory = integrate(protocol, scenario.profile, scenario.params,
                             scenario.mechanism(out.design), scenario.initial, scenario.run);
  out.summary = summarize(out.trajectory, out.design);
  if (!scenario.baseline.enabled && out.trajectory.has_lyapunov() &&
      out.trajectory.samples.size() >= 3) {
    out.dissipation = check_dissipation(out.trajectory, kDissipationTolerance);
  }
  return out;
}

Json summary_report(const SimulationResult& r) {
  const auto& s = r.summary;
  Json j;
  j["peak_I_ratio"] = s.peak_I_ratio;
  j["peak_time"] = s.peak_time;
  j["settling_time"] = s.settling_time ? Json(*s.settling_time) : Json(nullptr);
  j["long_run_cost"] = s.long_run_cost;
  j["cost_window"] = s.cost_window;
  j["c_star"] = r.design.c_star;
  j["late_q_distance"] = s.late_q_distance;
  j["max_beta_deviation"] = s.max_beta_deviation;
  j["I_star_percent"] = percent4(r.design.I_star);
  j["peak_I_percent"] = percent4(s.peak_I_ratio * r.design.I_star);
  j["samples"] = r.trajectory.samples.size();
  j["accepted_steps"] = r.trajectory.steps.accepted;
  j["rejected_steps"] = r.trajectory.steps.rejected;
  j["max_simplex_drift"] = r.trajectory.steps.max_simplex_drift;
  if (r.dissipation.checked > 0) {
    j["dissipation"] = {{"checked", r.dissipation.checked},
                        {"worst_margin", r.dissipation.worst_margin},
                        {"worst_time", r.dissipation.worst_time},
                        {"max_lyapunov_increase", r.dissipation.max_increase},
                        {"violations", r.dissipation.violations}};
  }
  return j;
}

void write_trajectory_svg(std::ostream& out, const SimulationResult& result,
                          const std::string& title) {
  const auto& samples = result.trajectory.samples;
  svg::Series ratio{"I/I*", {}, {}}, B{"B", {}, {}}, q{"q", {}, {}}, cost{"r'x", {}, {}},
      L{"L", {}, {}};
  for (const auto& s : samples) {
    ratio.x.push_back(s.t);
    ratio.y.push_back(s.state.I / result.design.I_star);
    B.x.push_back(s.t);
    B.y.push_back(s.B);
    q.x.push_back(s.t);
    q.y.push_back(s.state.q);
    cost.x.push_back(s.t);
    cost.y.push_back(s.reward_cost);
    L.x.push_back(s.t);
    L.y.push_back(s.lyapunov);
  }
  std::vector<svg::Panel> panels;
  panels.push_back({"I(t)/I*", "t [days]", {ratio}, 1.0, "1"});
  panels.push_back({"B(t)", "t [days]", {B}, result.design.beta_star, "beta*"});
  panels.push_back({"q(t)", "t [days]", {q}, 0.0, "0"});
  panels.push_back({"x(t)'r(t)", "t [days]", {cost}, result.design.c_star, "c*"});
  if (result.trajectory.has_lyapunov()) panels.push_back({"L(t)", "t [days]", {L}, {}, ""});
  svg::write(out, panels, title);
}

double initial_transmission(const Scenario& scenario) {
  return scenario.profile.transmission(scenario.initial.x);
}

namespace {

void require_endemic_start(const Scenario& scenario) {
  const double b0 = initial_transmission(scenario);
  if (!(b0 > scenario.params.sigma())) {
    throw Error(ErrorCode::PreconditionViolated,
                "initial transmission rate does not exceed sigma; no endemic start");
  }
  const auto eq = endemic_fractions(scenario.params, b0);
  const auto& s = scenario.initial;
  if (std::abs(s.I - eq.I) > kEndemicStartTolerance * eq.I ||
      std::abs(s.R - eq.R) > kEndemicStartTolerance * eq.R || s.q != 0.0) {
    std::ostringstream os;
    os << "the anytime bound needs the endemic equilibrium at B(x0) = " << b0 << " (I = " << eq.I
       << ", R = " << eq.R << ") with q = 0 as initial state";
    throw Error(ErrorCode::PreconditionViolated, os.str());
  }
}

}  // namespace

std::vector<BoundRow> bound_table(const Scenario& scenario, std::span<const double> upsilons,
                                  double tol, int oracle_grid, std::optional<double> beta_tilde) {
  const DesignTarget design = scenario.design();
  if (beta_tilde) {
    if (!std::isfinite(*beta_tilde)) throw Error(ErrorCode::InvalidArgument, "beta_tilde must be finite");
    std::vector<BoundRow> rows;
    for (double u : upsilons) {
      const BoundProblem problem = make_bound_problem(scenario.params, scenario.profile, design, u);
      BoundRow row;
      row.upsilon = u;
      row.alpha = 0.5 * u * u * *beta_tilde * *beta_tilde;
      row.pi_star = pi_star(problem, row.alpha, tol);
      row.floor = anytime_bound_floor(problem, design.beta_star + std::abs(*beta_tilde));
      if (oracle_grid > 0) row.oracle = pi_star_oracle(problem, row.alpha, oracle_grid);
      rows.push_back(row);
    }
    return rows;
  }
  require_endemic_start(scenario);
  const auto protocol = scenario.protocol();
  std::vector<BoundRow> rows;
  rows.reserve(upsilons.size());
  for (double u : upsilons) {
    BoundProblem problem = make_bound_problem(scenario.params, scenario.profile, design, u);
    BoundRow row;
    row.upsilon = u;
    if (scenario.profile.size() == 2) {
      const AnytimeBound b = anytime_bound_n2(protocol, problem, design, scenario.initial.x, tol);
      row.alpha = b.alpha;
      row.pi_star = b.pi_star;
      row.floor = b.floor;
    } else {
      const InitialLevel level = initial_level_general(protocol, problem, design, scenario.initial.x);
      row.alpha = level.alpha;
      row.pi_star = pi_star(problem, level.alpha, tol);
      row.floor = std::numeric_limits<double>::quiet_NaN();
    }
    if (oracle_grid > 0) row.oracle = pi_star_oracle(problem, row.alpha, oracle_grid);
    rows.push_back(row);
  }
  return rows;
}

void write_bound_csv(std::ostream& out, std::span<const BoundRow> rows) {
  const bool oracle = std::any_of(rows.begin(), rows.end(), [](const BoundRow& r) { return r.oracle.has_value(); });
  out << "upsilon,alpha,pi_star,floor";
  if (oracle) out << ",oracle_value";
  out << '\n';
  out.precision(12);
  for (const auto& r : rows) {
    out << r.upsilon << ',' << r.alpha << ',' << r.pi_star << ',' << r.floor;
    if (oracle) {
      out << ',';
      if (r.oracle) out << *r.oracle;
    }
    out << '\n';
  }
}

void write_bound_svg(std::ostream& out, std::span<const BoundCurve> curves,
                     const std::string& title, std::optional<double> target_line) {
  svg::Panel panel{"pi*_upsilon(alpha(upsilon))", "upsilon", {}, target_line,
                   target_line ? "target" : ""};
  for (const auto& c : curves) {
    svg::Series s{c.label, {}, {}};
    for (const auto& r : c.rows) {
      s.x.push_back(r.upsilon);
      s.y.push_back(r.pi_star);
    }
    panel.series.push_back(std::move(s));
  }
  svg::write(out, {panel}, title);
}

UpsilonSelection select_upsilon(const Scenario& scenario, double target,
                                const UpsilonSearch& search) {
  require_endemic_start(scenario);
  const DesignTarget design = scenario.design();
  const double storage = ipc_storage(scenario.protocol(), scenario.initial.x, design.r_offset);
  if (storage > kStorageZeroTolerance) {
    std::ostringstream os;
    os << "initial protocol storage " << storage << " is not zero";
    throw Error(ErrorCode::PreconditionViolated, os.str());
  }
  return select_upsilon(scenario.params, scenario.profile, design, initial_transmission(scenario),
                        target, search);
}

bool SweepResult::all_ok() const {
  return std::all_of(jobs.begin(), jobs.end(), [](const SweepJobResult& j) { return j.ok; });
}

namespace {

std::vector<double> parse_upsilons(const Json& spec) {
  std::vector<double> out;
  if (spec.is_array()) {
    for (const auto& v : spec) out.push_back(v.get<double>());
  } else if (spec.is_object()) {
    const double from = spec.at("from").get<double>();
    const double to = spec.at("to").get<double>();
    const int count = spec.at("count").get<int>();
    if (count < 1) throw Error(ErrorCode::InvalidArgument, "upsilons.count must be positive");
    for (int k = 0; k < count; ++k) {
      out.push_back(count == 1 ? from : from + (to - from) * k / (count - 1));
    }
  } else {
    throw Error(ErrorCode::ParseError, "upsilons must be an array or {from, to, count}");
  }
  return out;
}

std::string safe_name(const std::string& name) {
  std::string out;
  for (char c : name) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
  return out.empty() ? "job" : out;
}

struct JobSpec {
  std::string name;
  Json patch;
};

}  // namespace

SweepResult run_sweep(const std::filesystem::path& manifest_path,
                      const std::filesystem::path& out_dir, unsigned threads) {
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open manifest " + manifest_path.string());
  Json manifest;
  try {
    manifest = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  if (!manifest.is_object()) throw Error(ErrorCode::ParseError, "manifest must be an object");
  reject_unknown(manifest,
                 {"base", "kind", "upsilons", "tol", "oracle_grid", "beta_tilde", "target", "jobs", "title"},
                 "manifest");

  const std::string kind = manifest.value("kind", std::string("simulate"));
  if (kind != "simulate" && kind != "bound") {
    throw Error(ErrorCode::ParseError, "manifest.kind must be 'simulate' or 'bound'");
  }
  std::vector<JobSpec> specs;
  if (manifest.contains("jobs")) {
    for (const auto& j : manifest.at("jobs")) {
      specs.push_back({j.value("name", std::string("job") + std::to_string(specs.size())),
                       j.value("patch", Json::object())});
    }
  }
  SweepResult result;
  result.jobs.resize(specs.size());
  std::filesystem::create_directories(out_dir);

  std::optional<Scenario> base;
  std::vector<double> upsilons;
  double tol = 1e-4;
  int oracle_grid = 0;
  std::optional<double> beta_tilde;
  if (!specs.empty()) {
    if (!manifest.contains("base")) throw Error(ErrorCode::ParseError, "manifest needs a 'base' scenario");
    const Json& b = manifest.at("base");
    if (b.is_string()) {
      base = Scenario::load(manifest_path.parent_path() / b.get<std::string>());
    } else {
      base = Scenario::from_json(b);
    }
    if (kind == "bound") {
      if (!manifest.contains("upsilons")) throw Error(ErrorCode::ParseError, "bound sweeps need 'upsilons'");
      upsilons = parse_upsilons(manifest.at("upsilons"));
      tol = manifest.value("tol", tol);
      oracle_grid = manifest.value("oracle_grid", 0);
      if (manifest.contains("beta_tilde")) beta_tilde = manifest.at("beta_tilde").get<double>();
    }
  }

  std::vector<std::vector<BoundRow>> curves(specs.size());
  std::vector<std::optional<SimulationResult>> sims(specs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < specs.size(); k = next++) {
      auto& job = result.jobs[k];
      job.name = specs[k].name;
      try {
        const Scenario s = with_patch(*base, specs[k].patch);
        const auto file = out_dir / safe_name(job.name);
        if (kind == "bound") {
          curves[k] = bound_table(s, upsilons, tol, oracle_grid, beta_tilde);
          std::ofstream csv(file.string() + ".csv");
          write_bound_csv(csv, curves[k]);
          const auto& rows = curves[k];
          bool monotone = true;
          for (std::size_t i = 1; i < rows.size(); ++i) monotone &= rows[i].pi_star >= rows[i - 1].pi_star - tol;
          job.metrics = {{"beta_star", s.design().beta_star},
                         {"pi_star_min", rows.empty() ? 0.0 : rows.front().pi_star},
                         {"pi_star_max", rows.empty() ? 0.0 : rows.back().pi_star},
                         {"floor", rows.empty() ? 0.0 : rows.front().floor},
                         {"monotone", monotone}};
        } else {
          sims[k] = simulate(s);
          std::ofstream csv(file.string() + ".csv");
          write_trajectory_csv(csv, sims[k]->trajectory);
          std::ofstream svg(file.string() + ".svg");
          write_trajectory_svg(svg, *sims[k], job.name);
          job.metrics = summary_report(*sims[k]);
          job.metrics["upsilon"] = s.upsilon;
        }
        job.ok = true;
      } catch (const std::exception& e) {
        job.ok = false;
        job.error = e.what();
      }
    }
  };
  unsigned n_threads = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, std::max<std::size_t>(1, specs.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::ofstream summary(out_dir / "summary.csv");
  summary.precision(12);
  auto field = [&](const Json& m, const char* key) {
    if (!m.contains(key) || m.at(key).is_null()) return std::string();
    std::ostringstream os;
    os.precision(12);
    const Json& v = m.at(key);
    if (v.is_boolean()) os << (v.get<bool>() ? "true" : "false");
    else os << v.get<double>();
    return os.str();
  };
  auto quoted = [](std::string s) {
    std::string out = "\"";
    for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
  };
  const std::vector<const char*> cols =
      kind == "bound"
          ? std::vector<const char*>{"beta_star", "pi_star_min", "pi_star_max", "floor", "monotone"}
          : std::vector<const char*>{"upsilon", "peak_I_ratio", "peak_time", "settling_time",
                                     "long_run_cost", "late_q_distance", "max_beta_deviation"};
  summary << "job,status";
  for (const char* c : cols) summary << ',' << c;
  summary << ",error\n";
  for (const auto& job : result.jobs) {
    summary << quoted(job.name) << ',' << (job.ok ? "ok" : "failed");
    for (const char* c : cols) summary << ',' << (job.ok ? field(job.metrics, c) : std::string());
    summary << ',' << quoted(job.error) << '\n';
  }

  const std::string title = manifest.value("title", std::string("sweep"));
  if (kind == "bound" && !specs.empty()) {
    std::vector<BoundCurve> plotted;
    for (std::size_t k = 0; k < specs.size(); ++k) {
      if (!result.jobs[k].ok) continue;
      char label[64];
      std::snprintf(label, sizeof label, "beta*=%.4g", result.jobs[k].metrics.at("beta_star").get<double>());
      plotted.push_back({label, curves[k]});
    }
    std::optional<double> target;
    if (manifest.contains("target")) target = manifest.at("target").get<double>();
    std::ofstream svg(out_dir / "sweep.svg");
    write_bound_svg(svg, plotted, title, target);
  } else if (!specs.empty()) {
    svg::Panel ratio{"I(t)/I*", "t [days]", {}, 1.0, "1"};
    svg::Panel q{"q(t)", "t [days]", {}, 0.0, "0"};
    for (std::size_t k = 0; k < specs.size(); ++k) {
      if (!sims[k]) continue;
      svg::Series a{result.jobs[k].name, {}, {}}, b{result.jobs[k].name, {}, {}};
      for (const auto& s : sims[k]->trajectory.samples) {
        a.x.push_back(s.t);
        a.y.push_back(s.state.I / sims[k]->design.I_star);
        b.x.push_back(s.t);
        b.y.push_back(s.state.q);
      }
      ratio.series.push_back(std::move(a));
      q.series.push_back(std::move(b));
    }
    std::ofstream svg(out_dir / "sweep.svg");
    svg::write(svg, {ratio, q}, title);
  }
  return result;
}

}  // namespace epg
