#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "epg/core_model.hpp"
#include "epg/epg_dynamics.hpp"
#include "epg/game_design.hpp"
#include "epg/lyapunov_bounds.hpp"
#include "epg/revision_protocols.hpp"

namespace epg {

using Json = nlohmann::json;

/// A fully validated run description. Built only from a JSON tree; the tree is
/// kept so that dotted-key edits and merge patches can re-run validation.
struct Scenario {
  std::string name;
  EpidemicParams params;
  StrategyProfile profile;
  double c_star;
  double upsilon;
  double rho_star;
  bool rho_defaulted;
  double lambda;
  double rate_cap;
  SystemState initial;
  std::optional<double> endemic_beta;
  IntegrationOptions run;
  SaturationConfig saturation;
  BaselineConfig baseline;
  Json tree;

  static Scenario from_json(const Json& tree);
  static Scenario parse(const std::string& text);
  static Scenario load(const std::filesystem::path& path);

  SmithProtocol protocol() const { return SmithProtocol(lambda, rate_cap); }
  DesignTarget design() const;
  MechanismConfig mechanism(const DesignTarget& design) const;
};

/// Sets a numeric leaf addressed by a dotted path ("run.t_end",
/// "profile.beta.1") and re-validates. Intermediate objects are created.
Scenario with_number(const Scenario& scenario, const std::string& dotted_key, double value);

/// RFC 7386 merge patch followed by full re-validation.
Scenario with_patch(const Scenario& scenario, const Json& patch);

std::optional<double> lookup_number(const Json& tree, const std::string& dotted_key);

/// Percentage with four significant figures, e.g. 0.0196078 -> "1.961".
std::string percent4(double fraction);

Json design_report(const Scenario& scenario, const DesignTarget& design);

struct SimulationResult {
  DesignTarget design;
  Trajectory trajectory;
  TrajectorySummary summary;
  DissipationReport dissipation;
};

SimulationResult simulate(const Scenario& scenario);
Json summary_report(const SimulationResult& result);

/// I(t)/I*, B(t), q(t), reward cost and L(t) on stacked panels.
void write_trajectory_svg(std::ostream& out, const SimulationResult& result,
                          const std::string& title);

struct BoundRow {
  double upsilon = 0.0;
  double alpha = 0.0;
  double pi_star = 0.0;
  double floor = 0.0;
  std::optional<double> oracle;
};

/// Anytime bound on I/I* as a function of upsilon. The initial state must be
/// the endemic equilibrium at B(x0) with q = 0; for two strategies x0 must
/// also carry zero protocol storage. Otherwise PreconditionViolated.
///
/// With beta_tilde set, rows evaluate pi*_upsilon(upsilon^2 beta_tilde^2 / 2)
/// and its floor for that deviation instead, independent of the initial state.
std::vector<BoundRow> bound_table(const Scenario& scenario, std::span<const double> upsilons,
                                  double tol, int oracle_grid,
                                  std::optional<double> beta_tilde = std::nullopt);

void write_bound_csv(std::ostream& out, std::span<const BoundRow> rows);

struct BoundCurve {
  std::string label;
  std::vector<BoundRow> rows;
};
void write_bound_svg(std::ostream& out, std::span<const BoundCurve> curves,
                     const std::string& title, std::optional<double> target_line);

/// Transmission rate at t = 0, used as beta^o by the bound computations.
double initial_transmission(const Scenario& scenario);

UpsilonSelection select_upsilon(const Scenario& scenario, double target,
                                const UpsilonSearch& search = {});

struct SweepJobResult {
  std::string name;
  bool ok = false;
  std::string error;
  Json metrics;
};

struct SweepResult {
  std::vector<SweepJobResult> jobs;
  bool all_ok() const;
};

/// Runs the jobs of a manifest concurrently, writing per-job artifacts and
/// summary.csv into out_dir. threads == 0 picks the hardware concurrency.
SweepResult run_sweep(const std::filesystem::path& manifest, const std::filesystem::path& out_dir,
                      unsigned threads);

}  // namespace epg
