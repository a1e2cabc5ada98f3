#pragma once

#include <limits>
#include <optional>
#include <span>

#include "epg/core_model.hpp"
#include "epg/game_design.hpp"
#include "epg/revision_protocols.hpp"
#include "epg/trajectory.hpp"

namespace epg {

/// Epidemic part of the Lyapunov function in scaled coordinates:
///   (I - I^) + I^ ln(I^/I) + (R - R^)^2 / (2 gamma) + upsilon^2 (B - beta*)^2 / 2
/// with I^ = eta (B - sigma), R^ = (1 - eta)(B - sigma). Zero exactly at the
/// endemic target, positive elsewhere.
double epidemic_storage(const EpidemicParams& params, double beta_star, double upsilon,
                        const ScaledEpidemic& scaled);

struct LyapunovLevel {
  double value = 0.0;
  double protocol_storage = 0.0;
  double epidemic_storage = 0.0;
};

/// L = S(x, p) + s(cal_I, cal_R, B) with p = q beta + r*  - c.
LyapunovLevel lyapunov_level(const PairwiseComparisonProtocol& protocol,
                             const StrategyProfile& profile, const EpidemicParams& params,
                             const DesignTarget& design, double upsilon, const SystemState& state);

struct DissipationReport {
  std::size_t checked = 0;
  /// min over interior samples of [-P - (I - I^)^2 - (omega/gamma)(R - R^)^2] - dL/dt.
  double worst_margin = std::numeric_limits<double>::infinity();
  double worst_time = 0.0;
  /// Largest sample-to-sample increase of L (<= 0 for a decreasing L).
  double max_increase = -std::numeric_limits<double>::infinity();
  double max_increase_time = 0.0;
  std::size_t violations = 0;
  double first_violation_time = 0.0;

  bool ok() const noexcept { return violations == 0; }
  void raise_if_violated() const;
};

/// Checks the dissipation inequality along a recorded trajectory using central
/// differences of L on the samples.
DissipationReport check_dissipation(const Trajectory& trajectory, double tolerance);

/// Inputs shared by the anytime-bound computations.
struct BoundProblem {
  EpidemicParams params;
  StrategyProfile profile;
  double beta_star;
  double I_star;
  double upsilon;
};

BoundProblem make_bound_problem(const EpidemicParams& params, const StrategyProfile& profile,
                                const DesignTarget& design, double upsilon);

/// sup { I/I* : s <= alpha } over the admissible scaled set, solved as a
/// quasi-convex program: bisection on the ratio, each level tested by a
/// golden-section search over B with cal_R eliminated in closed form.
/// The result is an upper bound accurate to `tol`; alpha = 0 gives exactly 1.
double pi_star(const BoundProblem& problem, double alpha, double tol = 1e-4);

/// Brute-force counterpart of pi_star: enumerates a grid over (B, cal_I, cal_R)
/// inside a box implied by the non-negativity of each storage term and returns
/// the best feasible ratio. Never exceeds the true supremum.
double pi_star_oracle(const BoundProblem& problem, double alpha, int grid);

/// Lower bound on pi_star(upsilon^2 (beta_o - beta*)^2 / 2) valid for every
/// upsilon: I^(beta_bar)/I* with beta_bar = min(|beta_o - beta*| + beta*, beta_n).
double anytime_bound_floor(const BoundProblem& problem, double beta_o);

struct AnytimeBound {
  double beta_o = 0.0;
  double alpha = 0.0;
  /// I(t) <= I* * pi_star for all t.
  double pi_star = 0.0;
  double floor = 0.0;
  /// |B(t) - beta*| <= beta_deviation for all t.
  double beta_deviation = 0.0;
  /// B(t) <= beta_o for all t, reported when beta* < beta_o.
  std::optional<double> beta_upper;
};

inline constexpr double kStorageZeroTolerance = 1e-12;

/// Bound for a start at the endemic equilibrium of beta_o = beta'x0 with q = 0
/// and zero protocol storage; alpha = upsilon^2 (beta_o - beta*)^2 / 2.
/// Throws PreconditionViolated if S(x0, r*-c) is not zero.
AnytimeBound anytime_bound_n2(const PairwiseComparisonProtocol& protocol,
                              const BoundProblem& problem, const DesignTarget& design,
                              std::span<const double> x0, double tol = 1e-4);

struct InitialLevel {
  double alpha = 0.0;
  double transmission_part = 0.0;
  double protocol_storage = 0.0;
  /// Same level with the literal Smith kernel instead of the exact integral.
  double alpha_literal = 0.0;
  double protocol_storage_literal = 0.0;
};

/// Initial Lyapunov level for an endemic start with q = 0 whose support may
/// fall outside that of x*: upsilon^2 beta~^2 / 2 + S(x0, r* - c).
InitialLevel initial_level_general(const SmithProtocol& protocol, const BoundProblem& problem,
                                   const DesignTarget& design, std::span<const double> x0);

struct UpsilonSelection {
  double upsilon = 0.0;
  double bound = 0.0;
  double floor = 0.0;
  bool capped = false;
};

struct UpsilonSearch {
  double tol = 1e-5;
  double upsilon_max = 10.0;
  double pi_tol = 1e-7;
};

/// Largest upsilon whose certified overshoot bound stays at or below `target`.
/// Throws TargetBelowFloor when no upsilon can reach the target.
UpsilonSelection select_upsilon(const EpidemicParams& params, const StrategyProfile& profile,
                                const DesignTarget& design, double beta_o, double target,
                                const UpsilonSearch& search = {});

}  // namespace epg
