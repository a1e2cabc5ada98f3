#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>

#include "epg/core_model.hpp"
#include "epg/game_design.hpp"
#include "epg/revision_protocols.hpp"
#include "epg/trajectory.hpp"

namespace epg {

enum class SaturationMode { Off, Manual, SmithAuto };

struct SaturationConfig {
  SaturationMode mode = SaturationMode::Off;
  /// Used in Manual mode; q is clamped to [-q_min, q_max].
  double q_min = 0.0;
  double q_max = 0.0;
  /// Payoff offset entering the Smith bound. Defaults to rho* for n >= 3 and
  /// to 0 for two strategies, where rho* does not enter r*.
  std::optional<double> rho;
};

/// Replaces the designed mechanism with r = ctilde + mu (x_check - x) and
/// freezes q; comparison runs only.
struct BaselineConfig {
  bool enabled = false;
  double mu = 1.0;
  Vector x_check;
};

struct MechanismConfig {
  DesignTarget design;
  double upsilon = 1.0;
  SaturationConfig saturation;
  BaselineConfig baseline;
};

struct SaturationBounds {
  double q_min = 0.0;
  double q_max = 0.0;
};

/// (T_bar/lambda + rho) / min_{i != j} |beta_i - beta_j|: beyond this every
/// pairwise payoff gap saturates Smith's protocol, so clamping q leaves the
/// mean dynamics unchanged.
SaturationBounds smith_saturation_bounds(const SmithProtocol& protocol,
                                         const StrategyProfile& profile, double rho);

/// Bounds in effect for this configuration, or nullopt when saturation is off.
std::optional<SaturationBounds> resolve_saturation(const Protocol& protocol,
                                                   const StrategyProfile& profile,
                                                   const MechanismConfig& config);

double saturate_q(const SaturationBounds& bounds, double q);

/// Endemic rest point of the SIRS subsystem at the current transmission rate.
EpidemicFractions reference_epidemics(const EpidemicParams& params, double B);

/// Payoff-state derivative q' = G(I, R, x):
///   (I^ - I) + eta (ln I - ln I^) + upsilon^2 (beta* - B) + (B/gamma)(R - R^)(1 - eta - R)
double payoff_state_derivative(const EpidemicParams& params, double beta_star, double upsilon,
                               double I, double R, double B);

/// Reward H = q beta + r*.
Vector designed_reward(const StrategyProfile& profile, const DesignTarget& design, double q);

/// Reward of the decoupled potential-game baseline, ctilde + mu (x_check - x).
Vector naive_reward(const StrategyProfile& profile, double mu, std::span<const double> x_check,
                    std::span<const double> x);

/// Payoff p = r - c.
Vector payoff_from_reward(const StrategyProfile& profile, std::span<const double> reward);

struct StateDerivative {
  double dI = 0.0;
  double dR = 0.0;
  Vector dx;
  double dq = 0.0;
};

/// Full closed-loop vector field (SIRS, payoff state, mean dynamics). Dispatches
/// to the baseline when config.baseline is enabled.
StateDerivative closed_loop_rhs(const Protocol& protocol, const StrategyProfile& profile,
                                const EpidemicParams& params, const MechanismConfig& config,
                                const SystemState& state);

StateDerivative naive_baseline_rhs(const Protocol& protocol, const StrategyProfile& profile,
                                   const EpidemicParams& params, double mu,
                                   std::span<const double> x_check, const SystemState& state);

struct IntegrationOptions {
  double t_end = 4000.0;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  /// Spacing of recorded samples, in days. Steps never straddle a sample time.
  double sample_interval = 1.0;
  double min_step = 1e-10;
  std::size_t max_steps = 10'000'000;
};

/// Adaptive Dormand-Prince integration of the closed loop. After each accepted
/// step the population state is projected back onto the simplex.
/// Throws StepSizeUnderflow or InvariantBreach with the offending time and state.
Trajectory integrate(const Protocol& protocol, const StrategyProfile& profile,
                     const EpidemicParams& params, const MechanismConfig& config,
                     const SystemState& initial, const IntegrationOptions& options);

/// Diagnostics for a single state, as recorded in trajectories.
TrajectorySample make_sample(const Protocol& protocol, const StrategyProfile& profile,
                             const EpidemicParams& params, const MechanismConfig& config,
                             double t, const SystemState& state);

struct SettlingCriteria {
  double relative_tolerance = 1e-3;
  double hold_days = 100.0;
};

struct TrajectorySummary {
  double peak_I_ratio = 0.0;
  double peak_time = 0.0;
  /// Start of the first window of hold_days over which I, R and B all stay
  /// within relative_tolerance of their targets.
  std::optional<double> settling_time;
  /// Time average of r'x over the final `window` days.
  double long_run_cost = 0.0;
  double cost_window = 0.0;
  /// Largest distance of q from the limit set over the same window.
  double late_q_distance = 0.0;
  double max_beta_deviation = 0.0;
};

TrajectorySummary summarize(const Trajectory& trajectory, const DesignTarget& design,
                            const SettlingCriteria& criteria = {}, double window = 1000.0);

/// Writes the trajectory table: t, I, R, S, B, q, x_1..x_n, r_1..r_n,
/// reward_cost, L, sS, S_storage, P_dissipation, I_hat, R_hat.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

}  // namespace epg
