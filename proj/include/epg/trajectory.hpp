#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "epg/core_model.hpp"

namespace epg {

/// One recorded time point of a closed-loop run with its diagnostics.
struct TrajectorySample {
  double t = 0.0;
  SystemState state;

  double B = 0.0;
  Vector payoff;
  Vector reward;
  /// r' x, the planner's normalized cost rate.
  double reward_cost = 0.0;

  double I_hat = 0.0;
  double R_hat = 0.0;
  double cal_I = 0.0;
  double cal_R = 0.0;
  double cal_I_hat = 0.0;
  double cal_R_hat = 0.0;

  /// Lyapunov diagnostics; NaN when the protocol has no closed-form storage.
  double lyapunov = std::numeric_limits<double>::quiet_NaN();
  double epidemic_storage = std::numeric_limits<double>::quiet_NaN();
  double protocol_storage = std::numeric_limits<double>::quiet_NaN();
  double dissipation = std::numeric_limits<double>::quiet_NaN();
};

/// Extremes observed over every accepted integrator step, not just samples.
struct StepStatistics {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evaluations = 0;
  double min_I = std::numeric_limits<double>::infinity();
  double max_I = 0.0;
  double min_R = std::numeric_limits<double>::infinity();
  double max_I_plus_R = 0.0;
  double min_B = std::numeric_limits<double>::infinity();
  double max_B = 0.0;
  double max_abs_q = 0.0;
  /// Largest |sum x - 1| before renormalization.
  double max_simplex_drift = 0.0;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  StepStatistics steps;
  double beta_star = 0.0;
  double I_star = 0.0;
  double R_star = 0.0;
  double c_star = 0.0;
  double omega = 0.0;
  double gamma = 0.0;

  bool has_lyapunov() const noexcept;
};

}  // namespace epg
