#pragma once

#include <cstddef>

#include "epg/core_model.hpp"

namespace epg {

/// Absolute tolerance under which a budget equal to some ctilde_i is treated
/// as the boundary (Case II) configuration.
inline constexpr double kCaseTolerance = 1e-9;

enum class DesignCase { I, II };

struct CaseClassification {
  DesignCase kind = DesignCase::I;
  /// Zero-based pivot: Case I mixes strategies pivot and pivot + 1, Case II
  /// concentrates on strategy pivot.
  std::size_t pivot = 0;
};

/// Endemic SIRS rest point for an aggregate transmission rate B:
/// I = eta (1 - sigma/B), R = (1 - eta)(1 - sigma/B).
EpidemicFractions endemic_fractions(const EpidemicParams& params, double B);

/// True iff the marginal cost of lowering transmission grows as transmission
/// falls. Vacuously true for two strategies.
bool check_assumption1(const StrategyProfile& profile);

CaseClassification classify_case(const StrategyProfile& profile, double c_star);

bool validate_rho(const StrategyProfile& profile, const CaseClassification& classification,
                  double beta_star, double rho_star);

/// The budget-optimal endemic target and the stationary reward that sustains it.
struct DesignTarget {
  CaseClassification classification;
  double c_star = 0.0;
  double rho_star = 0.0;
  double beta_star = 0.0;
  Vector x_star;
  double I_star = 0.0;
  double R_star = 0.0;
  /// Stationary reward r*: ctilde, less rho* on strategies unused by x*.
  Vector r_star;
  /// r* - c, the equilibrium payoff for q = 0.
  Vector r_offset;
  double zeta1 = 0.0;
  double zeta2 = 0.0;
  /// Limit set for q: {0} in Case I, [-zeta2, zeta1] in Case II.
  double q_lo = 0.0;
  double q_hi = 0.0;
};

/// Solves min beta'x s.t. ctilde'x <= c_star over the simplex in closed form
/// and assembles the stationary reward. Requires Assumption 1 and a valid rho*.
/// For two strategies rho* does not enter r* and any value is accepted.
DesignTarget optimal_target(const StrategyProfile& profile, const EpidemicParams& params,
                            double c_star, double rho_star);

/// Smallest rho* accepted in Case II, max(beta_n - beta*, beta* - beta_1).
double min_valid_rho(const StrategyProfile& profile, double beta_star);

/// Brute-force minimum of beta'x over the simplex lattice {k / resolution}
/// intersected with ctilde'x <= c_star. Independent cross-check of
/// optimal_target; supports up to four strategies.
double lp_oracle_beta_star(const StrategyProfile& profile, double c_star, int grid_resolution);

}  // namespace epg
