#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "epg/error.hpp"

namespace epg {

using Vector = std::vector<double>;

inline constexpr double kSimplexTolerance = 1e-9;
// Integration may push a vanishing strategy slightly negative; anything above
// this is clamped to zero, anything below is an invariant breach.
inline constexpr double kNegativeClampLimit = 1e-9;

double dot(std::span<const double> a, std::span<const double> b);

/// Rates of the SIRS subsystem. All rates are per day.
class EpidemicParams {
 public:
  /// g: birth minus death rate, sigma_bar: inverse infectious period,
  /// omega_bar: immunity waning rate, gamma: recovery rate.
  static EpidemicParams make(double g, double sigma_bar, double omega_bar, double gamma);

  double g() const noexcept { return g_; }
  double sigma_bar() const noexcept { return sigma_bar_; }
  double omega_bar() const noexcept { return omega_bar_; }
  double gamma() const noexcept { return gamma_; }
  double sigma() const noexcept { return g_ + sigma_bar_; }
  double omega() const noexcept { return g_ + omega_bar_; }
  /// omega / (omega + gamma), the infectious share of the endemic non-susceptibles.
  double eta() const noexcept { return eta_; }

 private:
  EpidemicParams(double g, double sigma_bar, double omega_bar, double gamma);

  double g_;
  double sigma_bar_;
  double omega_bar_;
  double gamma_;
  double eta_;
};

/// Strategy transmission contributions and intrinsic costs, ordered from the
/// safest (costliest) strategy to the riskiest (cheapest) one.
class StrategyProfile {
 public:
  static StrategyProfile make(Vector beta, Vector cost, const EpidemicParams& params);

  std::size_t size() const noexcept { return beta_.size(); }
  std::span<const double> beta() const noexcept { return beta_; }
  std::span<const double> cost() const noexcept { return cost_; }
  /// cost shifted so the riskiest strategy costs zero.
  std::span<const double> ctilde() const noexcept { return ctilde_; }

  double beta_min() const noexcept { return beta_.front(); }
  double beta_max() const noexcept { return beta_.back(); }
  /// Smallest gap between two distinct transmission contributions.
  double min_beta_gap() const noexcept;

  /// Aggregate transmission rate B = beta' x.
  double transmission(std::span<const double> x) const;

 private:
  StrategyProfile(Vector beta, Vector cost, Vector ctilde)
      : beta_(std::move(beta)), cost_(std::move(cost)), ctilde_(std::move(ctilde)) {}

  Vector beta_;
  Vector cost_;
  Vector ctilde_;
};

/// A point of the probability simplex.
class PopulationState {
 public:
  /// Validates that x lies on the simplex within kSimplexTolerance.
  static PopulationState make(Vector x);
  /// Clamps entries in [-kNegativeClampLimit, 0) to zero and rescales to unit
  /// mass. Throws InvariantBreach for anything further off.
  static PopulationState normalized(Vector x);
  static PopulationState vertex(std::size_t n, std::size_t i);
  static PopulationState uniform(std::size_t n);

  std::size_t size() const noexcept { return x_.size(); }
  std::span<const double> values() const noexcept { return x_; }
  double operator[](std::size_t i) const { return x_[i]; }

 private:
  explicit PopulationState(Vector x) : x_(std::move(x)) {}

  Vector x_;
};

/// Closed-loop state (I, R, x, q) with a scalar payoff-mechanism state q.
struct SystemState {
  double I = 0.0;
  double R = 0.0;
  Vector x;
  double q = 0.0;

  double susceptible() const noexcept { return 1.0 - I - R; }
};

/// Throws if state is outside the admissible set for the given profile.
void validate_state(const SystemState& state, const StrategyProfile& profile);

/// Scaled epidemic coordinates: cal_I = B I, cal_R = B R.
struct ScaledEpidemic {
  double cal_I = 0.0;
  double cal_R = 0.0;
  double B = 0.0;
};

ScaledEpidemic reparameterize(const SystemState& state, const StrategyProfile& profile);

struct EpidemicFractions {
  double I = 0.0;
  double R = 0.0;
};

/// Inverse of reparameterize on the epidemic coordinates.
EpidemicFractions unscale(const ScaledEpidemic& scaled);

}  // namespace epg
