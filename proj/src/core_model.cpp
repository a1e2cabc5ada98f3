#include "epg/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace epg {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonMonotoneBeta: return "NonMonotoneBeta";
    case ErrorCode::NonMonotoneCost: return "NonMonotoneCost";
    case ErrorCode::BetaOneNotAboveSigma: return "BetaOneNotAboveSigma";
    case ErrorCode::InvalidEpidemicParams: return "InvalidEpidemicParams";
    case ErrorCode::NotOnSimplex: return "NotOnSimplex";
    case ErrorCode::BudgetOutOfRange: return "BudgetOutOfRange";
    case ErrorCode::Assumption1Violated: return "Assumption1Violated";
    case ErrorCode::InvalidRho: return "InvalidRho";
    case ErrorCode::NonPositiveInfectious: return "NonPositiveInfectious";
    case ErrorCode::StepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorCode::InvariantBreach: return "InvariantBreach";
    case ErrorCode::NSViolation: return "NSViolation";
    case ErrorCode::DissipationViolation: return "DissipationViolation";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::TargetBelowFloor: return "TargetBelowFloor";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::InvalidArgument, "dot product of vectors with different lengths");
  }
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

EpidemicParams::EpidemicParams(double g, double sigma_bar, double omega_bar, double gamma)
    : g_(g), sigma_bar_(sigma_bar), omega_bar_(omega_bar), gamma_(gamma) {
  eta_ = omega() / (omega() + gamma_);
}

EpidemicParams EpidemicParams::make(double g, double sigma_bar, double omega_bar, double gamma) {
  for (double v : {g, sigma_bar, omega_bar, gamma}) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::InvalidEpidemicParams, "rates must be finite");
    }
  }
  if (gamma <= 0.0) {
    throw Error(ErrorCode::InvalidEpidemicParams, "gamma must be positive");
  }
  if (g + sigma_bar <= 0.0) {
    throw Error(ErrorCode::InvalidEpidemicParams, "sigma = g + sigma_bar must be positive");
  }
  if (g + omega_bar <= 0.0) {
    throw Error(ErrorCode::InvalidEpidemicParams, "omega = g + omega_bar must be positive");
  }
  // gamma == sigma_bar means zero background mortality, which is admissible.
  if (gamma > sigma_bar) {
    throw Error(ErrorCode::InvalidEpidemicParams, "gamma must not exceed sigma_bar");
  }
  return EpidemicParams(g, sigma_bar, omega_bar, gamma);
}

StrategyProfile StrategyProfile::make(Vector beta, Vector cost, const EpidemicParams& params) {
  if (beta.size() != cost.size()) {
    throw Error(ErrorCode::InvalidArgument, "beta and cost must have the same length");
  }
  if (beta.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "at least two strategies are required");
  }
  for (std::size_t i = 0; i < beta.size(); ++i) {
    if (!std::isfinite(beta[i]) || !std::isfinite(cost[i])) {
      throw Error(ErrorCode::InvalidArgument, "beta and cost entries must be finite");
    }
  }
  for (std::size_t i = 0; i + 1 < beta.size(); ++i) {
    if (!(beta[i] < beta[i + 1])) {
      std::ostringstream os;
      os << "beta must be strictly increasing (beta_" << i + 1 << " >= beta_" << i + 2 << ")";
      throw Error(ErrorCode::NonMonotoneBeta, os.str());
    }
    if (!(cost[i] > cost[i + 1])) {
      std::ostringstream os;
      os << "cost must be strictly decreasing (c_" << i + 1 << " <= c_" << i + 2 << ")";
      throw Error(ErrorCode::NonMonotoneCost, os.str());
    }
  }
  if (!(beta.front() > params.sigma())) {
    std::ostringstream os;
    os << "beta_1 = " << beta.front() << " must exceed sigma = " << params.sigma();
    throw Error(ErrorCode::BetaOneNotAboveSigma, os.str());
  }
  Vector ctilde(cost.size());
  const double c_last = cost.back();
  std::transform(cost.begin(), cost.end(), ctilde.begin(), [c_last](double c) { return c - c_last; });
  return StrategyProfile(std::move(beta), std::move(cost), std::move(ctilde));
}

double StrategyProfile::min_beta_gap() const noexcept {
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < beta_.size(); ++i) {
    gap = std::min(gap, beta_[i + 1] - beta_[i]);
  }
  return gap;
}

double StrategyProfile::transmission(std::span<const double> x) const { return dot(beta_, x); }

PopulationState PopulationState::make(Vector x) {
  if (x.empty()) {
    throw Error(ErrorCode::NotOnSimplex, "population state is empty");
  }
  double sum = 0.0;
  for (double v : x) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw Error(ErrorCode::NotOnSimplex, "population fractions must lie in [0, 1]");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    std::ostringstream os;
    os << "population fractions sum to " << sum << ", expected 1";
    throw Error(ErrorCode::NotOnSimplex, os.str());
  }
  return PopulationState(std::move(x));
}

PopulationState PopulationState::normalized(Vector x) {
  double sum = 0.0;
  for (double& v : x) {
    if (!std::isfinite(v) || v < -kNegativeClampLimit) {
      std::ostringstream os;
      os << "population fraction " << v << " left the simplex";
      throw Error(ErrorCode::InvariantBreach, os.str());
    }
    v = std::max(v, 0.0);
    sum += v;
  }
  if (!(sum > 0.0)) {
    throw Error(ErrorCode::InvariantBreach, "population state has no mass");
  }
  for (double& v : x) v /= sum;
  return PopulationState(std::move(x));
}

PopulationState PopulationState::vertex(std::size_t n, std::size_t i) {
  if (i >= n) {
    throw Error(ErrorCode::InvalidArgument, "vertex index out of range");
  }
  Vector x(n, 0.0);
  x[i] = 1.0;
  return PopulationState(std::move(x));
}

PopulationState PopulationState::uniform(std::size_t n) {
  if (n == 0) {
    throw Error(ErrorCode::InvalidArgument, "uniform state needs n >= 1");
  }
  return PopulationState(Vector(n, 1.0 / static_cast<double>(n)));
}

void validate_state(const SystemState& state, const StrategyProfile& profile) {
  if (state.x.size() != profile.size()) {
    throw Error(ErrorCode::InvalidArgument, "population state length does not match the profile");
  }
  PopulationState::make(state.x);
  if (!(state.I > 0.0) || state.I > 1.0) {
    throw Error(ErrorCode::NonPositiveInfectious, "I must lie in (0, 1]");
  }
  if (!(state.R >= 0.0) || state.R > 1.0 - state.I + kSimplexTolerance) {
    throw Error(ErrorCode::InvalidArgument, "R must lie in [0, 1 - I]");
  }
  if (!std::isfinite(state.q)) {
    throw Error(ErrorCode::InvalidArgument, "q must be finite");
  }
}

ScaledEpidemic reparameterize(const SystemState& state, const StrategyProfile& profile) {
  const double B = profile.transmission(state.x);
  return {B * state.I, B * state.R, B};
}

EpidemicFractions unscale(const ScaledEpidemic& scaled) {
  return {scaled.cal_I / scaled.B, scaled.cal_R / scaled.B};
}

}  // namespace epg
