#include "epg/game_design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace epg {

EpidemicFractions endemic_fractions(const EpidemicParams& params, double B) {
  const double level = 1.0 - params.sigma() / B;
  return {params.eta() * level, (1.0 - params.eta()) * level};
}

bool check_assumption1(const StrategyProfile& profile) {
  const auto beta = profile.beta();
  const auto cost = profile.cost();
  for (std::size_t i = 0; i + 2 < profile.size(); ++i) {
    const double lhs = (cost[i] - cost[i + 1]) / (beta[i + 1] - beta[i]);
    const double rhs = (cost[i + 1] - cost[i + 2]) / (beta[i + 2] - beta[i + 1]);
    if (!(lhs > rhs)) return false;
  }
  return true;
}

CaseClassification classify_case(const StrategyProfile& profile, double c_star) {
  const auto ct = profile.ctilde();
  if (!(c_star > 0.0) || !(c_star < ct.front())) {
    std::ostringstream os;
    os << "budget c* = " << c_star << " must lie in (0, " << ct.front() << ")";
    throw Error(ErrorCode::BudgetOutOfRange, os.str());
  }
  const std::size_t n = profile.size();
  if (n >= 3) {
    // Interior cost levels only; c* can never equal ctilde_1 or ctilde_n = 0.
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (std::abs(c_star - ct[i]) <= kCaseTolerance) {
        return {DesignCase::II, i};
      }
    }
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (ct[i + 1] < c_star && c_star < ct[i]) {
      return {DesignCase::I, i};
    }
  }
  // Only reachable when c* sits within the tolerance band of an interior level
  // for n = 2, which cannot happen; keep the compiler satisfied.
  throw Error(ErrorCode::BudgetOutOfRange, "budget does not fall between cost levels");
}

double min_valid_rho(const StrategyProfile& profile, double beta_star) {
  return std::max(profile.beta_max() - beta_star, beta_star - profile.beta_min());
}

bool validate_rho(const StrategyProfile& profile, const CaseClassification& classification,
                  double beta_star, double rho_star) {
  if (profile.size() == 2) return true;
  if (!(rho_star > 0.0) || !std::isfinite(rho_star)) return false;
  if (classification.kind == DesignCase::I) return true;
  return rho_star >= min_valid_rho(profile, beta_star) - kCaseTolerance;
}

DesignTarget optimal_target(const StrategyProfile& profile, const EpidemicParams& params,
                            double c_star, double rho_star) {
  if (!check_assumption1(profile)) {
    throw Error(ErrorCode::Assumption1Violated,
                "(c_i - c_{i+1})/(beta_{i+1} - beta_i) must strictly decrease in i");
  }
  DesignTarget target;
  target.classification = classify_case(profile, c_star);
  target.c_star = c_star;
  target.rho_star = rho_star;

  const std::size_t n = profile.size();
  const auto ct = profile.ctilde();
  const std::size_t k = target.classification.pivot;
  target.x_star.assign(n, 0.0);
  if (target.classification.kind == DesignCase::I) {
    const double w = (c_star - ct[k + 1]) / (ct[k] - ct[k + 1]);
    target.x_star[k] = w;
    target.x_star[k + 1] = 1.0 - w;
  } else {
    target.x_star[k] = 1.0;
  }
  target.beta_star = profile.transmission(target.x_star);

  if (!validate_rho(profile, target.classification, target.beta_star, rho_star)) {
    std::ostringstream os;
    os << "rho* = " << rho_star << " is not valid";
    if (target.classification.kind == DesignCase::II) {
      os << "; Case II requires rho* >= " << min_valid_rho(profile, target.beta_star);
    } else {
      os << "; rho* must be positive";
    }
    throw Error(ErrorCode::InvalidRho, os.str());
  }

  const auto eq = endemic_fractions(params, target.beta_star);
  target.I_star = eq.I;
  target.R_star = eq.R;

  const auto cost = profile.cost();
  target.r_star.resize(n);
  target.r_offset.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    target.r_star[i] = target.x_star[i] == 0.0 ? ct[i] - rho_star : ct[i];
    target.r_offset[i] = target.r_star[i] - cost[i];
  }

  target.zeta1 = rho_star / (profile.beta_max() - target.beta_star);
  target.zeta2 = rho_star / (target.beta_star - profile.beta_min());
  if (target.classification.kind == DesignCase::II) {
    target.q_lo = -target.zeta2;
    target.q_hi = target.zeta1;
  }
  return target;
}

namespace {

struct LatticeSearch {
  std::span<const double> beta;
  std::span<const double> ct;
  double c_star;
  int resolution;
  double best = std::numeric_limits<double>::infinity();

  // Assigns k units to strategy `index` and recurses; the last strategy takes
  // whatever remains.
  void visit(std::size_t index, int remaining, double beta_acc, double cost_acc) {
    const double step = 1.0 / resolution;
    if (index + 1 == beta.size()) {
      const double w = remaining * step;
      const double c = cost_acc + ct[index] * w;
      if (c <= c_star) best = std::min(best, beta_acc + beta[index] * w);
      return;
    }
    for (int k = 0; k <= remaining; ++k) {
      const double w = k * step;
      visit(index + 1, remaining - k, beta_acc + beta[index] * w, cost_acc + ct[index] * w);
    }
  }
};

}  // namespace

double lp_oracle_beta_star(const StrategyProfile& profile, double c_star, int grid_resolution) {
  if (profile.size() > 4) {
    throw Error(ErrorCode::InvalidArgument, "lattice oracle supports at most four strategies");
  }
  if (grid_resolution < 1) {
    throw Error(ErrorCode::InvalidArgument, "grid resolution must be positive");
  }
  LatticeSearch search{profile.beta(), profile.ctilde(), c_star, grid_resolution};
  search.visit(0, grid_resolution, 0.0, 0.0);
  return search.best;
}

}  // namespace epg
