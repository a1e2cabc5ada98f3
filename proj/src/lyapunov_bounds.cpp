#include "epg/lyapunov_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace epg {

namespace {

struct ScaledReference {
  double cal_I_hat;
  double cal_R_hat;
};

// B I^ and B R^ simplify to eta (B - sigma) and (1 - eta)(B - sigma).
ScaledReference scaled_reference(const EpidemicParams& params, double B) {
  const double excess = B - params.sigma();
  return {params.eta() * excess, (1.0 - params.eta()) * excess};
}

// (I - I^) + I^ ln(I^/I), the relative-entropy part of the storage.
double entropy_term(double cal_I, double cal_I_hat) {
  const double d = cal_I - cal_I_hat;
  return d - cal_I_hat * std::log1p(d / cal_I_hat);
}

double square(double v) { return v * v; }

}  // namespace

bool Trajectory::has_lyapunov() const noexcept {
  return !samples.empty() && !std::isnan(samples.front().lyapunov);
}

double epidemic_storage(const EpidemicParams& params, double beta_star, double upsilon,
                        const ScaledEpidemic& scaled) {
  if (!(scaled.cal_I > 0.0)) {
    throw Error(ErrorCode::NonPositiveInfectious, "scaled infectious fraction must be positive");
  }
  const auto ref = scaled_reference(params, scaled.B);
  return entropy_term(scaled.cal_I, ref.cal_I_hat) +
         square(scaled.cal_R - ref.cal_R_hat) / (2.0 * params.gamma()) +
         0.5 * upsilon * upsilon * square(scaled.B - beta_star);
}

LyapunovLevel lyapunov_level(const PairwiseComparisonProtocol& protocol,
                             const StrategyProfile& profile, const EpidemicParams& params,
                             const DesignTarget& design, double upsilon, const SystemState& state) {
  Vector p(profile.size());
  const auto beta = profile.beta();
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = state.q * beta[i] + design.r_offset[i];
  LyapunovLevel level;
  level.protocol_storage = ipc_storage(protocol, state.x, p);
  level.epidemic_storage =
      epidemic_storage(params, design.beta_star, upsilon, reparameterize(state, profile));
  level.value = level.protocol_storage + level.epidemic_storage;
  return level;
}

void DissipationReport::raise_if_violated() const {
  if (ok()) return;
  std::ostringstream os;
  os << violations << " sample(s) break the dissipation inequality, first at t = "
     << first_violation_time << " (worst margin " << worst_margin << " at t = " << worst_time << ")";
  throw Error(ErrorCode::DissipationViolation, os.str());
}

DissipationReport check_dissipation(const Trajectory& trajectory, double tolerance) {
  if (!trajectory.has_lyapunov()) {
    throw Error(ErrorCode::InvalidArgument, "trajectory carries no Lyapunov diagnostics");
  }
  const auto& s = trajectory.samples;
  const double omega_over_gamma = trajectory.omega / trajectory.gamma;
  DissipationReport report;
  for (std::size_t k = 0; k + 1 < s.size(); ++k) {
    const double rise = s[k + 1].lyapunov - s[k].lyapunov;
    if (rise > report.max_increase) {
      report.max_increase = rise;
      report.max_increase_time = s[k + 1].t;
    }
  }
  for (std::size_t k = 1; k + 1 < s.size(); ++k) {
    const double hm = s[k].t - s[k - 1].t;
    const double hp = s[k + 1].t - s[k].t;
    // Three-point derivative, second order on non-uniform spacing.
    const double dL = (hm * hm * s[k + 1].lyapunov - hp * hp * s[k - 1].lyapunov +
                       (hp * hp - hm * hm) * s[k].lyapunov) /
                      (hp * hm * (hp + hm));
    const double bound = -s[k].dissipation - square(s[k].cal_I - s[k].cal_I_hat) -
                         omega_over_gamma * square(s[k].cal_R - s[k].cal_R_hat);
    const double margin = bound - dL;
    ++report.checked;
    if (margin < report.worst_margin) {
      report.worst_margin = margin;
      report.worst_time = s[k].t;
    }
    if (margin < -tolerance) {
      if (report.violations == 0) report.first_violation_time = s[k].t;
      ++report.violations;
    }
  }
  return report;
}

BoundProblem make_bound_problem(const EpidemicParams& params, const StrategyProfile& profile,
                                const DesignTarget& design, double upsilon) {
  if (!(upsilon > 0.0) || !std::isfinite(upsilon)) {
    throw Error(ErrorCode::InvalidArgument, "upsilon must be positive");
  }
  return {params, profile, design.beta_star, design.I_star, upsilon};
}

namespace {

struct TransmissionWindow {
  double lo;
  double hi;
};

// B values where upsilon^2 (B - beta*)^2 / 2 <= alpha, clipped to [beta_1, beta_n].
TransmissionWindow transmission_window(const BoundProblem& problem, double alpha) {
  const double half = std::sqrt(2.0 * alpha) / problem.upsilon;
  return {std::max(problem.profile.beta_min(), problem.beta_star - half),
          std::min(problem.profile.beta_max(), problem.beta_star + half)};
}

// Largest cal_I reachable at this B within the storage budget, with cal_R set
// to its unconstrained optimum R^ clipped by cal_R <= B - cal_I. Returns a
// negative value if the budget is exhausted by the transmission term alone.
double max_scaled_infectious(const BoundProblem& problem, double B, double alpha) {
  const double budget =
      alpha - 0.5 * problem.upsilon * problem.upsilon * square(B - problem.beta_star);
  if (budget < 0.0) return -1.0;
  const auto ref = scaled_reference(problem.params, B);
  const double two_gamma = 2.0 * problem.params.gamma();
  auto storage = [&](double cal_I) {
    const double overflow = std::max(ref.cal_R_hat - (B - cal_I), 0.0);
    return entropy_term(cal_I, ref.cal_I_hat) + overflow * overflow / two_gamma;
  };
  if (storage(B) <= budget) return B;
  double lo = ref.cal_I_hat;
  double hi = B;
  for (int it = 0; it < 200 && hi - lo > 1e-17; ++it) {
    const double mid = 0.5 * (lo + hi);
    (storage(mid) <= budget ? lo : hi) = mid;
  }
  return lo;
}

constexpr double kInvGolden = 0.6180339887498949;

// max over B of max_scaled_infectious(B) - level * B, which is concave in B.
double best_slack(const BoundProblem& problem, double alpha, const TransmissionWindow& w,
                  double level) {
  auto slack = [&](double B) { return max_scaled_infectious(problem, B, alpha) - level * B; };
  double a = w.lo;
  double b = w.hi;
  double c = b - kInvGolden * (b - a);
  double d = a + kInvGolden * (b - a);
  double fc = slack(c);
  double fd = slack(d);
  for (int it = 0; it < 200 && b - a > 1e-14; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvGolden * (b - a);
      fc = slack(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvGolden * (b - a);
      fd = slack(d);
    }
  }
  return std::max({fc, fd, slack(w.lo), slack(w.hi)});
}

}  // namespace

double pi_star(const BoundProblem& problem, double alpha, double tol) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorCode::InvalidArgument, "alpha must be a finite non-negative number");
  }
  if (!(tol > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
  }
  if (alpha == 0.0) return 1.0;

  const auto window = transmission_window(problem, alpha);
  const double I_star = problem.I_star;
  auto feasible = [&](double ratio) {
    return best_slack(problem, alpha, window, ratio * I_star) >= 0.0;
  };
  double lo = 1.0;
  double hi = 1.0 / I_star;
  if (feasible(hi)) return hi;
  while (hi - lo > 0.5 * tol) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? lo : hi) = mid;
  }
  return hi;
}

namespace {

// Roots u_lo <= 1 <= u_hi of u - 1 - ln u = a, a >= 0.
std::pair<double, double> entropy_roots(double a) {
  auto h = [](double u) { return u - 1.0 - std::log(u); };
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (h(mid) > a ? lo : hi) = mid;
  }
  const double u_lo = hi;
  lo = 1.0;
  hi = 2.0;
  while (h(hi) < a) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (h(mid) <= a ? lo : hi) = mid;
  }
  return {u_lo, lo};
}

}  // namespace

double pi_star_oracle(const BoundProblem& problem, double alpha, int grid) {
  if (grid < 1) {
    throw Error(ErrorCode::InvalidArgument, "oracle grid must be positive");
  }
  const auto& params = problem.params;
  const auto window = transmission_window(problem, alpha);
  const double r_half = std::sqrt(2.0 * params.gamma() * alpha);
  const double eta = params.eta();
  const double sigma = params.sigma();
  auto node = [grid](double lo, double hi, int k) {
    return grid == 0 || hi <= lo ? lo : lo + (hi - lo) * static_cast<double>(k) / grid;
  };

  double best = 0.0;
  for (int ib = 0; ib <= grid; ++ib) {
    const double B = node(window.lo, window.hi, ib);
    const double cal_I_hat = eta * (B - sigma);
    const double cal_R_hat = (1.0 - eta) * (B - sigma);
    const auto [u_lo, u_hi] = entropy_roots(alpha / cal_I_hat);
    const double I_lo = cal_I_hat * u_lo;
    const double I_hi = std::min(cal_I_hat * u_hi, B);
    bool found = false;
    for (int ii = grid; ii >= 0 && !found; --ii) {
      const double cal_I = node(I_lo, I_hi, ii);
      if (!(cal_I > 0.0) || cal_I > B) continue;
      const double R_lo = std::max(0.0, cal_R_hat - r_half);
      const double R_hi = std::min(cal_R_hat + r_half, B - cal_I);
      if (R_hi < R_lo) continue;
      for (int ir = 0; ir <= grid; ++ir) {
        const double cal_R = node(R_lo, R_hi, ir);
        // Full storage, evaluated directly from its definition.
        const double s = (cal_I - cal_I_hat) + cal_I_hat * std::log(cal_I_hat / cal_I) +
                         (cal_R - cal_R_hat) * (cal_R - cal_R_hat) / (2.0 * params.gamma()) +
                         0.5 * problem.upsilon * problem.upsilon * (B - problem.beta_star) *
                             (B - problem.beta_star);
        if (s <= alpha) {
          best = std::max(best, cal_I / B / problem.I_star);
          found = true;
          break;
        }
      }
    }
  }
  return best;
}

double anytime_bound_floor(const BoundProblem& problem, double beta_o) {
  const double beta_bar = std::min(std::abs(beta_o - problem.beta_star) + problem.beta_star,
                                   problem.profile.beta_max());
  return endemic_fractions(problem.params, beta_bar).I / problem.I_star;
}

AnytimeBound anytime_bound_n2(const PairwiseComparisonProtocol& protocol,
                              const BoundProblem& problem, const DesignTarget& design,
                              std::span<const double> x0, double tol) {
  const double storage = ipc_storage(protocol, x0, design.r_offset);
  if (storage > kStorageZeroTolerance) {
    std::ostringstream os;
    os << "initial protocol storage S(x0, r* - c) = " << storage
       << " is not zero; the support of x0 must lie within that of x*";
    throw Error(ErrorCode::PreconditionViolated, os.str());
  }
  AnytimeBound bound;
  bound.beta_o = problem.profile.transmission(x0);
  const double beta_tilde = bound.beta_o - problem.beta_star;
  bound.alpha = 0.5 * square(problem.upsilon * beta_tilde);
  bound.pi_star = pi_star(problem, bound.alpha, tol);
  bound.floor = anytime_bound_floor(problem, bound.beta_o);
  bound.beta_deviation = std::abs(beta_tilde);
  if (problem.beta_star < bound.beta_o) bound.beta_upper = bound.beta_o;
  return bound;
}

InitialLevel initial_level_general(const SmithProtocol& protocol, const BoundProblem& problem,
                                   const DesignTarget& design, std::span<const double> x0) {
  const auto& r0 = design.r_offset;
  if (x0.size() != r0.size()) {
    throw Error(ErrorCode::InvalidArgument, "initial state length does not match the design");
  }
  InitialLevel level;
  const double beta_tilde = problem.profile.transmission(x0) - problem.beta_star;
  level.transmission_part = 0.5 * square(problem.upsilon * beta_tilde);
  level.protocol_storage = ipc_storage(protocol, x0, r0);
  for (std::size_t i = 0; i < x0.size(); ++i) {
    for (std::size_t j = 0; j < x0.size(); ++j) {
      level.protocol_storage_literal +=
          x0[i] * smith_storage_kernel_literal(r0[j] - r0[i], protocol.rate_cap());
    }
  }
  level.alpha = level.transmission_part + level.protocol_storage;
  level.alpha_literal = level.transmission_part + level.protocol_storage_literal;
  return level;
}

UpsilonSelection select_upsilon(const EpidemicParams& params, const StrategyProfile& profile,
                                const DesignTarget& design, double beta_o, double target,
                                const UpsilonSearch& search) {
  BoundProblem problem = make_bound_problem(params, profile, design, search.upsilon_max);
  UpsilonSelection result;
  result.floor = anytime_bound_floor(problem, beta_o);
  if (!(target > result.floor)) {
    std::ostringstream os;
    os << "overshoot target " << target << " is not above the attainable floor " << result.floor;
    throw Error(ErrorCode::TargetBelowFloor, os.str());
  }
  const double beta_tilde = beta_o - design.beta_star;
  auto bound_at = [&](double upsilon) {
    problem.upsilon = upsilon;
    return pi_star(problem, 0.5 * square(upsilon * beta_tilde), search.pi_tol);
  };

  const double at_max = bound_at(search.upsilon_max);
  if (at_max <= target) {
    result.upsilon = search.upsilon_max;
    result.bound = at_max;
    result.capped = true;
    return result;
  }
  double lo = 0.0;
  double hi = search.upsilon_max;
  double lo_bound = result.floor;
  while (hi - lo > search.tol) {
    const double mid = 0.5 * (lo + hi);
    const double b = bound_at(mid);
    if (b <= target) {
      lo = mid;
      lo_bound = b;
    } else {
      hi = mid;
    }
  }
  result.upsilon = lo;
  result.bound = lo_bound;
  return result;
}

}  // namespace epg
