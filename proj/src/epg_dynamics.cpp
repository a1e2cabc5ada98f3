#include "epg/epg_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "epg/dopri5.hpp"
#include "epg/lyapunov_bounds.hpp"

namespace epg {

SaturationBounds smith_saturation_bounds(const SmithProtocol& protocol,
                                         const StrategyProfile& profile, double rho) {
  if (!(rho >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "saturation offset rho must be non-negative");
  }
  const double level = (protocol.rate_cap() / protocol.lambda() + rho) / profile.min_beta_gap();
  return {level, level};
}

std::optional<SaturationBounds> resolve_saturation(const Protocol& protocol,
                                                   const StrategyProfile& profile,
                                                   const MechanismConfig& config) {
  const auto& sat = config.saturation;
  switch (sat.mode) {
    case SaturationMode::Off:
      return std::nullopt;
    case SaturationMode::Manual:
      if (!(sat.q_min > 0.0) || !(sat.q_max > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "manual saturation needs q_min, q_max > 0");
      }
      return SaturationBounds{sat.q_min, sat.q_max};
    case SaturationMode::SmithAuto: {
      const auto* smith = dynamic_cast<const SmithProtocol*>(&protocol);
      if (smith == nullptr) {
        throw Error(ErrorCode::InvalidArgument, "automatic saturation bounds require Smith's protocol");
      }
      const double rho = sat.rho.value_or(profile.size() == 2 ? 0.0 : config.design.rho_star);
      return smith_saturation_bounds(*smith, profile, rho);
    }
  }
  return std::nullopt;
}

double saturate_q(const SaturationBounds& bounds, double q) {
  return std::max(-bounds.q_min, std::min(q, bounds.q_max));
}

EpidemicFractions reference_epidemics(const EpidemicParams& params, double B) {
  return endemic_fractions(params, B);
}

double payoff_state_derivative(const EpidemicParams& params, double beta_star, double upsilon,
                               double I, double R, double B) {
  if (!(I > 0.0)) {
    throw Error(ErrorCode::NonPositiveInfectious, "G needs I > 0");
  }
  const auto ref = reference_epidemics(params, B);
  const double eta = params.eta();
  return (ref.I - I) + eta * std::log(I / ref.I) + upsilon * upsilon * (beta_star - B) +
         (B / params.gamma()) * (R - ref.R) * (1.0 - eta - R);
}

Vector designed_reward(const StrategyProfile& profile, const DesignTarget& design, double q) {
  const auto beta = profile.beta();
  Vector r(beta.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = q * beta[i] + design.r_star[i];
  return r;
}

Vector naive_reward(const StrategyProfile& profile, double mu, std::span<const double> x_check,
                    std::span<const double> x) {
  const auto ct = profile.ctilde();
  if (x_check.size() != ct.size() || x.size() != ct.size()) {
    throw Error(ErrorCode::InvalidArgument, "baseline vectors must match the profile length");
  }
  Vector r(ct.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = ct[i] + mu * (x_check[i] - x[i]);
  return r;
}

Vector payoff_from_reward(const StrategyProfile& profile, std::span<const double> reward) {
  const auto cost = profile.cost();
  Vector p(reward.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = reward[i] - cost[i];
  return p;
}

namespace {

void sirs_rates(const EpidemicParams& params, const SystemState& state, double B,
                StateDerivative& out) {
  out.dI = (B * (1.0 - state.I - state.R) - params.sigma()) * state.I;
  out.dR = params.gamma() * state.I - params.omega() * state.R;
}

double effective_q(const std::optional<SaturationBounds>& sat, double q) {
  return sat ? saturate_q(*sat, q) : q;
}

Vector mechanism_payoff(const StrategyProfile& profile, const MechanismConfig& config,
                        const std::optional<SaturationBounds>& sat, const SystemState& state) {
  if (config.baseline.enabled) {
    return payoff_from_reward(
        profile, naive_reward(profile, config.baseline.mu, config.baseline.x_check, state.x));
  }
  const double q = effective_q(sat, state.q);
  const auto beta = profile.beta();
  Vector p(beta.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = q * beta[i] + config.design.r_offset[i];
  return p;
}

StateDerivative rhs_with_saturation(const Protocol& protocol, const StrategyProfile& profile,
                                    const EpidemicParams& params, const MechanismConfig& config,
                                    const std::optional<SaturationBounds>& sat,
                                    const SystemState& state) {
  if (config.baseline.enabled) {
    return naive_baseline_rhs(protocol, profile, params, config.baseline.mu,
                              config.baseline.x_check, state);
  }
  if (!(state.I > 0.0)) {
    throw Error(ErrorCode::NonPositiveInfectious, "closed-loop dynamics need I > 0");
  }
  StateDerivative d;
  const double B = profile.transmission(state.x);
  sirs_rates(params, state, B, d);
  d.dq = payoff_state_derivative(params, config.design.beta_star, config.upsilon, state.I,
                                 state.R, B);
  d.dx = mean_dynamics(protocol, state.x, mechanism_payoff(profile, config, sat, state));
  return d;
}

}  // namespace

StateDerivative closed_loop_rhs(const Protocol& protocol, const StrategyProfile& profile,
                                const EpidemicParams& params, const MechanismConfig& config,
                                const SystemState& state) {
  return rhs_with_saturation(protocol, profile, params, config,
                             resolve_saturation(protocol, profile, config), state);
}

StateDerivative naive_baseline_rhs(const Protocol& protocol, const StrategyProfile& profile,
                                   const EpidemicParams& params, double mu,
                                   std::span<const double> x_check, const SystemState& state) {
  StateDerivative d;
  const double B = profile.transmission(state.x);
  sirs_rates(params, state, B, d);
  d.dq = 0.0;
  const Vector p = payoff_from_reward(profile, naive_reward(profile, mu, x_check, state.x));
  d.dx = mean_dynamics(protocol, state.x, p);
  return d;
}

namespace {

TrajectorySample sample_with_saturation(const Protocol& protocol, const StrategyProfile& profile,
                                        const EpidemicParams& params,
                                        const MechanismConfig& config,
                                        const std::optional<SaturationBounds>& sat, double t,
                                        const SystemState& state) {
  TrajectorySample s;
  s.t = t;
  s.state = state;
  s.B = profile.transmission(state.x);
  s.payoff = mechanism_payoff(profile, config, sat, state);
  if (config.baseline.enabled) {
    s.reward = naive_reward(profile, config.baseline.mu, config.baseline.x_check, state.x);
  } else {
    s.reward = designed_reward(profile, config.design, effective_q(sat, state.q));
  }
  s.reward_cost = dot(s.reward, state.x);

  const auto ref = reference_epidemics(params, s.B);
  s.I_hat = ref.I;
  s.R_hat = ref.R;
  const ScaledEpidemic scaled{s.B * state.I, s.B * state.R, s.B};
  s.cal_I = scaled.cal_I;
  s.cal_R = scaled.cal_R;
  s.cal_I_hat = s.B * ref.I;
  s.cal_R_hat = s.B * ref.R;
  s.epidemic_storage = epidemic_storage(params, config.design.beta_star, config.upsilon, scaled);

  const auto* ipc = dynamic_cast<const PairwiseComparisonProtocol*>(&protocol);
  if (ipc != nullptr) {
    s.protocol_storage = ipc_storage(*ipc, state.x, s.payoff);
    s.dissipation = ipc_dissipation(*ipc, state.x, s.payoff);
    if (!config.baseline.enabled) s.lyapunov = s.protocol_storage + s.epidemic_storage;
  }
  return s;
}

std::string describe(double t, std::span<const double> y) {
  std::ostringstream os;
  os << std::setprecision(12) << "t = " << t << ", (I, R, x..., q) = (";
  for (std::size_t i = 0; i < y.size(); ++i) os << (i ? ", " : "") << y[i];
  os << ")";
  return os.str();
}

}  // namespace

TrajectorySample make_sample(const Protocol& protocol, const StrategyProfile& profile,
                             const EpidemicParams& params, const MechanismConfig& config,
                             double t, const SystemState& state) {
  return sample_with_saturation(protocol, profile, params, config,
                                resolve_saturation(protocol, profile, config), t, state);
}

Trajectory integrate(const Protocol& protocol, const StrategyProfile& profile,
                     const EpidemicParams& params, const MechanismConfig& config,
                     const SystemState& initial, const IntegrationOptions& options) {
  if (!(options.t_end > 0.0) || !std::isfinite(options.t_end)) {
    throw Error(ErrorCode::InvalidArgument, "t_end must be positive");
  }
  if (!(options.rel_tol > 0.0) || !(options.abs_tol > 0.0) || !(options.sample_interval > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "tolerances and sample interval must be positive");
  }
  validate_state(initial, profile);
  if (config.baseline.enabled && config.baseline.x_check.size() != profile.size()) {
    throw Error(ErrorCode::InvalidArgument, "baseline x_check must match the profile length");
  }
  const auto sat = resolve_saturation(protocol, profile, config);
  const std::size_t n = profile.size();
  const std::size_t dim = n + 3;

  Trajectory traj;
  traj.beta_star = config.design.beta_star;
  traj.I_star = config.design.I_star;
  traj.R_star = config.design.R_star;
  traj.c_star = config.design.c_star;
  traj.omega = params.omega();
  traj.gamma = params.gamma();

  SystemState scratch;
  scratch.x.resize(n);
  auto unpack = [n](std::span<const double> y, SystemState& s) {
    s.I = y[0];
    s.R = y[1];
    std::copy(y.begin() + 2, y.begin() + 2 + static_cast<std::ptrdiff_t>(n), s.x.begin());
    s.q = y[n + 2];
  };
  const OdeRhs rhs = [&](double, std::span<const double> y, std::span<double> dydt) {
    ++traj.steps.rhs_evaluations;
    if (!(y[0] > 0.0)) {
      // Rejected by the error test, which treats NaN as failure.
      std::fill(dydt.begin(), dydt.end(), std::numeric_limits<double>::quiet_NaN());
      return;
    }
    unpack(y, scratch);
    const auto d = rhs_with_saturation(protocol, profile, params, config, sat, scratch);
    dydt[0] = d.dI;
    dydt[1] = d.dR;
    std::copy(d.dx.begin(), d.dx.end(), dydt.begin() + 2);
    dydt[n + 2] = d.dq;
  };

  std::vector<double> y(dim), y_new(dim), err(dim), k1(dim), k_last(dim);
  y[0] = initial.I;
  y[1] = initial.R;
  std::copy(initial.x.begin(), initial.x.end(), y.begin() + 2);
  y[n + 2] = initial.q;

  SystemState current;
  current.x.resize(n);
  auto record = [&](double t) {
    unpack(y, current);
    traj.samples.push_back(
        sample_with_saturation(protocol, profile, params, config, sat, t, current));
  };

  double t = 0.0;
  rhs(t, y, k1);
  record(t);

  DormandPrince45 stepper(dim);
  std::size_t sample_index = 1;
  auto next_sample_time = [&] {
    return std::min(static_cast<double>(sample_index) * options.sample_interval, options.t_end);
  };
  double h = std::min(0.01, options.sample_interval);

  while (t < options.t_end) {
    if (traj.steps.accepted + traj.steps.rejected >= options.max_steps) {
      throw Error(ErrorCode::StepSizeUnderflow, "step budget exhausted at " + describe(t, y));
    }
    const double target = next_sample_time();
    bool lands = false;
    if (h >= target - t) {
      h = target - t;
      lands = true;
    }
    stepper.step(rhs, t, y, k1, h, y_new, err, k_last);
    const double norm = error_norm(err, y, y_new, options.rel_tol, options.abs_tol);
    if (!(norm <= 1.0)) {
      ++traj.steps.rejected;
      const double shrink = std::isfinite(norm) ? std::max(0.2, 0.9 * std::pow(norm, -0.2)) : 0.25;
      h *= shrink;
      if (h < options.min_step) {
        throw Error(ErrorCode::StepSizeUnderflow, "step size fell below minimum at " + describe(t, y));
      }
      continue;
    }

    t = lands ? target : t + h;
    y.swap(y_new);

    double mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) mass += y[2 + i];
    traj.steps.max_simplex_drift = std::max(traj.steps.max_simplex_drift, std::abs(mass - 1.0));
    try {
      const auto projected =
          PopulationState::normalized(Vector(y.begin() + 2, y.begin() + 2 + static_cast<std::ptrdiff_t>(n)));
      std::copy(projected.values().begin(), projected.values().end(), y.begin() + 2);
    } catch (const Error& e) {
      throw Error(ErrorCode::InvariantBreach, std::string(e.what()) + " at " + describe(t, y));
    }
    if (!(y[0] > 0.0)) {
      throw Error(ErrorCode::InvariantBreach, "I left (0, 1] at " + describe(t, y));
    }
    if (y[1] < -kNegativeClampLimit || y[0] + y[1] > 1.0 + kNegativeClampLimit) {
      throw Error(ErrorCode::InvariantBreach, "R left [0, 1 - I] at " + describe(t, y));
    }

    auto& st = traj.steps;
    ++st.accepted;
    st.min_I = std::min(st.min_I, y[0]);
    st.max_I = std::max(st.max_I, y[0]);
    st.min_R = std::min(st.min_R, y[1]);
    st.max_I_plus_R = std::max(st.max_I_plus_R, y[0] + y[1]);
    const double B = profile.transmission(std::span<const double>(y).subspan(2, n));
    st.min_B = std::min(st.min_B, B);
    st.max_B = std::max(st.max_B, B);
    st.max_abs_q = std::max(st.max_abs_q, std::abs(y[n + 2]));

    // The projection moves y slightly, so the FSAL derivative is recomputed.
    rhs(t, y, k1);
    if (lands) {
      record(t);
      ++sample_index;
    }
    const double grow = norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(norm, -0.2), 0.2, 5.0);
    h *= grow;
  }
  return traj;
}

TrajectorySummary summarize(const Trajectory& trajectory, const DesignTarget& design,
                            const SettlingCriteria& criteria, double window) {
  TrajectorySummary summary;
  const auto& s = trajectory.samples;
  if (s.empty()) return summary;

  double run_start = 0.0;
  bool in_run = false;
  for (const auto& sample : s) {
    const double ratio = sample.state.I / design.I_star;
    if (ratio > summary.peak_I_ratio) {
      summary.peak_I_ratio = ratio;
      summary.peak_time = sample.t;
    }
    summary.max_beta_deviation =
        std::max(summary.max_beta_deviation, std::abs(sample.B - design.beta_star));

    const double dev = std::max({std::abs(sample.state.I - design.I_star) / design.I_star,
                                 std::abs(sample.state.R - design.R_star) / design.R_star,
                                 std::abs(sample.B - design.beta_star) / design.beta_star});
    if (summary.settling_time) continue;
    if (dev < criteria.relative_tolerance) {
      if (!in_run) {
        in_run = true;
        run_start = sample.t;
      }
      if (sample.t - run_start >= criteria.hold_days) summary.settling_time = run_start;
    } else {
      in_run = false;
    }
  }

  const double t_end = s.back().t;
  const double from = std::max(0.0, t_end - window);
  double integral = 0.0;
  double q_dist = 0.0;
  double first = t_end;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (s[k].t < from) continue;
    first = std::min(first, s[k].t);
    const double q = s[k].state.q;
    q_dist = std::max(q_dist, std::max({design.q_lo - q, q - design.q_hi, 0.0}));
    if (k > 0 && s[k - 1].t >= from) {
      integral += 0.5 * (s[k].reward_cost + s[k - 1].reward_cost) * (s[k].t - s[k - 1].t);
    }
  }
  summary.cost_window = t_end - first;
  summary.long_run_cost = summary.cost_window > 0.0 ? integral / summary.cost_window : s.back().reward_cost;
  summary.late_q_distance = q_dist;
  return summary;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  if (trajectory.samples.empty()) return;
  const std::size_t n = trajectory.samples.front().state.x.size();
  out << "t,I,R,S,B,q";
  for (std::size_t i = 1; i <= n; ++i) out << ",x_" << i;
  for (std::size_t i = 1; i <= n; ++i) out << ",r_" << i;
  out << ",reward_cost,L,sS,S_storage,P_dissipation,I_hat,R_hat\n";
  out << std::setprecision(12);
  for (const auto& s : trajectory.samples) {
    out << s.t << ',' << s.state.I << ',' << s.state.R << ',' << s.state.susceptible() << ','
        << s.B << ',' << s.state.q;
    for (double v : s.state.x) out << ',' << v;
    for (double v : s.reward) out << ',' << v;
    out << ',' << s.reward_cost << ',' << s.lyapunov << ',' << s.epidemic_storage << ','
        << s.protocol_storage << ',' << s.dissipation << ',' << s.I_hat << ',' << s.R_hat << '\n';
  }
}

}  // namespace epg
