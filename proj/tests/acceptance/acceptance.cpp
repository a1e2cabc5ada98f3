// Acceptance checks for the worked example. Prints one PASS/FAIL line per
// criterion plus INFO lines, and exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "epg/epg_dynamics.hpp"
#include "epg/game_design.hpp"
#include "epg/lyapunov_bounds.hpp"
#include "epg/revision_protocols.hpp"
#include "test_support.hpp"

using namespace epg;
using epg::testing::example1_design;
using epg::testing::example1_initial;
using epg::testing::example1_params;
using epg::testing::example1_profile;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void verdict(int id, bool ok, const std::string& what, const std::string& detail) {
  std::printf("%s criterion %d: %s | %s\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

void info(const std::string& text) {
  std::printf("INFO %s\n", text.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

Trajectory example1_run(double upsilon, double t_end) {
  MechanismConfig m;
  m.design = example1_design();
  m.upsilon = upsilon;
  IntegrationOptions o;
  o.t_end = t_end;
  return integrate(SmithProtocol(0.1, 0.1), example1_profile(), example1_params(), m,
                   example1_initial(), o);
}

BoundProblem example1_problem(double upsilon, const DesignTarget& design) {
  return make_bound_problem(example1_params(), example1_profile(), design, upsilon);
}

double example1_alpha(double upsilon) { return 0.5 * std::pow(upsilon * 0.02, 2); }

void criterion1() {
  const auto start = Clock::now();
  const auto d = optimal_target(example1_profile(), example1_params(), 0.1, 0.02);
  const double elapsed = seconds_since(start);
  const bool ok = std::abs(d.beta_star - 0.17) <= 1e-12 && std::abs(d.x_star[0] - 0.5) <= 1e-12 &&
                  std::abs(d.x_star[1] - 0.5) <= 1e-12 && std::abs(d.I_star - 0.019608) <= 1e-6 &&
                  std::abs(d.R_star - 0.392157) <= 1e-6 && elapsed < 1e-3;
  verdict(1, ok, "design closed forms",
          fmt("beta*=%.15g x*=(%.15g, %.15g) I*=%.7f R*=%.7f time=%.3g ms", d.beta_star, d.x_star[0],
              d.x_star[1], d.I_star, d.R_star, elapsed * 1e3));
}

void criterion2() {
  const auto start = Clock::now();
  const auto problem = example1_problem(0.806, example1_design());
  const double alpha = example1_alpha(0.806);
  const double v = pi_star(problem, alpha);
  const double oracle = pi_star_oracle(problem, alpha, 400);
  const double elapsed = seconds_since(start);
  const bool ok = std::abs(v - 1.3436) <= 1e-3 && std::abs(v - oracle) <= 5e-3 && elapsed < 10.0;
  verdict(2, ok, "anytime bound at upsilon = 0.806",
          fmt("pi*=%.6f oracle(400)=%.6f |diff|=%.2e time=%.2f s", v, oracle, std::abs(v - oracle), elapsed));
}

void criterion3() {
  const auto start = Clock::now();
  const auto sel = select_upsilon(example1_params(), example1_profile(), example1_design(), 0.15, 1.344);
  const double elapsed = seconds_since(start);
  const bool ok = std::abs(sel.upsilon - 0.806) <= 1e-3;
  verdict(3, ok, "upsilon selection for target 1.344 gives 0.806 +- 1e-3",
          fmt("upsilon=%.6f bound=%.6f |upsilon-0.806|=%.2e time=%.2f s", sel.upsilon, sel.bound,
              std::abs(sel.upsilon - 0.806), elapsed));
  const auto p = example1_problem(0.806, example1_design());
  info(fmt("criterion 3: pi*(0.806)=%.6f pi*(0.807)=%.6f pi*(0.8071)=%.6f", pi_star(p, example1_alpha(0.806), 1e-7),
           pi_star(example1_problem(0.807, example1_design()), example1_alpha(0.807), 1e-7),
           pi_star(example1_problem(0.8071, example1_design()), example1_alpha(0.8071), 1e-7)));
}

struct RunData {
  double upsilon;
  Trajectory traj;
  double seconds;
};

void criterion4(const std::vector<RunData>& runs) {
  bool ok = true;
  std::string detail;
  const auto d = example1_design();
  for (const auto& r : runs) {
    std::size_t violations = 0;
    double peak = 0.0, dev = 0.0;
    for (const auto& s : r.traj.samples) {
      const double ratio = s.state.I / d.I_star;
      peak = std::max(peak, ratio);
      if (ratio > 1.344) ++violations;
      dev = std::max(dev, std::abs(s.B - d.beta_star));
    }
    const bool run_ok = violations == 0 && dev <= 0.02 + 1e-12 && r.seconds < 30.0;
    ok &= run_ok;
    detail += fmt("[upsilon=%.3f peak I/I*=%.5f violations=%zu max|B-beta*|=%.6f time=%.2f s] ", r.upsilon,
                  peak, violations, dev, r.seconds);
  }
  verdict(4, ok, "trajectory overshoot and transmission bounds", detail);
}

void criterion5(const std::vector<RunData>& runs) {
  bool ok = true;
  std::string detail;
  for (const auto& r : runs) {
    const auto sum = summarize(r.traj, example1_design(), SettlingCriteria{1e-3, 100.0}, 1000.0);
    const bool settled = sum.settling_time.has_value() && *sum.settling_time + 100.0 <= 4000.0;
    const bool q_ok = sum.late_q_distance <= 1e-3;
    ok &= settled && q_ok;
    detail += fmt("[upsilon=%.3f settling=%s late |q|=%.4f] ", r.upsilon,
                  sum.settling_time ? fmt("%.0f", *sum.settling_time).c_str() : "none", sum.late_q_distance);
  }
  verdict(5, ok, "settling within relative 1e-3 for 100 days before t=4000 and late q within 1e-3", detail);
}

void criterion6(const std::vector<RunData>& runs) {
  bool ok = true;
  std::string detail;
  for (const auto& r : runs) {
    const auto sum = summarize(r.traj, example1_design(), {}, 1000.0);
    const bool run_ok = std::abs(sum.long_run_cost - 0.1) <= 5e-3;
    ok &= run_ok;
    detail += fmt("[upsilon=%.3f mean r'x over last 1000 days=%.5f] ", r.upsilon, sum.long_run_cost);
  }
  verdict(6, ok, "long-run cost within 0.1 +- 5e-3", detail);
}

void long_horizon_evidence() {
  for (double u : {0.806, 0.316}) {
    const auto traj = example1_run(u, 12000.0);
    const auto sum = summarize(traj, example1_design(), {}, 1000.0);
    info(fmt("t_end=12000 upsilon=%.3f settling=%s late |q|=%.2e mean r'x=%.5f", u,
             sum.settling_time ? fmt("%.0f", *sum.settling_time).c_str() : "none", sum.late_q_distance,
             sum.long_run_cost));
  }
}

void criterion7(const std::vector<RunData>& runs) {
  bool ok = true;
  std::string detail;
  for (const auto& r : runs) {
    const auto rep = check_dissipation(r.traj, 1e-6);
    const double alpha = r.traj.samples.front().lyapunov;
    const double slack = 1e-8 * std::max(1.0, alpha);
    std::size_t chain_breaks = 0;
    for (const auto& s : r.traj.samples) {
      if (s.lyapunov > alpha + slack || s.lyapunov < s.epidemic_storage - slack) ++chain_breaks;
    }
    const bool run_ok = rep.ok() && rep.worst_margin >= -1e-6 && rep.max_increase <= 1e-8 * alpha &&
                        chain_breaks == 0;
    ok &= run_ok;
    detail += fmt("[upsilon=%.3f alpha=%.6e worst margin=%.2e max step increase=%.2e chain breaks=%zu] ",
                  r.upsilon, alpha, rep.worst_margin, rep.max_increase, chain_breaks);
  }
  verdict(7, ok, "Lyapunov decrease, dissipation inequality and level chain", detail);
}

void criterion8() {
  const auto start = Clock::now();
  constexpr int kSamples = 10'000;
  epg::testing::Rng rng(8);
  double flow = 0.0, passivity = std::numeric_limits<double>::infinity(), homogeneity = 0.0,
         transparency = 0.0;
  std::size_t ns_fail = 0, on_face = 0;
  constexpr double h = 1e-6;
  for (int k = 0; k < kSamples; ++k) {
    const std::size_t n = static_cast<std::size_t>(rng.integer(2, 5));
    const SmithProtocol smith(rng.uniform(0.1, 2.0), rng.uniform(0.05, 1.0));
    Vector p = rng.vector(n, -2.0, 2.0);
    Vector x = rng.simplex(n);

    auto v = mean_dynamics(smith, x, p);
    flow = std::max(flow, std::abs(std::accumulate(v.begin(), v.end(), 0.0)));

    // Passivity on generic payoffs, with central-difference partials.
    const Vector u = rng.vector(n, -1.0, 1.0);
    double lhs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      Vector xp = x, xm = x, pp = p, pm = p;
      xp[i] += h;
      xm[i] -= h;
      pp[i] += h;
      pm[i] -= h;
      lhs += (ipc_storage(smith, xp, p) - ipc_storage(smith, xm, p)) / (2 * h) * v[i] +
             (ipc_storage(smith, x, pp) - ipc_storage(smith, x, pm)) / (2 * h) * u[i];
    }
    passivity = std::min(passivity, -ipc_dissipation(smith, x, p) + dot(u, v) - lhs);

    const double base = ipc_dissipation(smith, x, p);
    for (double a : {1.0, 1.5, 2.0, 10.0}) {
      Vector scaled = p;
      for (auto& e : scaled) e *= a;
      homogeneity = std::min(homogeneity, ipc_dissipation(smith, x, scaled) - base);
    }

    // NS both ways: alternate between x on the best-response face (with an
    // exact tie) and x carrying >= 1e-3 mass on a strategy >= 1e-3 below the top.
    const std::size_t best = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    if (k % 2 == 0) {
      const std::size_t tie = (best + 1) % n;
      p[tie] = p[best];
      std::fill(x.begin(), x.end(), 0.0);
      const double w = rng.uniform(0.0, 1.0);
      x[best] = w;
      x[tie] = 1.0 - w;
    } else {
      const std::size_t low = (best + 1) % n;
      p[low] = std::min(p[low], p[best] - 1e-3);
      if (x[low] < 1e-3) {
        x[low] += 1e-3;
        for (auto& e : x) e /= 1.0 + 1e-3;
      }
    }
    const std::vector<PayoffSample> one{{x, p}};
    const auto rep = check_nash_stationarity(smith, one, 1e-10);
    if (!rep.ok() || rep.at_best_response != (k % 2 == 0 ? 1u : 0u)) ++ns_fail;
    on_face += rep.at_best_response;

    // Saturation transparency for Smith-auto bounds with a Case II style offset.
    Vector beta(n);
    beta[0] = rng.uniform(0.11, 0.14);
    for (std::size_t i = 1; i < n; ++i) beta[i] = beta[i - 1] + rng.uniform(0.005, 0.05);
    Vector cost(n, 0.0);
    for (std::size_t i = n - 1; i-- > 0;) cost[i] = cost[i + 1] + rng.uniform(0.01, 0.3);
    const auto prof = StrategyProfile::make(beta, cost, example1_params());
    const double rho = rng.uniform(0.0, 0.1);
    const auto b = smith_saturation_bounds(smith, prof, rho);
    Vector offset(n);
    for (auto& e : offset) e = rng.uniform(-rho / 2, rho / 2);
    const double q = rng.uniform(-10.0, 10.0) * b.q_max;
    Vector p1(n), p2(n);
    for (std::size_t i = 0; i < n; ++i) {
      p1[i] = q * beta[i] + offset[i];
      p2[i] = saturate_q(b, q) * beta[i] + offset[i];
    }
    const auto v1 = mean_dynamics(smith, x, p1);
    const auto v2 = mean_dynamics(smith, x, p2);
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) d += (v1[i] - v2[i]) * (v1[i] - v2[i]);
    transparency = std::max(transparency, std::sqrt(d));
  }
  const bool ok = flow <= 1e-12 && ns_fail == 0 && passivity >= -1e-6 && homogeneity >= -1e-12 &&
                  transparency <= 1e-12;
  verdict(8, ok, "protocol properties over 10^4 random samples",
          fmt("max|sum V|=%.2e NS failures=%zu (on-face %zu) passivity slack min=%.2e homogeneity min=%.2e "
              "saturation diff max=%.2e time=%.2f s",
              flow, ns_fail, on_face, passivity, homogeneity, transparency, seconds_since(start)));
}

void criterion9() {
  const auto start = Clock::now();
  epg::testing::Rng rng(9);
  const auto params = example1_params();
  std::size_t lp_fail = 0;
  double lp_worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = static_cast<std::size_t>(rng.integer(2, 4));
    Vector beta(n), cost(n, 0.0), slope(n - 1);
    beta[0] = rng.uniform(0.11, 0.15);
    for (std::size_t i = 1; i < n; ++i) beta[i] = beta[i - 1] + rng.uniform(0.01, 0.05);
    for (auto& s : slope) s = rng.uniform(0.5, 10.0);
    std::sort(slope.begin(), slope.end(), std::greater<>());
    for (std::size_t i = n - 1; i-- > 0;) cost[i] = cost[i + 1] + slope[i] * (beta[i + 1] - beta[i]);
    const auto prof = StrategyProfile::make(beta, cost, params);
    if (!check_assumption1(prof)) {
      ++lp_fail;
      continue;
    }
    const double c_star = rng.uniform(0.02, 0.98) * prof.ctilde()[0];
    const auto d = optimal_target(prof, params, c_star, 1.0);
    const int res = n == 2 ? 2000 : (n == 3 ? 400 : 120);
    const double oracle = lp_oracle_beta_star(prof, c_star, res);
    const double step = (prof.beta_max() - prof.beta_min()) / res;
    lp_worst = std::max(lp_worst, std::abs(oracle - d.beta_star) / step);
    if (oracle < d.beta_star - 1e-12 || oracle > d.beta_star + 2.0 * step) ++lp_fail;
  }
  const auto problem = example1_problem(0.806, example1_design());
  std::size_t sandwich_fail = 0;
  double gap = 0.0;
  for (int k = 1; k <= 20; ++k) {
    const double alpha = 2e-4 * k / 20.0;
    const double v = pi_star(problem, alpha, 1e-4);
    const double o = pi_star_oracle(problem, alpha, 400);
    gap = std::max(gap, v - o);
    if (o > v + 1e-4 || o < v - 5e-3) ++sandwich_fail;
  }
  verdict(9, lp_fail == 0 && sandwich_fail == 0, "oracle equivalences",
          fmt("LP: 100 profiles, failures=%zu, worst gap=%.2f lattice steps; pi* sandwich: 20 alphas, "
              "failures=%zu, max(pi*-oracle)=%.2e; time=%.2f s",
              lp_fail, lp_worst, sandwich_fail, gap, seconds_since(start)));
}

void criterion10() {
  const auto start = Clock::now();
  const auto params = example1_params();
  const auto prof = example1_profile();
  std::vector<std::vector<double>> curves;
  std::vector<double> beta_stars;
  for (double c : {0.125, 0.1, 0.075}) {
    const auto d = optimal_target(prof, params, c, 0.02);
    beta_stars.push_back(d.beta_star);
    std::vector<double> curve;
    for (int k = 0; k < 100; ++k) {
      const double u = 0.05 + (2.5 - 0.05) * k / 99.0;
      curve.push_back(pi_star(make_bound_problem(params, prof, d, u), 0.5 * std::pow(u * 0.02, 2), 1e-6));
    }
    curves.push_back(std::move(curve));
  }
  bool increasing = true, ordered = true;
  for (const auto& c : curves)
    for (std::size_t k = 1; k < c.size(); ++k) increasing &= c[k] >= c[k - 1] - 1e-6;
  for (std::size_t k = 0; k < curves[0].size(); ++k) ordered &= curves[0][k] > curves[1][k] && curves[1][k] > curves[2][k];
  verdict(10, increasing && ordered, "pi*(upsilon) curves for beta* in {0.165, 0.17, 0.175}",
          fmt("beta*=(%.3f, %.3f, %.3f) increasing=%s ordered=%s end values=(%.4f, %.4f, %.4f) time=%.2f s",
              beta_stars[0], beta_stars[1], beta_stars[2], increasing ? "yes" : "no", ordered ? "yes" : "no",
              curves[0].back(), curves[1].back(), curves[2].back(), seconds_since(start)));
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  std::vector<RunData> runs;
  for (double u : {0.806, 0.316}) {
    const auto start = Clock::now();
    auto traj = example1_run(u, 4000.0);
    runs.push_back({u, std::move(traj), seconds_since(start)});
  }
  criterion4(runs);
  criterion5(runs);
  criterion6(runs);
  long_horizon_evidence();
  criterion7(runs);
  criterion8();
  criterion9();
  criterion10();
  std::printf("SUMMARY %d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
