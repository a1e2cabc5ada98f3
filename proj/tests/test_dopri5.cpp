#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "epg/dopri5.hpp"

using epg::DormandPrince45;
using epg::OdeRhs;

namespace {

// y1' = y2, y2' = -y1: exact solution (cos t, -sin t) from (1, 0).
const OdeRhs kOscillator = [](double, std::span<const double> y, std::span<double> dy) {
  dy[0] = y[1];
  dy[1] = -y[0];
};

double fixed_step_error(int steps) {
  DormandPrince45 stepper(2);
  std::vector<double> y{1.0, 0.0}, k1(2), y_new(2), err(2), k_last(2);
  kOscillator(0.0, y, k1);
  const double h = 2.0 / steps;
  double t = 0.0;
  for (int i = 0; i < steps; ++i) {
    stepper.step(kOscillator, t, y, k1, h, y_new, err, k_last);
    y = y_new;
    k1 = k_last;
    t += h;
  }
  return std::hypot(y[0] - std::cos(2.0), y[1] + std::sin(2.0));
}

}  // namespace

TEST(DormandPrince45, FifthOrderGlobalConvergence) {
  const double e1 = fixed_step_error(10);
  const double e2 = fixed_step_error(20);
  const double e3 = fixed_step_error(40);
  EXPECT_NEAR(e1 / e2, 32.0, 4.0);
  EXPECT_NEAR(e2 / e3, 32.0, 4.0);
}

TEST(DormandPrince45, ExactOnLowDegreePolynomials) {
  // y' = 5 t^4 is integrated exactly by a fifth-order method.
  const OdeRhs f = [](double t, std::span<const double>, std::span<double> dy) { dy[0] = 5 * std::pow(t, 4); };
  DormandPrince45 stepper(1);
  std::vector<double> y{0.0}, k1{0.0}, y_new(1), err(1), k_last(1);
  stepper.step(f, 0.0, y, k1, 1.5, y_new, err, k_last);
  EXPECT_NEAR(y_new[0], std::pow(1.5, 5), 1e-12);
  EXPECT_NEAR(k_last[0], 5 * std::pow(1.5, 4), 1e-12);
}

TEST(DormandPrince45, EmbeddedErrorEstimateShrinksWithStep) {
  DormandPrince45 stepper(2);
  std::vector<double> y{1.0, 0.0}, k1(2), y_new(2), err(2), k_last(2);
  kOscillator(0.0, y, k1);
  stepper.step(kOscillator, 0.0, y, k1, 0.2, y_new, err, k_last);
  const double big = std::hypot(err[0], err[1]);
  stepper.step(kOscillator, 0.0, y, k1, 0.1, y_new, err, k_last);
  const double small = std::hypot(err[0], err[1]);
  EXPECT_GT(big, 0.0);
  // Local error of the fourth-order embedded solution scales like h^5.
  EXPECT_NEAR(std::log2(big / small), 5.0, 0.6);
}

TEST(ErrorNorm, ScaledRms) {
  const std::vector<double> err{1e-6, -2e-6}, y{1.0, 0.0}, y_new{0.5, 2.0};
  const double sc0 = 1e-6 + 1e-3 * 1.0, sc1 = 1e-6 + 1e-3 * 2.0;
  const double expected = std::sqrt(0.5 * (std::pow(1e-6 / sc0, 2) + std::pow(2e-6 / sc1, 2)));
  EXPECT_NEAR(epg::error_norm(err, y, y_new, 1e-3, 1e-6), expected, 1e-15);
}
