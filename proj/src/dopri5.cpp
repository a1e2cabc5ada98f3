#include "epg/dopri5.hpp"

#include <algorithm>
#include <cmath>

namespace epg {

namespace {

constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;

constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                 a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;

// Difference between the fifth- and fourth-order weights.
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

}  // namespace

DormandPrince45::DormandPrince45(std::size_t dim)
    : dim_(dim), k2_(dim), k3_(dim), k4_(dim), k5_(dim), k6_(dim), tmp_(dim) {}

void DormandPrince45::step(const OdeRhs& f, double t, std::span<const double> y,
                           std::span<const double> k1, double h, std::span<double> y_out,
                           std::span<double> err, std::span<double> k_last) {
  const std::size_t n = dim_;
  for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + h * a21 * k1[i];
  f(t + c2 * h, tmp_, k2_);
  for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + h * (a31 * k1[i] + a32 * k2_[i]);
  f(t + c3 * h, tmp_, k3_);
  for (std::size_t i = 0; i < n; ++i)
    tmp_[i] = y[i] + h * (a41 * k1[i] + a42 * k2_[i] + a43 * k3_[i]);
  f(t + c4 * h, tmp_, k4_);
  for (std::size_t i = 0; i < n; ++i)
    tmp_[i] = y[i] + h * (a51 * k1[i] + a52 * k2_[i] + a53 * k3_[i] + a54 * k4_[i]);
  f(t + c5 * h, tmp_, k5_);
  for (std::size_t i = 0; i < n; ++i)
    tmp_[i] =
        y[i] + h * (a61 * k1[i] + a62 * k2_[i] + a63 * k3_[i] + a64 * k4_[i] + a65 * k5_[i]);
  f(t + h, tmp_, k6_);
  for (std::size_t i = 0; i < n; ++i)
    y_out[i] =
        y[i] + h * (a71 * k1[i] + a73 * k3_[i] + a74 * k4_[i] + a75 * k5_[i] + a76 * k6_[i]);
  f(t + h, y_out, k_last);
  for (std::size_t i = 0; i < n; ++i)
    err[i] = h * (e1 * k1[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] + e6 * k6_[i] +
                  e7 * k_last[i]);
}

double error_norm(std::span<const double> err, std::span<const double> y,
                  std::span<const double> y_new, double rtol, double atol) {
  double acc = 0.0;
  for (std::size_t i = 0; i < err.size(); ++i) {
    const double scale = atol + rtol * std::max(std::abs(y[i]), std::abs(y_new[i]));
    const double r = err[i] / scale;
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(err.size()));
}

}  // namespace epg
