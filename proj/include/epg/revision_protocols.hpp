#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "epg/core_model.hpp"

namespace epg {

/// Row-major n x n matrix of switch rates; entry (i, j) is the rate at which an
/// agent playing i switches to j.
class RateMatrix {
 public:
  explicit RateMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

  std::size_t size() const noexcept { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }

 private:
  std::size_t n_;
  std::vector<double> data_;
};

/// A revision protocol maps (population state, payoff) to bounded switch rates.
class Protocol {
 public:
  virtual ~Protocol() = default;

  virtual RateMatrix rates(std::span<const double> x, std::span<const double> p) const = 0;
  /// Upper bound on every switch rate.
  virtual double rate_cap() const noexcept = 0;
};

/// Impartial pairwise comparison protocol: T_ij = phi_j([p_j - p_i]_+).
/// Exposes the antiderivative of phi needed by the passivity storage.
class PairwiseComparisonProtocol : public Protocol {
 public:
  virtual double phi(std::size_t j, double gain) const = 0;
  /// Integral of phi_j over [0, gain], gain >= 0.
  virtual double phi_integral(std::size_t j, double gain) const = 0;

  RateMatrix rates(std::span<const double> x, std::span<const double> p) const override;
};

/// Smith's protocol, phi(v) = min(lambda v, T_bar).
class SmithProtocol final : public PairwiseComparisonProtocol {
 public:
  SmithProtocol(double lambda, double rate_cap);

  double lambda() const noexcept { return lambda_; }
  double rate_cap() const noexcept override { return rate_cap_; }

  double phi(std::size_t j, double gain) const override;
  /// lambda a^2 / 2 below the kink a = T_bar / lambda, T_bar a - T_bar^2 / (2 lambda) above.
  double phi_integral(std::size_t j, double gain) const override;

 private:
  double lambda_;
  double rate_cap_;
};

/// Closed-form storage kernel as printed for Smith's protocol with lambda = 1:
/// v^2/2 up to T_bar and T_bar v beyond. Kept for comparison with the exact
/// integral; it drops the -T_bar^2/2 continuity offset above the kink.
double smith_storage_kernel_literal(double payoff_gap, double rate_cap);

/// Mean dynamics V_i = sum_j x_j T_ji - x_i sum_j T_ij.
Vector mean_dynamics(const Protocol& protocol, std::span<const double> x, std::span<const double> p);

inline constexpr double kBestResponseTolerance = 1e-9;

/// Indices attaining max_i p_i within `tolerance`; the maximizing face of the simplex.
std::vector<std::size_t> best_response(std::span<const double> p,
                                       double tolerance = kBestResponseTolerance);

/// True iff every strategy used by x is in the best-response set of p.
bool supported_on_best_response(std::span<const double> x, std::span<const double> p,
                                double tolerance = kBestResponseTolerance);

struct PayoffSample {
  Vector x;
  Vector p;
};

struct NashStationarityReport {
  std::size_t samples = 0;
  std::size_t at_best_response = 0;
  /// Largest |V| among samples whose support is a best response (should be 0).
  double max_norm_at_rest = 0.0;
  /// Smallest |V| among samples off the best-response face (should be > tol).
  double min_norm_off_face = 0.0;
  std::vector<std::size_t> violations;

  bool ok() const noexcept { return violations.empty(); }
  /// Throws NSViolation naming the first witnessing sample.
  void raise_if_violated(std::span<const PayoffSample> samples) const;
};

/// Checks V(x, p) = 0 <=> supp(x) within argmax p on the given samples:
/// |V| <= tolerance exactly when x is a best response.
NashStationarityReport check_nash_stationarity(const Protocol& protocol,
                                               std::span<const PayoffSample> samples,
                                               double tolerance);

/// Passivity storage S(x, p) = sum_ij x_i int_0^{[p_j - p_i]_+} phi_j.
double ipc_storage(const PairwiseComparisonProtocol& protocol, std::span<const double> x,
                   std::span<const double> p);

/// Dissipation P(x, p) = -sum_ij V_i int_0^{[p_j - p_i]_+} phi_j.
double ipc_dissipation(const PairwiseComparisonProtocol& protocol, std::span<const double> x,
                       std::span<const double> p);

}  // namespace epg
