#include "epg/revision_protocols.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace epg {

namespace {

double euclidean_norm(std::span<const double> v) {
  double s = 0.0;
  for (double a : v) s += a * a;
  return std::sqrt(s);
}

void require_same_size(std::span<const double> x, std::span<const double> p) {
  if (x.size() != p.size() || x.empty()) {
    throw Error(ErrorCode::InvalidArgument, "state and payoff must be non-empty and equally sized");
  }
}

}  // namespace

RateMatrix PairwiseComparisonProtocol::rates(std::span<const double> x,
                                             std::span<const double> p) const {
  require_same_size(x, p);
  const std::size_t n = p.size();
  RateMatrix T(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double gain = p[j] - p[i];
      if (gain > 0.0) T(i, j) = phi(j, gain);
    }
  }
  return T;
}

SmithProtocol::SmithProtocol(double lambda, double rate_cap) : lambda_(lambda), rate_cap_(rate_cap) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::InvalidArgument, "Smith protocol needs lambda > 0");
  }
  if (!(rate_cap > 0.0) || !std::isfinite(rate_cap)) {
    throw Error(ErrorCode::InvalidArgument, "Smith protocol needs a positive rate cap");
  }
}

double SmithProtocol::phi(std::size_t, double gain) const {
  if (gain <= 0.0) return 0.0;
  return std::min(lambda_ * gain, rate_cap_);
}

double SmithProtocol::phi_integral(std::size_t, double gain) const {
  if (gain <= 0.0) return 0.0;
  const double kink = rate_cap_ / lambda_;
  if (gain <= kink) return 0.5 * lambda_ * gain * gain;
  return rate_cap_ * gain - rate_cap_ * rate_cap_ / (2.0 * lambda_);
}

double smith_storage_kernel_literal(double payoff_gap, double rate_cap) {
  const double v = std::max(payoff_gap, 0.0);
  if (payoff_gap <= rate_cap) return 0.5 * v * v;
  return v * rate_cap;
}

Vector mean_dynamics(const Protocol& protocol, std::span<const double> x, std::span<const double> p) {
  require_same_size(x, p);
  const std::size_t n = x.size();
  const RateMatrix T = protocol.rates(x, p);
  Vector v(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double inflow = 0.0;
    double outflow = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      inflow += x[j] * T(j, i);
      outflow += T(i, j);
    }
    v[i] = inflow - x[i] * outflow;
  }
  return v;
}

std::vector<std::size_t> best_response(std::span<const double> p, double tolerance) {
  if (p.empty()) {
    throw Error(ErrorCode::InvalidArgument, "payoff vector is empty");
  }
  const double top = *std::max_element(p.begin(), p.end());
  std::vector<std::size_t> face;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] >= top - tolerance) face.push_back(i);
  }
  return face;
}

bool supported_on_best_response(std::span<const double> x, std::span<const double> p,
                                double tolerance) {
  require_same_size(x, p);
  const double top = *std::max_element(p.begin(), p.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0 && p[i] < top - tolerance) return false;
  }
  return true;
}

NashStationarityReport check_nash_stationarity(const Protocol& protocol,
                                               std::span<const PayoffSample> samples,
                                               double tolerance) {
  NashStationarityReport report;
  report.samples = samples.size();
  report.min_norm_off_face = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& s = samples[k];
    const double norm = euclidean_norm(mean_dynamics(protocol, s.x, s.p));
    if (supported_on_best_response(s.x, s.p)) {
      ++report.at_best_response;
      report.max_norm_at_rest = std::max(report.max_norm_at_rest, norm);
      if (norm > tolerance) report.violations.push_back(k);
    } else {
      report.min_norm_off_face = std::min(report.min_norm_off_face, norm);
      if (!(norm > tolerance)) report.violations.push_back(k);
    }
  }
  return report;
}

void NashStationarityReport::raise_if_violated(std::span<const PayoffSample> samples) const {
  if (violations.empty()) return;
  const auto& s = samples[violations.front()];
  std::ostringstream os;
  os << "sample " << violations.front() << " breaks V = 0 <=> best response; x = (";
  for (std::size_t i = 0; i < s.x.size(); ++i) os << (i ? ", " : "") << s.x[i];
  os << "), p = (";
  for (std::size_t i = 0; i < s.p.size(); ++i) os << (i ? ", " : "") << s.p[i];
  os << ")";
  throw Error(ErrorCode::NSViolation, os.str());
}

double ipc_storage(const PairwiseComparisonProtocol& protocol, std::span<const double> x,
                   std::span<const double> p) {
  require_same_size(x, p);
  const std::size_t n = x.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      row += protocol.phi_integral(j, p[j] - p[i]);
    }
    s += x[i] * row;
  }
  return s;
}

double ipc_dissipation(const PairwiseComparisonProtocol& protocol, std::span<const double> x,
                       std::span<const double> p) {
  const Vector v = mean_dynamics(protocol, x, p);
  const std::size_t n = x.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      row += protocol.phi_integral(j, p[j] - p[i]);
    }
    total -= v[i] * row;
  }
  return total;
}

}  // namespace epg
