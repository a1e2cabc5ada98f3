#pragma once

#include <functional>
#include <span>
#include <vector>

namespace epg {

/// Right-hand side y' = f(t, y) writing into dydt.
using OdeRhs = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;

/// Dormand-Prince 5(4) embedded pair with FSAL. Holds scratch storage only, so
/// one instance per integration.
class DormandPrince45 {
 public:
  explicit DormandPrince45(std::size_t dim);

  /// Advances y from t by h using k1 = f(t, y). Writes the fifth-order
  /// solution to y_out, the embedded error estimate to err and f(t+h, y_out)
  /// to k_last (the next step's k1 if accepted).
  void step(const OdeRhs& f, double t, std::span<const double> y, std::span<const double> k1,
            double h, std::span<double> y_out, std::span<double> err, std::span<double> k_last);

 private:
  std::size_t dim_;
  std::vector<double> k2_, k3_, k4_, k5_, k6_, tmp_;
};

/// Scaled RMS error norm: sqrt(mean((err_i / (atol + rtol max(|y_i|, |y_new_i|)))^2)).
double error_norm(std::span<const double> err, std::span<const double> y,
                  std::span<const double> y_new, double rtol, double atol);

}  // namespace epg
