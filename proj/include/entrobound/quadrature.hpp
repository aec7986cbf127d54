#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace entrobound {

/// Tolerances shared by every quadrature in the library.
///
/// `tail_cut` is the probability level below which the integral over a tail
/// is evaluated on a logarithmic scale instead of linearly.
struct QuadratureSpec {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  int max_depth = 50;
  double tail_cut = 1e-10;

  void validate() const;
};

struct IntegrationResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t evaluations = 0;

  IntegrationResult& operator+=(const IntegrationResult& other) {
    value += other.value;
    error += other.error;
    evaluations += other.evaluations;
    return *this;
  }
};

using RealFunction = std::function<double(double)>;

/// Globally adaptive 21-point Gauss-Kronrod quadrature on [a, b].
///
/// The interval with the largest error estimate is bisected until the summed
/// estimate is below max(abs_tol, rel_tol * |I|). Throws ConvergenceError when
/// no interval can be refined further (depth limit) and the target is unmet,
/// and NonFiniteError when f returns a non-finite value.
IntegrationResult adaptive_integrate(const RealFunction& f, double a, double b,
                                     double rel_tol, double abs_tol,
                                     int max_depth);

/// Same as adaptive_integrate, but [a, b] is first split at `breaks`
/// (points outside (a, b) are ignored). Each piece gets a share of abs_tol.
IntegrationResult adaptive_integrate(const RealFunction& f, double a, double b,
                                     std::span<const double> breaks,
                                     double rel_tol, double abs_tol,
                                     int max_depth);

/// Integral over [lo, hi] with 0 <= lo < hi, using the substitution
/// s = exp(u). A zero lower limit is truncated at `kProbabilityFloor`.
IntegrationResult log_scale_integrate(const RealFunction& f, double lo,
                                      double hi, double rel_tol,
                                      double abs_tol, int max_depth);

/// Smallest probability coordinate ever evaluated.
inline constexpr double kProbabilityFloor = 1e-280;

}  // namespace entrobound
