#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "entrobound/quadrature.hpp"

namespace entrobound {

namespace detail {
class Distribution;
}

struct Interval {
  double low;
  double high;
};

/// A probability measure on the real line with a density.
///
/// Immutable and cheap to copy. Tail quantities are available on both sides
/// (`cdf`/`ccdf`, `quantile`/`upper_quantile`) so that probabilities far in
/// either tail keep full relative precision.
class Measure1D {
 public:
  enum class Kind { gaussian, uniform, exponential, logistic, mixture, grid };

  static Measure1D gaussian(double mean = 0.0, double std_dev = 1.0);
  static Measure1D uniform(double a = 0.0, double b = 1.0);
  static Measure1D exponential(double rate = 1.0);
  static Measure1D logistic(double loc = 0.0, double scale = 1.0);
  static Measure1D mixture(std::vector<double> weights, std::vector<Measure1D> parts);
  /// Piecewise-linear density through (xs[i], ps[i]), renormalized.
  static Measure1D grid(std::vector<double> xs, std::vector<double> ps);

  static Measure1D from_json(const nlohmann::json& spec);
  nlohmann::json to_json() const;

  Kind kind() const;
  std::string name() const;

  double density(double x) const;
  double cdf(double x) const;
  /// 1 - cdf(x), computed without cancellation.
  double ccdf(double x) const;

  /// x with cdf(x) = v. Throws DomainError unless 0 < v < 1.
  double quantile(double v) const;
  /// x with ccdf(x) = w. Throws DomainError unless 0 < w < 1.
  double upper_quantile(double w) const;

  double median() const { return quantile(0.5); }
  Interval support() const;

  /// Points where the density is not smooth (support ends, grid knots).
  std::vector<double> kinks() const;

 private:
  explicit Measure1D(std::shared_ptr<const detail::Distribution> impl);
  std::shared_ptr<const detail::Distribution> impl_;
};

Measure1D make_grid_density(std::vector<double> xs, std::vector<double> ps);

/// Inverse-CDF sampling. Throws DomainError unless 0 < u < 1.
double sample(const Measure1D& m, double u);

double quantile(const Measure1D& m, double v);

/// ∫ h dμ, evaluated as ∫₀¹ h(quantile(v)) dv split at v = 1/2. Each half
/// is integrated linearly on [tail_cut, 1/2] and on a log scale below.
IntegrationResult integrate(const Measure1D& m, const RealFunction& h,
                            const QuadratureSpec& spec = {});

enum class Tail { lower, upper };

/// ∫ h(x(s), s) ds over s in [lo, hi] ⊂ [0, 1/2], where x(s) is
/// quantile(s) for the lower tail and upper_quantile(s) for the upper one.
using TailIntegrand = std::function<double(double x, double s)>;
IntegrationResult integrate_tail(const Measure1D& m, Tail side,
                                 const TailIntegrand& h, double lo, double hi,
                                 const QuadratureSpec& spec);

/// Product of independent one-dimensional measures.
class ProductMeasure {
 public:
  explicit ProductMeasure(std::vector<Measure1D> components);

  static ProductMeasure from_json(const nlohmann::json& spec);
  nlohmann::json to_json() const;

  std::size_t dimension() const { return components_.size(); }
  const std::vector<Measure1D>& components() const { return components_; }

  /// Maps d uniforms to a point by coordinatewise inverse CDF.
  void sample(std::span<const double> u, std::span<double> out) const;

 private:
  std::vector<Measure1D> components_;
};

}  // namespace entrobound
