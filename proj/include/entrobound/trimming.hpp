#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "entrobound/expr.hpp"
#include "entrobound/measure.hpp"
#include "entrobound/quadrature.hpp"
#include "entrobound/stats.hpp"

namespace entrobound {

/// A nested family of segments D_t = [a(t), b(t)], t in [0, 1).
///
/// The quantile family uses a(t) = q((1-t)/2), b(t) = q((1+t)/2) of the
/// measure it is applied to. A custom family takes explicit endpoint
/// expressions in t.
class TrimmedFamily1D {
 public:
  enum class Mode { quantile, custom };

  static TrimmedFamily1D quantile();
  /// Endpoint expressions in the variable t. Checked on a grid of 1000 points
  /// for a(0) = b(0), a nonincreasing and b nondecreasing.
  static TrimmedFamily1D custom(Expr a, Expr b);
  static TrimmedFamily1D from_json(const nlohmann::json& spec);
  nlohmann::json to_json() const;

  Mode mode() const { return mode_; }
  bool is_quantile() const { return mode_ == Mode::quantile; }

  double a(const Measure1D& m, double t) const;
  double b(const Measure1D& m, double t) const;
  double center(const Measure1D& m) const;

  /// Checks that D_t stays a proper subset of the support for t < 1.
  /// Throws ValidationError naming the first offending t.
  void validate(const Measure1D& m) const;

 private:
  Mode mode_ = Mode::quantile;
  std::optional<Expr> a_, b_;
};

/// First t with x in D_t.
double tau(const TrimmedFamily1D& fam, const Measure1D& m, double x);
/// μ(ℝ \ D_t). Throws DomainError unless 0 <= t < 1.
double tail_mass(const TrimmedFamily1D& fam, const Measure1D& m, double t);
/// Conditional mean of g outside D_t. Throws DegenerateError when the tail
/// mass is at most 1e-14.
double trimmed_mean(const TrimmedFamily1D& fam, const Measure1D& m,
                    const RealFunction& g, double t,
                    const QuadratureSpec& spec = {});
/// The other endpoint of D_{τ(x)}.
double conjugate(const TrimmedFamily1D& fam, const Measure1D& m, double x);
/// min(F(x), 1 - F(x)).
double fhat(const Measure1D& m, double x);

/// Integral of g(q(v)) over v in [v1, v2] ⊂ [0, 1], with v the lower
/// probability coordinate; the part above 1/2 is done in upper coordinates.
IntegrationResult integrate_probability_range(const Measure1D& m, const RealFunction& g,
                                              double v1, double v2,
                                              const QuadratureSpec& spec);

/// G as a function of t, tabulated once and interpolated.
///
/// Nodes are placed in xi = -log(1 - t): 65 uniform in t on [0, 0.9], 64
/// uniform in xi beyond that (down to tail mass 1e-30 for the quantile
/// family, 1 - t = 1e-15 for custom ones), then cells are bisected where G
/// changes most until `max_nodes` is reached. Interpolation is monotone
/// cubic (PCHIP) in xi. Beyond the last node a growing G is continued
/// geometrically in xi from the last cell, otherwise held constant.
class TrimmedMeanCurve {
 public:
  struct Node {
    double u;     // 1 - t
    double xi;    // -log(u)
    double a, b;  // endpoints of D_t
    double pl, pu;  // μ(-∞, a) and μ(b, ∞)
    double lower, upper;  // ∫ g over those two pieces
    double G;
  };

  static TrimmedMeanCurve build(const TrimmedFamily1D& fam, const Measure1D& m,
                                const RealFunction& g, const QuadratureSpec& spec = {},
                                std::size_t max_nodes = 512);

  double at(double t) const { return at_complement(1.0 - t); }
  /// G at t = 1 - u; precise for small u.
  double at_complement(double u) const;

  const std::vector<Node>& nodes() const { return nodes_; }
  double quadrature_error() const { return error_; }
  double min_value() const;

 private:
  std::vector<Node> nodes_;  // increasing xi
  std::vector<double> slopes_;
  double error_ = 0.0;
};

/// Balls B(center, t/(1-t)) in ℝ^d.
struct BallTrimmingRd {
  std::vector<double> center;

  static BallTrimmingRd from_json(const nlohmann::json& spec, std::size_t dim);
  nlohmann::json to_json() const;
  static double radius(double t) { return t / (1.0 - t); }
};

double tau_rd(const BallTrimmingRd& fam, std::span<const double> x);

/// Monte Carlo conditional mean of g outside the ball D_t. Throws
/// DegenerateError when fewer than 100 samples fall outside.
Estimate trimmed_mean_rd(const BallTrimmingRd& fam, const ProductMeasure& pm,
                         const Expr& g, double t, std::uint64_t nsamples,
                         std::uint64_t seed);

/// Numerical checks of the quantile-family identities on one measure.
///
/// The two integrals over D_t are done in x with the density, independently
/// of the probability-coordinate machinery used elsewhere.
struct IdentityCheck {
  struct Level {
    double t;
    double log_mass;        // ∫_{D_t} dμ / μ_τ
    double log_mass_exact;  // -log μ_t
    double power;           // ∫_{D_t} dμ / μ_τ^{3/2}
    double power_exact;     // 2 (μ_t^{-1/2} - 1)
  };
  std::vector<Level> levels;
  double max_identity_error = 0.0;  // over both integrals and all levels
  double max_fhat_error = 0.0;      // |F̂ - μ_τ / 2|
  double max_tau_error = 0.0;       // |τ - |2F - 1||
  double max_involution_error = 0.0;  // |s(s(x)) - x| / (1 + |x|)
  double max_derivative_error = 0.0;  // relative, s' against -p(x)/p(s(x))
  std::size_t points = 0;
};

IdentityCheck identity_checks(const Measure1D& m, std::size_t npoints, std::uint64_t seed,
                              const QuadratureSpec& spec = {});

}  // namespace entrobound
