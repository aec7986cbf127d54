#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "entrobound/expr.hpp"
#include "entrobound/measure.hpp"
#include "entrobound/quadrature.hpp"
#include "entrobound/stats.hpp"
#include "entrobound/trimming.hpp"

namespace entrobound {

/// Result of one entropy-versus-bound evaluation.
struct BoundReport {
  std::string method;
  double entropy = 0.0;
  double bound = 0.0;
  double slack = 0.0;  // bound - entropy
  double ratio = 1.0;  // entropy / bound, 1 for 0/0
  double quadrature_error = 0.0;
  // Standard errors for Monte Carlo estimates; zero for quadrature.
  double entropy_sigma = 0.0;
  double bound_sigma = 0.0;
  std::string inputs_digest;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  std::vector<std::string> warnings;

  /// Fills slack and ratio from entropy and bound.
  void finish();
  double sigma_combined() const;
  nlohmann::ordered_json to_json() const;
};

/// Ent g = ∫ g log g dμ - (∫ g dμ) log ∫ g dμ, with 0 log 0 = 0.
///
/// Evaluated as ∫ m φ(g/m) dμ with m = ∫ g dμ and φ(y) = y log y - y + 1,
/// which has a nonnegative integrand and is first-order insensitive to the
/// error in m.
IntegrationResult entropy(const Measure1D& m, const RealFunction& g,
                          const QuadratureSpec& spec = {});
IntegrationResult entropy(const Measure1D& m, const Expr& g,
                          const QuadratureSpec& spec = {});

/// 2c ∫ f'^2 dμ.
IntegrationResult classic_lsi_rhs(const Measure1D& m, const Func1D& f, double c,
                                  const QuadratureSpec& spec = {});

/// ∫ (g - G_τ)^2 / G_τ dμ. When G vanishes where g does not, the value is
/// the limit of the same quantity for g + ε, extrapolated from
/// ε = 1e-3 ... 1e-6.
struct Theorem2Result {
  double bound = 0.0;
  double error = 0.0;
  bool regularized = false;
  std::vector<double> eps_sequence;  // bounds for each ε when regularized
};
Theorem2Result theorem2_bound(const Measure1D& m, const TrimmedFamily1D& fam,
                              const RealFunction& g, const QuadratureSpec& spec = {});
/// Same, reusing a tabulated G and a fixed shift ε >= 0 applied to g.
IntegrationResult theorem2_integral(const Measure1D& m, const TrimmedFamily1D& fam,
                                    const RealFunction& g, const TrimmedMeanCurve& curve,
                                    double eps, const QuadratureSpec& spec = {});

/// Monte Carlo version on a product measure with the ball family.
struct RdBoundEstimate {
  Estimate bound;
  Estimate entropy;
  double t_max = 0.0;        // G is held constant beyond this level
  std::uint64_t curve_samples = 0;
};
/// G is estimated from `nsamples` points of an independent stream, as the
/// mean of g over points with larger τ, and held constant once fewer than
/// 100 points remain.
RdBoundEstimate theorem2_bound_rd(const ProductMeasure& pm, const BallTrimmingRd& fam,
                                  const Expr& g, std::uint64_t nsamples, std::uint64_t seed);

/// Weights of the weighted inequalities for the quantile family.
///
///     V = F̂/p,  W = V^2 log(1/(2F̂)),  U = 4 V^2,  K = 8 V^2 (log(1/(2F̂)) + 1)
struct WeightValues {
  double V, W, U, K;
};
WeightValues weights_from_tail(double fhat, double density);

class WeightProfile {
 public:
  explicit WeightProfile(Measure1D m) : m_(std::move(m)) {}
  WeightValues at(double x) const;
  double V(double x) const { return at(x).V; }
  double W(double x) const { return at(x).W; }
  double U(double x) const { return at(x).U; }
  double K(double x) const { return at(x).K; }
  const Measure1D& measure() const { return m_; }

 private:
  Measure1D m_;
};

WeightProfile weights(const Measure1D& m, const QuadratureSpec& spec = {});

/// Checks |f(a_t) - f(b_t)| <= 1e-8 (1 + |f(a_t)|) on 1000 levels; throws
/// SymmetryViolationError with the worst t otherwise.
void check_symmetric(const Measure1D& m, const TrimmedFamily1D& fam, const Func1D& f);

/// 4 ∫ W f'^2 dμ for f symmetric with respect to the family.
IntegrationResult prop1_bound(const Measure1D& m, const TrimmedFamily1D& fam,
                              const Func1D& f, const QuadratureSpec& spec = {});

/// pq (log p - log q) / (p - q), 1/2 at p = 1/2, 0 at the endpoints.
double bernoulli_constant(double p);

/// x ↦ sqrt((f(x)^2 + f(s(x))^2) / 2) and its derivative.
Func1D symmetrize(const Measure1D& m, const TrimmedFamily1D& fam, const Func1D& f);

/// ∫ (4 W (f̂')^2 + 2 U f'^2) dμ, with the two terms reported separately.
struct Eq145Result {
  double w_term = 0.0;
  double u_term = 0.0;
  double bound = 0.0;
  double error = 0.0;
};
Eq145Result eq145_bound(const Measure1D& m, const TrimmedFamily1D& fam, const Func1D& f,
                        const QuadratureSpec& spec = {});

/// Ent f^2 against ∫ K f'^2 dμ.
BoundReport theorem3_bound(const Measure1D& m, const Func1D& f, const QuadratureSpec& spec = {});

/// 64-bit FNV-1a of a string, as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace entrobound
