#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <nlohmann/json.hpp>

#include "entrobound/bounds.hpp"
#include "entrobound/expr.hpp"
#include "entrobound/measure.hpp"
#include "entrobound/stats.hpp"
#include "entrobound/trimming.hpp"

namespace entrobound {

using Rational = boost::multiprecision::cpp_rational;

/// One branch of a step: with probability p the value becomes M * mult or
/// M + add.
struct Branch {
  enum class Kind { mult, add };
  Rational p;
  Kind kind = Kind::mult;
  Rational value;
};

/// A discrete-time martingale on a finite tree. The same branch
/// distribution is applied at every node of a step.
class MartingaleModel {
 public:
  /// Validates probabilities (nonnegative, summing to 1) and the zero mean
  /// increment exactly in rational arithmetic.
  MartingaleModel(Rational initial, std::vector<std::vector<Branch>> steps,
                  std::vector<double> time_grid = {});

  /// {"initial": 1, "steps": [[{"p": 0.5, "mult": 1.5}, ...], ...],
  ///  "time_grid": [...]}. Numbers may also be strings such as "1/3";
  /// decimal numbers are read as the exact decimal they print as.
  static MartingaleModel from_json(const nlohmann::json& spec);
  nlohmann::json to_json() const;

  const Rational& initial() const { return initial_; }
  const std::vector<std::vector<Branch>>& steps() const { return steps_; }
  const std::vector<double>& time_grid() const { return time_grid_; }
  /// Product of the branch counts.
  double leaf_count() const;

 private:
  Rational initial_;
  std::vector<std::vector<Branch>> steps_;
  std::vector<double> time_grid_;
};

Rational parse_rational(const nlohmann::json& v);

template <class Real>
struct Theorem1Exact {
  Real entropy;
  Real bound;
};

/// Exact traversal of the tree in the given floating type. Throws
/// ValidationError above 10^6 leaves and NegativeValueError if a reachable
/// value is negative.
template <class Real>
Theorem1Exact<Real> theorem1_enumerate(const MartingaleModel& model);

extern template Theorem1Exact<double> theorem1_enumerate<double>(const MartingaleModel&);
extern template Theorem1Exact<long double> theorem1_enumerate<long double>(const MartingaleModel&);

/// Quad-precision variant, returned as double pair after rounding.
Theorem1Exact<double> theorem1_enumerate_quad(const MartingaleModel& model);

/// Running estimate after n samples, for convergence plots.
struct ConvergencePoint {
  std::uint64_t n;
  Estimate entropy;
  Estimate bound;
};

struct Theorem1Mc {
  Estimate entropy;
  Estimate bound;
  std::vector<ConvergencePoint> convergence;
};

/// Simulates paths; the bound estimator is the per-path sum of conditional
/// variance over the pre-step value.
Theorem1Mc theorem1_mc(const MartingaleModel& model, std::uint64_t nsamples, std::uint64_t seed);

/// ξ = F(x1, ..., xn) of Brownian values at the given times or of the
/// first n Poisson jump times.
struct CylinderFunctional {
  enum class Mode { brownian, poisson };
  Mode mode = Mode::brownian;
  std::vector<double> times;  // brownian only
  Expr F;
  std::size_t arity = 1;

  static CylinderFunctional from_json(const nlohmann::json& spec);
  nlohmann::json to_json() const;
};

/// Estimates Ent ξ^2 and 2 E‖Dξ‖^2 with ‖Dξ‖^2 = Σ_k (Σ_{i>=k} ∂_i F)^2 Δt_k.
BoundReport brownian_cylinder_check(const CylinderFunctional& cf, std::uint64_t nsamples,
                                    std::uint64_t seed);

/// Estimates Ent ξ^2 and (4/λ) E‖Dξ‖^2 with
/// ‖Dξ‖^2 = Σ_k (Σ_{j>=k} ∂_j F)^2 (τ_k - τ_{k-1}).
/// Throws SupportError unless every ∂_k F vanishes outside a bounded range of
/// its own argument.
BoundReport poisson_functional_check(const CylinderFunctional& cf, double rate,
                                     std::uint64_t nsamples, std::uint64_t seed);

/// Monte Carlo mean of (g - G_τ)^2 / G_τ over x ~ μ using the tabulated G.
/// When the smallest sampled g is below 1e-6, g + 1e-6 is used instead.
struct TrimmingMc {
  Estimate estimate;
  double eps = 0.0;
};
TrimmingMc trimming_martingale_mc(const Measure1D& m, const TrimmedFamily1D& fam, const RealFunction& g,
                                  const TrimmedMeanCurve& curve, std::uint64_t nsamples,
                                  std::uint64_t seed);
TrimmingMc trimming_martingale_mc(const Measure1D& m, const TrimmedFamily1D& fam, const RealFunction& g,
                                  std::uint64_t nsamples, std::uint64_t seed,
                                  const QuadratureSpec& spec = {});

}  // namespace entrobound
