#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "entrobound/bounds.hpp"
#include "entrobound/errors.hpp"
#include "oracles.hpp"

using namespace entrobound;

namespace {

const TrimmedFamily1D Q = TrimmedFamily1D::quantile();

double gaussian_lsi_value(double lam) { return 0.5 * lam * lam * std::exp(0.5 * lam * lam); }

}  // namespace

TEST(Entropy, Examples) {
  EXPECT_NEAR(entropy(Measure1D::gaussian(), parse("3.7")).value, 0.0, 1e-14);
  EXPECT_NEAR(entropy(Measure1D::gaussian(), parse("exp(x)")).value, gaussian_lsi_value(1.0), 1e-9);
  EXPECT_NEAR(entropy(Measure1D::uniform(), parse("x")).value, -0.25 + 0.5 * std::log(2.0), 1e-10);
  EXPECT_NEAR(entropy(Measure1D::uniform(), parse("x")).value, 0.096574, 1e-6);
}

TEST(Entropy, AgreesWithDirectSimpson) {
  const auto m = Measure1D::uniform(-1, 2);
  const double o = oracle::entropy([](double) { return 1.0 / 3.0; }, [](double x) { return 1 + x * x; }, -1, 2);
  EXPECT_NEAR(entropy(m, parse("1 + x^2")).value, o, 1e-9);
  const auto g = Measure1D::gaussian();
  const double og = oracle::entropy(oracle::phi, [](double x) { return 2 + std::sin(3 * x); }, -12, 12);
  EXPECT_NEAR(entropy(g, parse("2 + sin(3*x)")).value, og, 1e-9);
}

TEST(Entropy, ZeroAndNegativeValues) {
  // 0 log 0 = 0 on half the support
  const auto u = Measure1D::uniform(-1, 1);
  auto half = [](double x) { return x > 0 ? x : 0.0; };
  // E g = 1/4, E g log g = (1/2)∫_0^1 x log x = -1/8
  EXPECT_NEAR(entropy(u, half).value, -0.125 - 0.25 * std::log(0.25), 1e-10);
  EXPECT_THROW(entropy(Measure1D::gaussian(), parse("x")), NegativeFunctionError);
}

TEST(ClassicLsi, Examples) {
  EXPECT_NEAR(classic_lsi_rhs(Measure1D::gaussian(), to_func("2"), 1.0).value, 0.0, 1e-15);
  EXPECT_NEAR(classic_lsi_rhs(Measure1D::uniform(), to_func("x"), 1.0).value, 2.0, 1e-12);
  for (double lam : {0.2, 0.5, 1.0}) {
    const std::string f = "exp(" + std::to_string(lam) + "*x/2)";
    const double rhs = classic_lsi_rhs(Measure1D::gaussian(), to_func(f), 1.0).value;
    const double ent = entropy(Measure1D::gaussian(), parse(f + "^2")).value;
    EXPECT_NEAR(rhs / gaussian_lsi_value(lam), 1.0, 1e-9);
    EXPECT_NEAR(ent / gaussian_lsi_value(lam), 1.0, 1e-9);
  }
}

TEST(TrimmedMeanBound, Examples) {
  const auto u = Measure1D::uniform();
  EXPECT_NEAR(theorem2_bound(Measure1D::gaussian(), Q, [](double) { return 2.0; }).bound, 0.0, 1e-14);
  const auto r = theorem2_bound(u, Q, [](double x) { return x; });
  EXPECT_NEAR(r.bound, 1.0 / 6.0, 1e-9);
  EXPECT_FALSE(r.regularized);
  EXPECT_GE(r.bound, entropy(u, parse("x")).value);
}

TEST(TrimmedMeanBound, QuadraticOnUniformClosedForm) {
  // g = x^2 on [0,1]: G_t at the level of x (distance d = |x - 1/2|) is
  // (1/(1/2 - d)) ∫ over both outer pieces, here done by Simpson.
  const auto u = Measure1D::uniform();
  auto G = [](double x) {
    const double d = std::abs(x - 0.5);
    const double lo = 0.5 - d, hi = 0.5 + d;
    if (lo <= 0.0) return 0.5;  // (g(0) + g(1)) / 2
    return ((lo * lo * lo) / 3 + (1 - hi * hi * hi) / 3) / (2 * lo);
  };
  const double o = oracle::simpson(
      [&](double x) {
        const double g = x * x, Gx = G(x);
        return (g - Gx) * (g - Gx) / Gx;
      },
      0.0, 1.0, 200000);
  EXPECT_NEAR(theorem2_bound(u, Q, [](double x) { return x * x; }).bound, o, 1e-7);
}

TEST(TrimmedMeanBound, CustomFamilyMatchesQuantileWhenIdentical) {
  // For the standard Gaussian the family ±t/(1-t) is a reparametrization of
  // the quantile family, and the bound does not depend on the parametrization.
  const auto g = Measure1D::gaussian();
  const auto cust = TrimmedFamily1D::custom(parse("-t/(1-t)"), parse("t/(1-t)"));
  auto e = [](double x) { return std::exp(x); };
  EXPECT_NEAR(theorem2_bound(g, cust, e).bound, theorem2_bound(g, Q, e).bound, 1e-7);
}

TEST(TrimmedMeanBound, RegularizationLimit) {
  // Below 0 the function vanishes identically; G does not.
  const auto u = Measure1D::uniform(-1, 1);
  auto g = [](double x) { return x > 0 ? x : 0.0; };
  const auto r = theorem2_bound(u, Q, g);
  EXPECT_TRUE(std::isfinite(r.bound));
  EXPECT_GE(r.bound, entropy(u, g).value);
  const auto curve = TrimmedMeanCurve::build(Q, u, g);
  const double direct = theorem2_integral(u, Q, g, curve, 0.0).value;
  EXPECT_NEAR(r.bound, direct, 1e-6 * (1 + direct));
}

TEST(TrimmedMeanBound, ProductMeasureMonteCarlo) {
  const auto g = Measure1D::gaussian();
  ProductMeasure pm1({g});
  BallTrimmingRd b1{{0.0}};
  const auto c = theorem2_bound_rd(pm1, b1, parse("2"), 20000, 1);
  EXPECT_EQ(c.bound.value, 0.0);
  EXPECT_EQ(c.bound.sigma, 0.0);
  // d = 1 ball family is the symmetric custom family ±t/(1-t)
  const auto cust = TrimmedFamily1D::custom(parse("-t/(1-t)"), parse("t/(1-t)"));
  const double q = theorem2_bound(g, cust, [](double x) { return std::exp(x); }).bound;
  const auto mc = theorem2_bound_rd(pm1, b1, parse("exp(x)"), 200000, 2);
  EXPECT_NEAR(mc.bound.value, q, 3 * mc.bound.sigma);

  ProductMeasure pm2({g, g});
  BallTrimmingRd b2{{0.0, 0.0}};
  const auto r = theorem2_bound_rd(pm2, b2, parse("1 + x1^2 + x2^2"), 100000, 3);
  EXPECT_LE(r.entropy.value, r.bound.value + 3 * std::hypot(r.entropy.sigma, r.bound.sigma));
}

TEST(Weights, Examples) {
  const auto u = Measure1D::uniform();
  const auto wu = weights(u);
  EXPECT_NEAR(wu.W(0.5), 0.0, 1e-15);
  EXPECT_NEAR(weights(Measure1D::gaussian()).W(0.0), 0.0, 1e-15);
  EXPECT_NEAR(wu.W(0.25), 0.0625 * std::log(2.0), 1e-15);
  EXPECT_NEAR(wu.W(0.25), 0.043322, 1e-6);
  EXPECT_NEAR(weights(Measure1D::gaussian()).K(0.0), 4 * std::numbers::pi, 1e-9);
  EXPECT_NEAR(wu.K(0.5), 2.0, 1e-15);
}

TEST(Weights, AlgebraicConsistency) {
  for (const auto& m : {Measure1D::gaussian(), Measure1D::exponential(2), Measure1D::logistic()}) {
    const auto w = weights(m);
    for (double v : {0.01, 0.1, 0.3, 0.5, 0.7, 0.95, 0.999}) {
      const double x = m.quantile(v);
      const double F = fhat(m, x), p = m.density(x);
      const double V = F / p;
      const auto k = w.at(x);
      EXPECT_NEAR(k.V, V, 1e-14 * V);
      EXPECT_NEAR(k.U, 4 * V * V, 1e-13 * V * V);
      EXPECT_NEAR(k.K - 8 * V * V * std::log(1 / (2 * F)), 8 * V * V, 1e-10 * (1 + k.K));
      EXPECT_NEAR(k.W, V * V * std::log(1 / (2 * F)), 1e-13 * (1 + k.W));
    }
  }
  EXPECT_THROW(weights(Measure1D::grid({0, 1, 2}, {1, 0, 1})).at(1.0), ZeroDensityError);
}

TEST(SymmetricBound, Examples) {
  const auto u = Measure1D::uniform();
  EXPECT_NEAR(prop1_bound(u, Q, to_func("3")).value, 0.0, 1e-15);
  const double b = prop1_bound(u, Q, to_func("x*(1-x)")).value;
  EXPECT_GE(b, entropy(u, parse("(x*(1-x))^2")).value);
  // 4 ∫ W f'^2: W = m^2 log(1/(2m)), m = min(x, 1-x), f' = 1 - 2x
  const double o = 2 * oracle::simpson(
                           [](double x) {
                             if (x <= 0) return 0.0;
                             return 4 * x * x * std::log(1 / (2 * x)) * (1 - 2 * x) * (1 - 2 * x);
                           },
                           0.0, 0.5, 200000);
  EXPECT_NEAR(b, o, 1e-9);
  const auto g = Measure1D::gaussian();
  EXPECT_GE(prop1_bound(g, Q, to_func("x^2")).value, entropy(g, parse("x^4")).value);
  EXPECT_THROW(check_symmetric(g, Q, to_func("x")), SymmetryViolationError);
  EXPECT_NO_THROW(check_symmetric(g, Q, to_func("x^2")));
}

TEST(Bernoulli, Examples) {
  EXPECT_DOUBLE_EQ(bernoulli_constant(0.5), 0.5);
  EXPECT_NEAR(bernoulli_constant(0.9), 0.09 * std::log(9.0) / 0.8, 1e-15);
  EXPECT_NEAR(bernoulli_constant(0.9), 0.247188, 1e-6);
  EXPECT_EQ(bernoulli_constant(0.0), 0.0);
  EXPECT_EQ(bernoulli_constant(1.0), 0.0);
  for (double p : {0.01, 0.2, 0.37, 0.4999999, 0.5000001, 0.73}) {
    EXPECT_NEAR(bernoulli_constant(p), bernoulli_constant(1 - p), 1e-15);
    const double q = 1 - p;
    if (std::abs(p - q) > 1e-3) {
      EXPECT_NEAR(bernoulli_constant(p), p * q * std::log(p / q) / (p - q), 1e-14);
    }
  }
  EXPECT_NEAR(bernoulli_constant(0.5 + 1e-9), 0.5, 1e-12);
}

TEST(Symmetrize, Examples) {
  const auto u = Measure1D::uniform();
  const Func1D s = symmetrize(u, Q, to_func("x"));
  EXPECT_NEAR(s.value(0.3), std::sqrt(0.29), 1e-14);
  EXPECT_NEAR(s.value(0.3), 0.538516, 1e-6);
  const Func1D sym = symmetrize(Measure1D::gaussian(), Q, to_func("-(1 + x^2)"));
  for (double x : {-2.0, -0.3, 0.0, 1.1}) EXPECT_NEAR(sym.value(x), 1 + x * x, 1e-12);
  // derivative against finite differences
  const Func1D e = symmetrize(Measure1D::exponential(), Q, to_func("1 + x"));
  for (double x : {0.1, 0.5, 2.0}) {
    const double h = 1e-6;
    EXPECT_NEAR(e.derivative(x), (e.value(x + h) - e.value(x - h)) / (2 * h), 1e-6);
  }
  EXPECT_THROW(symmetrize(u, TrimmedFamily1D::custom(parse("0.5-t/2"), parse("0.5+t/2")), to_func("x")),
               UnsupportedError);
}

TEST(SplitBound, Examples) {
  const auto u = Measure1D::uniform();
  const auto c = eq145_bound(u, Q, to_func("2"));
  EXPECT_NEAR(c.bound, 0.0, 1e-15);
  const auto r = eq145_bound(u, Q, to_func("x"));
  EXPECT_GE(r.bound, entropy(u, parse("x^2")).value);
  EXPECT_NEAR(r.bound, r.w_term + r.u_term, 1e-15);
  // U-term: 2 ∫ 4 m^2 dx over [0,1] with m = min(x, 1-x)
  EXPECT_NEAR(r.u_term, 2 * 4 * 2 * (0.125 / 3), 1e-10);
  // symmetric positive f: f̂ = f, so the W-term equals the symmetric bound
  const auto s = eq145_bound(u, Q, to_func("1 + x*(1-x)"));
  EXPECT_NEAR(s.w_term, prop1_bound(u, Q, to_func("1 + x*(1-x)")).value, 1e-8);
  EXPECT_THROW(eq145_bound(u, TrimmedFamily1D::custom(parse("0.5-t/2"), parse("0.5+t/2")), to_func("x")),
               UnsupportedError);
}

TEST(WeightedLsi, Examples) {
  const auto g = Measure1D::gaussian();
  const BoundReport c = theorem3_bound(g, to_func("1.5"));
  EXPECT_EQ(c.entropy, 0.0);
  EXPECT_EQ(c.bound, 0.0);
  EXPECT_EQ(c.ratio, 1.0);
  const BoundReport r = theorem3_bound(g, to_func("exp(x/2)"));
  EXPECT_NEAR(r.entropy, gaussian_lsi_value(1.0), 1e-9);
  EXPECT_GE(r.slack, 0.0);
  // ∫ K f'^2 dμ with K from erfc and f' = exp(x/2)/2, by Simpson
  const double o = oracle::simpson(
      [](double x) {
        const double F = 0.5 * std::erfc(std::abs(x) / std::numbers::sqrt2);
        const double p = oracle::phi(x);
        const double K = 8 * (F / p) * (F / p) * (std::log(1 / (2 * F)) + 1);
        return K * 0.25 * std::exp(x) * p;
      },
      -30, 30, 400000);
  EXPECT_NEAR(r.bound, o, 1e-7 * o);
  const auto u = Measure1D::uniform();
  const BoundReport ru = theorem3_bound(u, to_func("x"));
  const double ou = 2 * oracle::simpson(
                            [](double x) { return x > 0 ? 8 * x * x * (std::log(1 / (2 * x)) + 1) : 0.0; }, 0.0,
                            0.5, 200000);
  EXPECT_NEAR(ru.bound, ou, 1e-9);
  EXPECT_GE(ru.slack, 0.0);
}

TEST(BoundReport, RatioConventions) {
  BoundReport r;
  r.entropy = 0;
  r.bound = 0;
  r.finish();
  EXPECT_EQ(r.ratio, 1.0);
  r.entropy = 0.5;
  r.bound = 0;
  r.finish();
  EXPECT_TRUE(std::isinf(r.ratio));
  EXPECT_TRUE(r.to_json()["ratio"].is_null());
  r.bound = 2.0;
  r.finish();
  EXPECT_DOUBLE_EQ(r.ratio, 0.25);
  EXPECT_DOUBLE_EQ(r.slack, 1.5);
  r.entropy_sigma = 3;
  r.bound_sigma = 4;
  EXPECT_DOUBLE_EQ(r.sigma_combined(), 5.0);
}

TEST(Digest, Fnv1a) {
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}
