#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

#include "entrobound/bounds.hpp"
#include "random_inputs.hpp"

using namespace entrobound;

namespace {

const TrimmedFamily1D Q = TrimmedFamily1D::quantile();

double tol(double bound) { return 1e-8 * (1.0 + std::abs(bound)); }

// f = h(τ(x)) for a polynomial h; symmetric for the quantile family.
Func1D symmetric_function(const Measure1D& m, std::vector<double> h) {
  const double med = m.median();
  Func1D f;
  f.value = [m, h](double x) {
    const double t = tau(Q, m, x);
    double v = 0.0;
    for (std::size_t k = h.size(); k-- > 0;) v = v * t + h[k];
    return v;
  };
  f.derivative = [m, h, med](double x) {
    const double t = tau(Q, m, x);
    double d = 0.0;
    for (std::size_t k = h.size(); k-- > 1;) d = d * t + static_cast<double>(k) * h[k];
    const double dt = x > med ? 2 * m.density(x) : (x < med ? -2 * m.density(x) : 0.0);
    return d * dt;
  };
  return f;
}

}  // namespace

TEST(RandomSuites, TrimmedMeanBoundHolds) {
  randin::Generator gen(101);
  const auto start = std::chrono::steady_clock::now();
  int count = 0;
  for (int i = 0; i < 120; ++i) {
    const auto mc = gen.measure(i);
    const std::string g = gen.nonnegative(mc);
    const RealFunction gf = to_func(g).value;
    const double ent = entropy(mc.m, gf).value;
    const double bound = theorem2_bound(mc.m, Q, gf).bound;
    EXPECT_LE(ent, bound + tol(bound)) << mc.m.to_json().dump() << " g=" << g;
    EXPECT_GE(ent, -1e-10);
    ++count;
  }
  EXPECT_GE(count, 100);
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 60.0);
}

TEST(RandomSuites, WeightedLsiHolds) {
  randin::Generator gen(202);
  for (int i = 0; i < 120; ++i) {
    const auto mc = gen.measure(i);
    const std::string f = gen.function(mc);
    const BoundReport r = theorem3_bound(mc.m, to_func(f));
    EXPECT_LE(r.entropy, r.bound + tol(r.bound)) << mc.m.to_json().dump() << " f=" << f;
  }
}

TEST(RandomSuites, SymmetricBoundHoldsOnSymmetricFunctions) {
  randin::Generator gen(303);
  for (int i = 0; i < 60; ++i) {
    const auto mc = gen.measure(i);
    const Func1D f = symmetric_function(mc.m, gen.polynomial(1 + gen.pick(4)));
    ASSERT_NO_THROW(check_symmetric(mc.m, Q, f));
    const auto g = [&f](double x) {
      const double v = f.value(x);
      return v * v;
    };
    const double ent = entropy(mc.m, g).value;
    const double bound = prop1_bound(mc.m, Q, f).value;
    EXPECT_LE(ent, bound + tol(bound)) << mc.m.to_json().dump();
  }
}

TEST(RandomSuites, SplitBoundHolds) {
  randin::Generator gen(404);
  for (int i = 0; i < 110; ++i) {
    const auto mc = gen.measure(i);
    const std::string f = gen.function(mc);
    const Func1D ff = to_func(f);
    const double ent = entropy(mc.m, parse("(" + f + ")^2")).value;
    const Eq145Result r = eq145_bound(mc.m, Q, ff);
    EXPECT_LE(ent, r.bound + tol(r.bound)) << mc.m.to_json().dump() << " f=" << f;
  }
}

TEST(RandomSuites, EntropyScaleLaw) {
  randin::Generator gen(505);
  for (int i = 0; i < 30; ++i) {
    const auto mc = gen.measure(i);
    const std::string g = gen.nonnegative(mc);
    const double c = gen.uniform(0.1, 10);
    const double e1 = entropy(mc.m, parse(g)).value;
    const double ec = entropy(mc.m, parse(std::to_string(c) + " * (" + g + ")")).value;
    EXPECT_NEAR(ec, std::stod(std::to_string(c)) * e1, 1e-8 * std::max(1.0, std::abs(ec))) << g;
  }
}

TEST(RandomSuites, SymmetrizationPreservesMass) {
  randin::Generator gen(606);
  for (int i = 0; i < 30; ++i) {
    const auto mc = gen.measure(i);
    const std::string f = gen.function(mc);
    const Func1D ff = to_func(f);
    const Func1D s = symmetrize(mc.m, Q, ff);
    const double a = integrate(mc.m, [&](double x) { return ff.value(x) * ff.value(x); }).value;
    const double b = integrate(mc.m, [&](double x) { return s.value(x) * s.value(x); }).value;
    EXPECT_NEAR(a, b, 1e-8 * std::max(1.0, a)) << f;
  }
}
