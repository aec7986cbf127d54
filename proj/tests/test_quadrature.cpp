#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "entrobound/errors.hpp"
#include "entrobound/quadrature.hpp"

using namespace entrobound;

TEST(Quadrature, PolynomialIsExact) {
  auto r = adaptive_integrate([](double x) { return 3 * x * x - 2 * x + 1; }, -1.0, 2.0, 1e-12, 1e-14, 30);
  // x^3 - x^2 + x on [-1, 2]
  EXPECT_NEAR(r.value, (8.0 - 4.0 + 2.0) - (-1.0 - 1.0 - 1.0), 1e-12);
}

TEST(Quadrature, SineOverHalfPeriod) {
  auto r = adaptive_integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi, 1e-12, 1e-14, 30);
  EXPECT_NEAR(r.value, 2.0, 1e-12);
  EXPECT_LT(r.error, 1e-10);
}

TEST(Quadrature, IntegrableEndpointSingularity) {
  auto r = adaptive_integrate([](double x) { return std::log(x); }, 0.0, 1.0, 1e-10, 1e-12, 60);
  EXPECT_NEAR(r.value, -1.0, 1e-9);
}

TEST(Quadrature, BreakpointsHandleKinks) {
  std::vector<double> br{0.3};
  auto r = adaptive_integrate([](double x) { return std::abs(x - 0.3); }, 0.0, 1.0, br, 1e-12, 1e-14, 30);
  EXPECT_NEAR(r.value, 0.5 * 0.09 + 0.5 * 0.49, 1e-13);
}

TEST(Quadrature, LogScale) {
  auto r = log_scale_integrate([](double s) { return 1.0 / s; }, 1e-12, 1.0, 1e-12, 1e-14, 40);
  EXPECT_NEAR(r.value, 12.0 * std::log(10.0), 1e-9);
  auto z = log_scale_integrate([](double s) { return std::sqrt(s); }, 0.0, 1.0, 1e-12, 1e-14, 40);
  EXPECT_NEAR(z.value, 2.0 / 3.0, 1e-10);
}

TEST(Quadrature, NonFiniteIntegrandThrows) {
  EXPECT_THROW(adaptive_integrate([](double) { return std::nan(""); }, 0.0, 1.0, 1e-10, 1e-12, 20), NonFiniteError);
}

TEST(Quadrature, DivergentIntegralThrows) {
  EXPECT_THROW(adaptive_integrate([](double x) { return 1.0 / (x * x); }, 1e-300, 1.0, 1e-10, 1e-12, 8),
               ConvergenceError);
}

TEST(Quadrature, SpecValidation) {
  QuadratureSpec q;
  EXPECT_NO_THROW(q.validate());
  q.rel_tol = -1;
  EXPECT_ANY_THROW(q.validate());
}

TEST(Quadrature, Linearity) {
  for (int k = 1; k <= 10; ++k) {
    const double a = 0.3 * k, b = 1.0 - 0.17 * k;
    auto h1 = [k](double x) { return std::exp(-x * k * 0.1) * std::cos(x); };
    auto h2 = [k](double x) { return std::pow(x, k % 4) + 1.0; };
    auto lhs = adaptive_integrate([&](double x) { return a * h1(x) + b * h2(x); }, -2.0, 3.0, 1e-12, 1e-14, 30);
    auto r1 = adaptive_integrate(h1, -2.0, 3.0, 1e-12, 1e-14, 30);
    auto r2 = adaptive_integrate(h2, -2.0, 3.0, 1e-12, 1e-14, 30);
    EXPECT_NEAR(lhs.value, a * r1.value + b * r2.value, 1e-9);
  }
}
