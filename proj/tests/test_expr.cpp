#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "entrobound/errors.hpp"
#include "entrobound/expr.hpp"
#include "entrobound/rng.hpp"

using namespace entrobound;

namespace {

// Random well-behaved expression text on [-1, 1].
class ExprGen {
 public:
  explicit ExprGen(std::uint64_t seed) : rs_(seed, streams::main, 0) {}

  std::string make(int depth) {
    if (depth == 0 || coin(0.25)) return leaf();
    switch (pick(9)) {
      case 0: return "(" + make(depth - 1) + " + " + make(depth - 1) + ")";
      case 1: return "(" + make(depth - 1) + " - " + make(depth - 1) + ")";
      case 2: return "(" + make(depth - 1) + " * " + make(depth - 1) + ")";
      case 3: return "(" + make(depth - 1) + ") / (1 + (" + make(depth - 1) + ")^2)";
      case 4: return "exp(" + num(0.5) + " * " + make(depth - 1) + ")";
      case 5: return "sin(" + make(depth - 1) + ")";
      case 6: return "cos(" + make(depth - 1) + ")";
      case 7: return "(" + make(depth - 1) + ")^" + std::to_string(pick(4));
      default: return "log(2 + sin(" + make(depth - 1) + "))";
    }
  }

 private:
  std::string leaf() { return coin(0.6) ? "x" : num(2.0); }
  std::string num(double scale) {
    const double v = (rs_.uniform() * 2 - 1) * scale;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return v < 0 ? "(" + std::string(buf) + ")" : std::string(buf);
  }
  bool coin(double p) { return rs_.uniform() < p; }
  int pick(int n) { return static_cast<int>(rs_.uniform() * n); }
  RandomStream rs_;
};

}  // namespace

TEST(Expr, ParseExamples) {
  EXPECT_DOUBLE_EQ(parse("x^2").eval(3.0), 9.0);
  EXPECT_DOUBLE_EQ(parse("exp(0.5*x)").eval(0.0), 1.0);
  EXPECT_NEAR(parse("bump(x; -1, 1)").eval(0.0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(parse("pi").eval(0.0), 3.141592653589793, 0);
  EXPECT_DOUBLE_EQ(parse("-x^2").eval(3.0), -9.0);
  EXPECT_DOUBLE_EQ(parse("2^-1").eval(0.0), 0.5);
}

TEST(Expr, EvalExamples) {
  EXPECT_EQ(parse("x*0").eval(123.0), 0.0);
  EXPECT_NEAR(parse("sin(x)^2 + cos(x)^2").eval(0.7), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(parse("x^3 - 2*x").eval(2.0), 4.0);
  const double p[3] = {1.0, 2.0, 3.0};
  EXPECT_DOUBLE_EQ(parse("x1 + 10*x2 + 100*x3").eval(p), 321.0);
}

TEST(Expr, DerivExamples) {
  EXPECT_DOUBLE_EQ(deriv(parse("x^2"), "x").eval(3.0), 6.0);
  EXPECT_DOUBLE_EQ(deriv(parse("exp(0.5*x)"), "x").eval(0.0), 0.5);
  const Expr db = deriv(parse("bump(x;-1,1)"), "x");
  EXPECT_EQ(db.eval(1.0), 0.0);
  EXPECT_EQ(db.eval(-1.0), 0.0);
  EXPECT_EQ(deriv(parse("x1*x2"), "x2").eval(std::vector<double>{5.0, 7.0}), 5.0);
}

TEST(Expr, ParseErrorsCarryPosition) {
  try {
    parse("exp(");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 4u);
  }
  try {
    parse("x + * 2");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 4u);
  }
  EXPECT_THROW(parse("x^0.5"), ParseError);
  EXPECT_THROW(parse("foo(x)"), ParseError);
  EXPECT_THROW(parse("exp(x, 2)"), ArityError);
  EXPECT_THROW(parse("bump(x; 1)"), ArityError);
}

TEST(Expr, EvalErrors) {
  EXPECT_THROW(parse("log(x)").eval(-1.0), NonFiniteError);
  EXPECT_THROW(parse("1/x").eval(0.0), NonFiniteError);
  EXPECT_THROW(parse("x1 + x3").eval(std::vector<double>{1.0, 2.0}), DimensionError);
  EXPECT_THROW(to_func(parse("x1 + x2")), DimensionError);
}

TEST(Expr, PrintParseRoundTrip) {
  ExprGen gen(11);
  for (int i = 0; i < 200; ++i) {
    const Expr e = parse(gen.make(4));
    const Expr back = parse(print(e));
    EXPECT_TRUE(structurally_equal(e, back)) << print(e);
    for (double x : {-0.9, -0.3, 0.2, 0.8}) EXPECT_EQ(e.eval(x), back.eval(x)) << print(e);
  }
  const Expr b = parse("dbump(x; -1, 2, 3) + bump(2*x; 0, 4)");
  EXPECT_TRUE(structurally_equal(b, parse(print(b))));
}

TEST(Expr, DerivativeMatchesFiniteDifference) {
  ExprGen gen(3);
  RandomStream rs(4, streams::main, 0);
  int checked = 0;
  for (int i = 0; i < 100; ++i) {
    const Expr e = parse(gen.make(3));
    const Expr d = deriv(e, "x");
    const double x = rs.uniform() * 2 - 1;
    const double h = 1e-5 * (1.0 + std::abs(x));
    const double fd = (e.eval(x + h) - e.eval(x - h)) / (2 * h);
    const double dv = d.eval(x);
    EXPECT_LE(std::abs(dv - fd), 1e-5 * (1.0 + std::abs(dv))) << print(e) << " at " << x;
    ++checked;
  }
  EXPECT_EQ(checked, 100);
}

TEST(Expr, BumpRangeAndSupport) {
  const Expr b = parse("bump(x; -1.5, 2.5)");
  RandomStream rs(8, streams::main, 0);
  for (int i = 0; i < 1000; ++i) {
    const double x = rs.uniform() * 8 - 4;
    const double v = b.eval(x);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, std::exp(-1.0) + 1e-15);
    if (x <= -1.5 || x >= 2.5) EXPECT_EQ(v, 0.0);
    else EXPECT_GT(v, 0.0);
  }
  EXPECT_NEAR(b.eval(0.5), std::exp(-1.0), 1e-15);
}

TEST(Expr, HigherBumpDerivatives) {
  // dbump(u; a, b, n) is the n-th derivative of bump(u; a, b)
  for (int n = 1; n <= 4; ++n) {
    const Expr lower = parse("dbump(x; 0, 4, " + std::to_string(n - 1) + ")");
    const Expr upper = parse("dbump(x; 0, 4, " + std::to_string(n) + ")");
    for (double x : {0.3, 1.1, 2.0, 3.3}) {
      const double h = 1e-5;
      const double fd = (lower.eval(x + h) - lower.eval(x - h)) / (2 * h);
      EXPECT_NEAR(upper.eval(x), fd, 1e-6 * (1.0 + std::abs(fd)));
    }
  }
  EXPECT_NEAR(parse("dbump(x; 0, 4, 0)").eval(1.7), parse("bump(x; 0, 4)").eval(1.7), 1e-16);
}

TEST(Expr, ConstantFolding) {
  EXPECT_TRUE(parse("x*0").is_constant());
  EXPECT_TRUE(structurally_equal(parse("0 + x*1"), parse("x")));
  EXPECT_TRUE(deriv(parse("3*x^2 + 7"), "x").max_variable() == 0);
  EXPECT_TRUE(deriv(parse("5"), "x").is_constant());
}

TEST(Expr, CompactSupport) {
  EXPECT_TRUE(compactly_supported_in(parse("bump(x1; 0, 4)"), 0));
  EXPECT_TRUE(compactly_supported_in(parse("3*bump(2*x1; 0, 4)*exp(x1)"), 0));
  EXPECT_FALSE(compactly_supported_in(parse("exp(-x1)"), 0));
  EXPECT_FALSE(compactly_supported_in(parse("bump(x1; 0, 4) + x1"), 0));
}

TEST(Expr, Func1DPairsValueAndDerivative) {
  const Func1D f = to_func("sin(x)*x");
  EXPECT_NEAR(f.value(0.4), std::sin(0.4) * 0.4, 1e-15);
  EXPECT_NEAR(f.derivative(0.4), std::cos(0.4) * 0.4 + std::sin(0.4), 1e-15);
}
