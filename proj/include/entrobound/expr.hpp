#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace entrobound {

/// Expression trees for test functions.
///
/// Grammar (whitespace-insensitive):
///
///     expr    := term (('+' | '-') term)*
///     term    := unary (('*' | '/') unary)*
///     unary   := ('-' | '+') unary | power
///     power   := primary ('^' integer)?
///     primary := number | 'pi' | variable | call | '(' expr ')'
///     call    := name '(' expr ((',' | ';') expr)* ')'
///
/// Variables are `x`, `t` (both coordinate 0) and `x1`..`x99` (coordinate
/// k-1). Functions: exp, log, sin, cos, sqrt, bump(u; a, b) and its
/// derivatives dbump(u; a, b, n). Bump bounds must be constants with a < b.
///
///     bump(u; a, b) = exp(-1 / (1 - w^2)),  w = (2u - a - b) / (b - a),
///
/// for |w| < 1 and 0 otherwise, so its maximum is exp(-1) at the midpoint.
class Expr {
 public:
  enum class Op { constant, variable, add, sub, mul, div, pow, neg, exp, log, sin, cos, sqrt, bump, dbump };
  struct Node;

  Expr();  // the constant 0
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  static Expr constant(double value);
  static Expr variable(int index, std::string name = {});

  double eval(std::span<const double> point) const;
  double eval(double x) const;

  /// Highest coordinate index used, or -1 for a constant expression.
  int max_variable() const;
  bool is_constant() const { return max_variable() < 0; }
  /// True when some bump/dbump appears anywhere in the tree.
  bool has_bump() const;

  const Node& node() const { return *node_; }
  const std::shared_ptr<const Node>& node_ptr() const { return node_; }

 private:
  std::shared_ptr<const Node> node_;
};

struct Expr::Node {
  Op op = Op::constant;
  double value = 0.0;       // constant
  int index = 0;            // variable coordinate
  std::string name;         // variable spelling, for printing
  int exponent = 0;         // pow
  int order = 0;            // dbump derivative order
  double lo = 0.0, hi = 0.0;  // bump bounds
  std::shared_ptr<const Node> lhs, rhs;
};

Expr parse(std::string_view src);
std::string print(const Expr& e);
bool structurally_equal(const Expr& a, const Expr& b);

/// d e / d(coordinate index).
Expr deriv(const Expr& e, int index);
/// d e / d var, where var is `x`, `t` or `xk`.
Expr deriv(const Expr& e, std::string_view var);

/// Coordinate index for a variable spelling; -1 if not a variable name.
int variable_index(std::string_view name);

// Smart constructors; they fold constants and trivial identities.
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow(const Expr& base, int exponent);
Expr apply(Expr::Op fn, const Expr& arg);
Expr bump(const Expr& arg, double lo, double hi, int order = 0);

/// True when e vanishes outside a bounded range of coordinate `index`,
/// judged from the tree shape (a product with a bump factor, etc.).
bool compactly_supported_in(const Expr& e, int index);

/// A scalar function with its derivative, the form the bound evaluators use.
struct Func1D {
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  std::string label;
};

/// Wraps a one-variable expression and its symbolic derivative.
Func1D to_func(const Expr& e, std::string label = {});
Func1D to_func(std::string_view src);

}  // namespace entrobound
