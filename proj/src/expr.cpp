#include "entrobound/expr.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <vector>

#include "entrobound/errors.hpp"

namespace entrobound {

using Op = Expr::Op;
using NodePtr = std::shared_ptr<const Expr::Node>;

namespace {

NodePtr make_node(Expr::Node n) { return std::make_shared<const Expr::Node>(std::move(n)); }

Expr wrap(Expr::Node n) { return Expr(make_node(std::move(n))); }

Expr unary_node(Op op, const Expr& a) {
  Expr::Node n;
  n.op = op;
  n.lhs = a.node_ptr();
  return wrap(std::move(n));
}

Expr binary_node(Op op, const Expr& a, const Expr& b) {
  Expr::Node n;
  n.op = op;
  n.lhs = a.node_ptr();
  n.rhs = b.node_ptr();
  return wrap(std::move(n));
}

bool is_const(const Expr& e) { return e.node().op == Op::constant; }
bool is_const(const Expr& e, double v) { return is_const(e) && e.node().value == v; }

// Coefficients of P_n in d^n/dw^n exp(-1/(1-w^2)) = exp(-1/(1-w^2)) P_n(w) / (1-w^2)^(2n).
std::vector<double> bump_poly(int n) {
  std::vector<double> p{1.0};
  for (int k = 0; k < n; ++k) {
    std::vector<double> next(p.size() + 3, 0.0);
    // -2w P
    for (std::size_t i = 0; i < p.size(); ++i) next[i + 1] += -2.0 * p[i];
    // (1 - 2w^2 + w^4) P'
    for (std::size_t i = 1; i < p.size(); ++i) {
      const double d = static_cast<double>(i) * p[i];
      next[i - 1] += d;
      next[i + 1] += -2.0 * d;
      next[i + 3] += d;
    }
    // 4k w (1 - w^2) P
    for (std::size_t i = 0; i < p.size(); ++i) {
      next[i + 1] += 4.0 * k * p[i];
      next[i + 3] += -4.0 * k * p[i];
    }
    while (next.size() > 1 && next.back() == 0.0) next.pop_back();
    p = std::move(next);
  }
  return p;
}

const std::vector<double>& cached_bump_poly(int n) {
  static const std::array<std::vector<double>, 17> table = [] {
    std::array<std::vector<double>, 17> t;
    for (int i = 0; i <= 16; ++i) t[static_cast<std::size_t>(i)] = bump_poly(i);
    return t;
  }();
  return table[static_cast<std::size_t>(n)];
}

double bump_value(double u, double lo, double hi, int order) {
  const double w = (2.0 * u - lo - hi) / (hi - lo);
  if (!(std::abs(w) < 1.0)) return 0.0;
  const double s = 1.0 - w * w;
  const double phi = std::exp(-1.0 / s);
  if (phi == 0.0 || order == 0) return phi;
  std::vector<double> local;
  const std::vector<double>* poly = nullptr;
  if (order <= 16) {
    poly = &cached_bump_poly(order);
  } else {
    local = bump_poly(order);
    poly = &local;
  }
  double pw = 0.0;
  for (auto it = poly->rbegin(); it != poly->rend(); ++it) pw = pw * w + *it;
  const double scale = std::pow(2.0 / (hi - lo), order);
  return phi * pw / std::pow(s, 2 * order) * scale;
}

[[noreturn]] void non_finite(const char* what, double arg) {
  std::ostringstream os;
  os << what << " (argument " << arg << ")";
  throw NonFiniteError(os.str());
}

double eval_node(const Expr::Node& n, std::span<const double> p) {
  switch (n.op) {
    case Op::constant:
      return n.value;
    case Op::variable:
      if (n.index < 0 || static_cast<std::size_t>(n.index) >= p.size()) {
        std::ostringstream os;
        os << "expression uses coordinate " << n.index + 1 << " but the point has dimension " << p.size();
        throw DimensionError(os.str());
      }
      return p[static_cast<std::size_t>(n.index)];
    case Op::add:
      return eval_node(*n.lhs, p) + eval_node(*n.rhs, p);
    case Op::sub:
      return eval_node(*n.lhs, p) - eval_node(*n.rhs, p);
    case Op::mul:
      return eval_node(*n.lhs, p) * eval_node(*n.rhs, p);
    case Op::div: {
      const double num = eval_node(*n.lhs, p);
      const double den = eval_node(*n.rhs, p);
      if (den == 0.0) non_finite("division by zero", num);
      return num / den;
    }
    case Op::pow: {
      const double b = eval_node(*n.lhs, p);
      if (n.exponent < 0 && b == 0.0) non_finite("negative power of zero", b);
      return std::pow(b, n.exponent);
    }
    case Op::neg:
      return -eval_node(*n.lhs, p);
    case Op::exp:
      return std::exp(eval_node(*n.lhs, p));
    case Op::log: {
      const double a = eval_node(*n.lhs, p);
      if (!(a > 0.0)) non_finite("log of a nonpositive value", a);
      return std::log(a);
    }
    case Op::sin:
      return std::sin(eval_node(*n.lhs, p));
    case Op::cos:
      return std::cos(eval_node(*n.lhs, p));
    case Op::sqrt: {
      const double a = eval_node(*n.lhs, p);
      if (a < 0.0) non_finite("sqrt of a negative value", a);
      return std::sqrt(a);
    }
    case Op::bump:
    case Op::dbump:
      return bump_value(eval_node(*n.lhs, p), n.lo, n.hi, n.order);
  }
  return 0.0;
}

int max_var(const Expr::Node& n) {
  if (n.op == Op::variable) return n.index;
  int m = -1;
  if (n.lhs) m = std::max(m, max_var(*n.lhs));
  if (n.rhs) m = std::max(m, max_var(*n.rhs));
  return m;
}

bool uses(const Expr::Node& n, int index) {
  if (n.op == Op::variable) return n.index == index;
  return (n.lhs && uses(*n.lhs, index)) || (n.rhs && uses(*n.rhs, index));
}

bool any_bump(const Expr::Node& n) {
  if (n.op == Op::bump || n.op == Op::dbump) return true;
  return (n.lhs && any_bump(*n.lhs)) || (n.rhs && any_bump(*n.rhs));
}

Expr child(const NodePtr& p) { return Expr(p); }

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string var_name(const Expr::Node& n) {
  if (!n.name.empty()) return n.name;
  return n.index == 0 ? "x" : "x" + std::to_string(n.index + 1);
}

void print_node(const Expr::Node& n, std::string& out) {
  auto fn = [&](const char* name) {
    out += name;
    out += '(';
    print_node(*n.lhs, out);
    out += ')';
  };
  auto bin = [&](const char* sym) {
    out += '(';
    print_node(*n.lhs, out);
    out += sym;
    print_node(*n.rhs, out);
    out += ')';
  };
  switch (n.op) {
    case Op::constant:
      if (std::signbit(n.value)) {
        out += "(-" + format_number(-n.value) + ")";
      } else {
        out += format_number(n.value);
      }
      return;
    case Op::variable: out += var_name(n); return;
    case Op::add: bin(" + "); return;
    case Op::sub: bin(" - "); return;
    case Op::mul: bin(" * "); return;
    case Op::div: bin(" / "); return;
    case Op::pow:
      out += '(';
      print_node(*n.lhs, out);
      out += '^' + std::to_string(n.exponent) + ')';
      return;
    case Op::neg:
      out += "(-";
      print_node(*n.lhs, out);
      out += ')';
      return;
    case Op::exp: fn("exp"); return;
    case Op::log: fn("log"); return;
    case Op::sin: fn("sin"); return;
    case Op::cos: fn("cos"); return;
    case Op::sqrt: fn("sqrt"); return;
    case Op::bump:
    case Op::dbump:
      out += n.op == Op::bump ? "bump(" : "dbump(";
      print_node(*n.lhs, out);
      out += "; " + format_number(n.lo) + ", " + format_number(n.hi);
      if (n.op == Op::dbump) out += ", " + std::to_string(n.order);
      out += ')';
      return;
  }
}

bool equal_nodes(const Expr::Node& a, const Expr::Node& b) {
  if (a.op != b.op) return false;
  switch (a.op) {
    case Op::constant: return a.value == b.value;
    case Op::variable: return a.index == b.index;
    case Op::pow:
      if (a.exponent != b.exponent) return false;
      break;
    case Op::bump:
    case Op::dbump:
      if (a.lo != b.lo || a.hi != b.hi || a.order != b.order) return false;
      break;
    default: break;
  }
  if (static_cast<bool>(a.lhs) != static_cast<bool>(b.lhs)) return false;
  if (static_cast<bool>(a.rhs) != static_cast<bool>(b.rhs)) return false;
  if (a.lhs && !equal_nodes(*a.lhs, *b.lhs)) return false;
  if (a.rhs && !equal_nodes(*a.rhs, *b.rhs)) return false;
  return true;
}

Expr deriv_node(const Expr& e, int k) {
  const Expr::Node& n = e.node();
  switch (n.op) {
    case Op::constant: return Expr::constant(0.0);
    case Op::variable: return Expr::constant(n.index == k ? 1.0 : 0.0);
    default: break;
  }
  const Expr a = n.lhs ? child(n.lhs) : Expr();
  const Expr b = n.rhs ? child(n.rhs) : Expr();
  const Expr da = n.lhs ? deriv_node(a, k) : Expr();
  switch (n.op) {
    case Op::add: return da + deriv_node(b, k);
    case Op::sub: return da - deriv_node(b, k);
    case Op::mul: return da * b + a * deriv_node(b, k);
    case Op::div: return (da * b - a * deriv_node(b, k)) / pow(b, 2);
    case Op::pow: return Expr::constant(n.exponent) * pow(a, n.exponent - 1) * da;
    case Op::neg: return -da;
    case Op::exp: return e * da;
    case Op::log: return da / a;
    case Op::sin: return apply(Op::cos, a) * da;
    case Op::cos: return -(apply(Op::sin, a) * da);
    case Op::sqrt: return da / (Expr::constant(2.0) * e);
    case Op::bump:
    case Op::dbump: return bump(a, n.lo, n.hi, n.order + 1) * da;
    default: break;
  }
  return Expr();
}

bool support_bounded(const Expr::Node& n, int k) {
  switch (n.op) {
    case Op::constant: return n.value == 0.0;
    case Op::variable: return false;
    case Op::add:
    case Op::sub: return support_bounded(*n.lhs, k) && support_bounded(*n.rhs, k);
    case Op::mul: return support_bounded(*n.lhs, k) || support_bounded(*n.rhs, k);
    case Op::div: return support_bounded(*n.lhs, k);
    case Op::neg:
    case Op::sin:
    case Op::sqrt: return support_bounded(*n.lhs, k);
    case Op::pow: return n.exponent > 0 && support_bounded(*n.lhs, k);
    case Op::bump:
    case Op::dbump: return uses(*n.lhs, k);
    case Op::exp:
    case Op::cos:
    case Op::log: return false;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  Expr parse_all() {
    skip();
    if (pos_ >= src_.size()) throw ParseError("empty expression", pos_);
    Expr e = expr();
    skip();
    if (pos_ < src_.size()) throw ParseError(std::string("unexpected '") + src_[pos_] + "'", pos_);
    return e;
  }

 private:
  void skip() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= src_.size()) throw ParseError(std::string("expected '") + c + "' but input ended", pos_);
      throw ParseError(std::string("expected '") + c + "'", pos_);
    }
  }

  Expr expr() {
    Expr e = term();
    for (;;) {
      if (accept('+')) e = e + term();
      else if (accept('-')) e = e - term();
      else return e;
    }
  }

  Expr term() {
    Expr e = unary();
    for (;;) {
      if (accept('*')) e = e * unary();
      else if (accept('/')) e = e / unary();
      else return e;
    }
  }

  Expr unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return power();
  }

  Expr power() {
    Expr base = primary();
    if (!accept('^')) return base;
    return pow(base, integer_exponent());
  }

  int integer_exponent() {
    skip();
    const std::size_t start = pos_;
    const bool paren = accept('(');
    skip();
    bool negative = false;
    if (pos_ < src_.size() && (src_[pos_] == '-' || src_[pos_] == '+')) {
      negative = src_[pos_] == '-';
      ++pos_;
      skip();
    }
    const std::size_t digits = pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    if (pos_ == digits) throw ParseError("exponent must be an integer literal", start);
    if (pos_ < src_.size() && (src_[pos_] == '.' || src_[pos_] == 'e' || src_[pos_] == 'E')) {
      throw ParseError("exponent must be an integer literal", start);
    }
    int value = 0;
    auto [ptr, ec] = std::from_chars(src_.data() + digits, src_.data() + pos_, value);
    if (ec != std::errc()) throw ParseError("exponent out of range", start);
    if (paren) expect(')');
    return negative ? -value : value;
  }

  Expr number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) ++pos_;
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
      if (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) {
        pos_ = p;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      }
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, v);
    if (ec != std::errc() || ptr != src_.data() + pos_) throw ParseError("malformed number", start);
    return Expr::constant(v);
  }

  std::vector<Expr> arguments() {
    std::vector<Expr> args;
    expect('(');
    if (accept(')')) return args;
    args.push_back(expr());
    while (accept(',') || accept(';')) args.push_back(expr());
    expect(')');
    return args;
  }

  double constant_arg(const Expr& e, const char* what, std::size_t at) {
    if (!e.is_constant()) throw ParseError(std::string(what) + " must be a constant", at);
    return e.eval(std::span<const double>{});
  }

  Expr call(const std::string& name, std::size_t at) {
    const std::vector<Expr> args = arguments();
    auto arity = [&](std::size_t n) {
      if (args.size() != n) {
        std::ostringstream os;
        os << name << " expects " << n << " argument" << (n == 1 ? "" : "s") << ", got " << args.size()
           << " (position " << at << ")";
        throw ArityError(os.str());
      }
    };
    if (name == "exp" || name == "log" || name == "sin" || name == "cos" || name == "sqrt") {
      arity(1);
      const Op op = name == "exp" ? Op::exp
                    : name == "log" ? Op::log
                    : name == "sin" ? Op::sin
                    : name == "cos" ? Op::cos
                                    : Op::sqrt;
      return apply(op, args[0]);
    }
    if (name == "bump" || name == "dbump") {
      arity(name == "bump" ? 3 : 4);
      const double lo = constant_arg(args[1], "bump lower bound", at);
      const double hi = constant_arg(args[2], "bump upper bound", at);
      if (!(hi > lo)) throw ParseError("bump requires lower bound < upper bound", at);
      int order = 0;
      if (name == "dbump") {
        const double o = constant_arg(args[3], "dbump order", at);
        if (o < 0.0 || o != std::floor(o) || o > 64.0) throw ParseError("dbump order must be an integer in [0, 64]", at);
        order = static_cast<int>(o);
      }
      return bump(args[0], lo, hi, order);
    }
    throw ParseError("unknown function '" + name + "'", at);
  }

  Expr primary() {
    skip();
    if (pos_ >= src_.size()) throw ParseError("unexpected end of input", pos_);
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
        ++pos_;
      }
      const std::string name(src_.substr(start, pos_ - start));
      skip();
      if (pos_ < src_.size() && src_[pos_] == '(') return call(name, start);
      if (name == "pi") return Expr::constant(std::numbers::pi);
      const int idx = variable_index(name);
      if (idx < 0) throw ParseError("unknown identifier '" + name + "'", start);
      return Expr::variable(idx, name);
    }
    throw ParseError(std::string("unexpected '") + c + "'", pos_);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

}  // namespace

// ---------------------------------------------------------------------------

Expr::Expr() : node_(std::make_shared<const Node>()) {}

Expr Expr::constant(double value) {
  Node n;
  n.op = Op::constant;
  n.value = value;
  return wrap(std::move(n));
}

Expr Expr::variable(int index, std::string name) {
  Node n;
  n.op = Op::variable;
  n.index = index;
  n.name = std::move(name);
  return wrap(std::move(n));
}

double Expr::eval(std::span<const double> point) const {
  const double v = eval_node(*node_, point);
  if (!std::isfinite(v)) non_finite("expression evaluated to a non-finite value", v);
  return v;
}

double Expr::eval(double x) const { return eval(std::span<const double>(&x, 1)); }

int Expr::max_variable() const { return max_var(*node_); }
bool Expr::has_bump() const { return any_bump(*node_); }

int variable_index(std::string_view name) {
  if (name == "x" || name == "t") return 0;
  if (name.size() >= 2 && name.size() <= 3 && name[0] == 'x') {
    int k = 0;
    auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), k);
    if (ec == std::errc() && ptr == name.data() + name.size() && k >= 1 && name[1] != '0') return k - 1;
  }
  return -1;
}

Expr parse(std::string_view src) { return Parser(src).parse_all(); }

std::string print(const Expr& e) {
  std::string out;
  print_node(e.node(), out);
  return out;
}

bool structurally_equal(const Expr& a, const Expr& b) { return equal_nodes(a.node(), b.node()); }

Expr deriv(const Expr& e, int index) { return deriv_node(e, index); }

Expr deriv(const Expr& e, std::string_view var) {
  const int idx = variable_index(var);
  if (idx < 0) throw UnsupportedError("cannot differentiate with respect to '" + std::string(var) + "'");
  return deriv_node(e, idx);
}

namespace {
Expr fold_if_finite(double v, const Expr& fallback) {
  return std::isfinite(v) ? Expr::constant(v) : fallback;
}
}  // namespace

Expr operator+(const Expr& a, const Expr& b) {
  if (is_const(a) && is_const(b)) return Expr::constant(a.node().value + b.node().value);
  if (is_const(a, 0.0)) return b;
  if (is_const(b, 0.0)) return a;
  return binary_node(Op::add, a, b);
}

Expr operator-(const Expr& a, const Expr& b) {
  if (is_const(a) && is_const(b)) return Expr::constant(a.node().value - b.node().value);
  if (is_const(b, 0.0)) return a;
  if (is_const(a, 0.0)) return -b;
  return binary_node(Op::sub, a, b);
}

Expr operator*(const Expr& a, const Expr& b) {
  if (is_const(a) && is_const(b)) return Expr::constant(a.node().value * b.node().value);
  if (is_const(a, 0.0) || is_const(b, 0.0)) return Expr::constant(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  return binary_node(Op::mul, a, b);
}

Expr operator/(const Expr& a, const Expr& b) {
  if (is_const(a) && is_const(b) && b.node().value != 0.0) {
    return fold_if_finite(a.node().value / b.node().value, binary_node(Op::div, a, b));
  }
  if (is_const(b, 1.0)) return a;
  if (is_const(a, 0.0) && !is_const(b)) return Expr::constant(0.0);
  return binary_node(Op::div, a, b);
}

Expr operator-(const Expr& a) {
  if (is_const(a)) return Expr::constant(-a.node().value);
  if (a.node().op == Op::neg) return child(a.node().lhs);
  return unary_node(Op::neg, a);
}

Expr pow(const Expr& base, int exponent) {
  if (exponent == 0) return Expr::constant(1.0);
  if (exponent == 1) return base;
  Expr::Node n;
  n.op = Op::pow;
  n.exponent = exponent;
  n.lhs = base.node_ptr();
  Expr e = wrap(std::move(n));
  if (is_const(base) && !(exponent < 0 && base.node().value == 0.0)) {
    return fold_if_finite(std::pow(base.node().value, exponent), e);
  }
  return e;
}

Expr apply(Op fn, const Expr& arg) {
  switch (fn) {
    case Op::exp:
    case Op::log:
    case Op::sin:
    case Op::cos:
    case Op::sqrt: break;
    default: throw UnsupportedError("apply() takes a one-argument function");
  }
  Expr e = unary_node(fn, arg);
  if (is_const(arg)) {
    const double a = arg.node().value;
    if ((fn == Op::log && !(a > 0.0)) || (fn == Op::sqrt && a < 0.0)) return e;
    return fold_if_finite(eval_node(e.node(), {}), e);
  }
  return e;
}

Expr bump(const Expr& arg, double lo, double hi, int order) {
  if (!(hi > lo)) throw DomainError("bump requires lo < hi");
  if (order < 0) throw DomainError("bump derivative order must be nonnegative");
  Expr::Node n;
  n.op = order == 0 ? Op::bump : Op::dbump;
  n.lo = lo;
  n.hi = hi;
  n.order = order;
  n.lhs = arg.node_ptr();
  Expr e = wrap(std::move(n));
  if (is_const(arg)) return Expr::constant(bump_value(arg.node().value, lo, hi, order));
  return e;
}

bool compactly_supported_in(const Expr& e, int index) { return support_bounded(e.node(), index); }

Func1D to_func(const Expr& e, std::string label) {
  if (e.max_variable() > 0) {
    throw DimensionError("a one-dimensional function may only use the variable x");
  }
  const Expr d = deriv(e, 0);
  if (label.empty()) label = print(e);
  return Func1D{[e](double x) { return e.eval(x); }, [d](double x) { return d.eval(x); }, std::move(label)};
}

Func1D to_func(std::string_view src) { return to_func(parse(src), std::string(src)); }

}  // namespace entrobound
