#include "entrobound/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "entrobound/errors.hpp"

namespace entrobound {

void QuadratureSpec::validate() const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) {
    throw ValidationError("quadrature tolerances must be positive");
  }
  if (max_depth < 1 || max_depth > 200) {
    throw ValidationError("quadrature max_depth must lie in [1, 200]");
  }
  if (!(tail_cut > 0.0) || !(tail_cut < 1e-3)) {
    throw ValidationError("quadrature tail_cut must lie in (0, 1e-3)");
  }
}

namespace {

struct Rule {
  // Kronrod abscissae in increasing order; index 0 is the centre and the odd
  // indices are the 10-point Gauss nodes.
  std::array<double, 11> x{};
  std::array<double, 11> wk{};
  std::array<double, 5> wg{};
};

const Rule& rule() {
  static const Rule r = [] {
    Rule out;
    using GK = boost::math::quadrature::gauss_kronrod<double, 21>;
    using G = boost::math::quadrature::gauss<double, 10>;
    const auto& xs = GK::abscissa();
    const auto& ws = GK::weights();
    const auto& gw = G::weights();
    for (std::size_t i = 0; i < 11; ++i) {
      out.x[i] = xs[i];
      out.wk[i] = ws[i];
    }
    for (std::size_t i = 0; i < 5; ++i) out.wg[i] = gw[i];
    return out;
  }();
  return r;
}

struct Piece {
  double a, b;
  double value;
  double error;
  int depth;
};

double checked(const RealFunction& f, double x) {
  const double y = f(x);
  if (!std::isfinite(y)) {
    std::ostringstream os;
    os << "integrand is not finite at " << x;
    throw NonFiniteError(os.str());
  }
  return y;
}

// One Gauss-Kronrod 21 evaluation with the QUADPACK error scaling.
Piece kronrod(const RealFunction& f, double a, double b, int depth) {
  const Rule& r = rule();
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  std::array<double, 21> fv{};
  fv[0] = checked(f, c);
  double resk = fv[0] * r.wk[0];
  double resg = 0.0;
  for (std::size_t i = 1; i < 11; ++i) {
    const double dx = h * r.x[i];
    const double f1 = checked(f, c - dx);
    const double f2 = checked(f, c + dx);
    fv[2 * i - 1] = f1;
    fv[2 * i] = f2;
    resk += r.wk[i] * (f1 + f2);
    if (i % 2 == 1) resg += r.wg[i / 2] * (f1 + f2);
  }
  const double mean = 0.5 * resk;
  double resasc = r.wk[0] * std::abs(fv[0] - mean);
  for (std::size_t i = 1; i < 11; ++i) {
    resasc += r.wk[i] * (std::abs(fv[2 * i - 1] - mean) + std::abs(fv[2 * i] - mean));
  }
  resasc *= std::abs(h);
  double err = std::abs((resk - resg) * h);
  if (resasc != 0.0 && err != 0.0) {
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  }
  const double value = resk * h;
  const double round = 50.0 * std::numeric_limits<double>::epsilon() * std::abs(value);
  err = std::max(err, round);
  return Piece{a, b, value, err, depth};
}

struct ByError {
  bool operator()(const Piece& l, const Piece& r) const {
    if (l.error != r.error) return l.error < r.error;
    return l.a > r.a;
  }
};

constexpr std::size_t kMaxPieces = 20000;

}  // namespace

IntegrationResult adaptive_integrate(const RealFunction& f, double a, double b,
                                     double rel_tol, double abs_tol,
                                     int max_depth) {
  if (!(b > a)) return {};
  std::priority_queue<Piece, std::vector<Piece>, ByError> heap;
  Piece first = kronrod(f, a, b, 0);
  std::size_t evals = 21;
  double total = first.value;
  double total_err = first.error;
  heap.push(first);
  // Pieces whose error is at rounding level are parked here: they can no
  // longer be improved by bisection.
  double frozen_value = 0.0;
  double frozen_err = 0.0;

  while (!heap.empty()) {
    const double target = std::max(abs_tol, rel_tol * std::abs(total));
    if (total_err <= target) break;
    Piece worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const bool splittable = worst.depth < max_depth && mid > worst.a && mid < worst.b;
    const bool at_rounding =
        worst.error <= 51.0 * std::numeric_limits<double>::epsilon() * std::abs(worst.value);
    if (at_rounding) {
      frozen_value += worst.value;
      frozen_err += worst.error;
      continue;
    }
    if (!splittable) {
      if (worst.error <= 100.0 * std::numeric_limits<double>::epsilon() *
                             (std::abs(worst.value) + std::abs(total))) {
        frozen_value += worst.value;
        frozen_err += worst.error;
        continue;
      }
      std::ostringstream os;
      os << "adaptive quadrature on [" << a << ", " << b
         << "] hit the depth limit with error " << total_err << " > " << target;
      throw ConvergenceError(os.str());
    }
    Piece left = kronrod(f, worst.a, mid, worst.depth + 1);
    Piece right = kronrod(f, mid, worst.b, worst.depth + 1);
    evals += 42;
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    if (heap.size() > kMaxPieces) {
      std::ostringstream os;
      os << "adaptive quadrature on [" << a << ", " << b << "] exceeded "
         << kMaxPieces << " subintervals (error " << total_err << ")";
      throw ConvergenceError(os.str());
    }
  }

  // Re-sum from the pieces to avoid drift from the running updates.
  double value = frozen_value;
  double err = frozen_err;
  std::vector<Piece> rest;
  rest.reserve(heap.size());
  while (!heap.empty()) {
    rest.push_back(heap.top());
    heap.pop();
  }
  std::sort(rest.begin(), rest.end(), [](const Piece& l, const Piece& r) { return l.a < r.a; });
  for (const Piece& p : rest) {
    value += p.value;
    err += p.error;
  }
  return IntegrationResult{value, err, evals};
}

IntegrationResult adaptive_integrate(const RealFunction& f, double a, double b,
                                     std::span<const double> breaks,
                                     double rel_tol, double abs_tol,
                                     int max_depth) {
  std::vector<double> pts{a};
  for (double x : breaks) {
    if (x > a && x < b) pts.push_back(x);
  }
  pts.push_back(b);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const double share = abs_tol / static_cast<double>(pts.size() - 1);
  IntegrationResult out;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    out += adaptive_integrate(f, pts[i], pts[i + 1], rel_tol, share, max_depth);
  }
  return out;
}

IntegrationResult log_scale_integrate(const RealFunction& f, double lo,
                                      double hi, double rel_tol,
                                      double abs_tol, int max_depth) {
  if (!(hi > lo)) return {};
  const double floor = std::max(lo, kProbabilityFloor);
  if (!(hi > floor)) return {};
  const double ua = std::log(floor);
  const double ub = std::log(hi);
  auto g = [&](double u) {
    const double s = std::exp(u);
    const double y = f(s);
    return y == 0.0 ? 0.0 : y * s;
  };
  return adaptive_integrate(g, ua, ub, rel_tol, abs_tol, max_depth);
}

}  // namespace entrobound
