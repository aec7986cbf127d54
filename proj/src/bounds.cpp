#include "entrobound/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "entrobound/errors.hpp"
#include "entrobound/parallel.hpp"
#include "entrobound/rng.hpp"

namespace entrobound {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kTiny = 1e-300;

// φ(y) = y log y - y + 1, by its series in d = y - 1 near y = 1.
double phi(double y) {
  const double d = y - 1.0;
  if (std::abs(d) <= 4.0 * kEps) return 0.0;
  if (std::abs(d) < 1e-2) {
    double term = d * d;
    double sum = 0.0;
    for (int k = 2; k <= 10; ++k) {
      sum += term / static_cast<double>(k * (k - 1)) * ((k % 2 == 0) ? 1.0 : -1.0);
      term *= d;
    }
    return sum;
  }
  return y > 0.0 ? y * std::log(y) - d : 1.0;
}

double checked_nonnegative(double v, double x) {
  if (v < -1e-12) {
    std::ostringstream os;
    os << "function is negative (" << v << ") at x = " << x;
    throw NegativeFunctionError(os.str());
  }
  return v < 0.0 ? 0.0 : v;
}

double log_inverse_twice(double s) {
  // log(1/(2s)) for s in (0, 1/2], exact at s = 1/2.
  return s > 0.25 ? -std::log1p(2.0 * s - 1.0) : -std::log(2.0 * s);
}

// Probability-coordinate breakpoints on each side, from the G tabulation.
struct SideBreaks {
  std::vector<double> lower, upper;
};

SideBreaks curve_breaks(const Measure1D& m, const TrimmedFamily1D& fam, const TrimmedMeanCurve& curve) {
  SideBreaks out;
  for (const auto& n : curve.nodes()) {
    if (fam.is_quantile()) {
      out.lower.push_back(0.5 * n.u);
      out.upper.push_back(0.5 * n.u);
      continue;
    }
    for (double x : {n.a, n.b}) {
      const double v = m.cdf(x);
      const double w = m.ccdf(x);
      if (v > 0.0 && v < 0.5) out.lower.push_back(v);
      if (w > 0.0 && w < 0.5) out.upper.push_back(w);
    }
  }
  for (auto* b : {&out.lower, &out.upper}) {
    b->push_back(0.0);
    b->push_back(0.5);
    std::sort(b->begin(), b->end());
    b->erase(std::unique(b->begin(), b->end()), b->end());
    std::erase_if(*b, [](double s) { return s < 0.0 || s > 0.5; });
  }
  return out;
}

// Integrates h over both tails, cell by cell between the given breakpoints.
IntegrationResult integrate_cells(const Measure1D& m, const TailIntegrand& h, const SideBreaks& br,
                                  const QuadratureSpec& spec) {
  IntegrationResult out;
  for (Tail side : {Tail::lower, Tail::upper}) {
    const auto& b = side == Tail::lower ? br.lower : br.upper;
    for (std::size_t k = 0; k + 1 < b.size(); ++k) {
      QuadratureSpec local = spec;
      local.abs_tol = std::max(spec.abs_tol * (b[k + 1] - b[k]), std::numeric_limits<double>::min());
      out += integrate_tail(m, side, h, b[k], b[k + 1], local);
    }
  }
  return out;
}

struct Theorem2Pass {
  IntegrationResult result;
  bool vanishing = false;
};

Theorem2Pass theorem2_pass(const Measure1D& m, const TrimmedFamily1D& fam, const RealFunction& g,
                           const TrimmedMeanCurve& curve, double eps, const QuadratureSpec& spec) {
  bool vanishing = false;
  const SideBreaks br = curve_breaks(m, fam, curve);
  auto h = [&](double x, double s) {
    const double u = fam.is_quantile() ? 2.0 * s : 1.0 - tau(fam, m, x);
    const double G = curve.at_complement(u) + eps;
    const double gv = checked_nonnegative(g(x), x) + eps;
    if (G <= kTiny) {
      if (gv != 0.0) vanishing = true;
      return 0.0;
    }
    const double d = gv - G;
    // differences at rounding level of the curve count as zero
    if (std::abs(d) <= 64 * std::numeric_limits<double>::epsilon() * std::max(gv, G)) return 0.0;
    return d * (d / G);
  };
  Theorem2Pass out;
  out.result = integrate_cells(m, h, br, spec);
  out.vanishing = vanishing;
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

void BoundReport::finish() {
  slack = bound - entropy;
  if (bound == 0.0) {
    ratio = entropy == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  } else {
    ratio = entropy / bound;
  }
}

double BoundReport::sigma_combined() const {
  return std::sqrt(entropy_sigma * entropy_sigma + bound_sigma * bound_sigma);
}

nlohmann::ordered_json BoundReport::to_json() const {
  nlohmann::ordered_json j;
  j["method"] = method;
  j["entropy"] = entropy;
  j["bound"] = bound;
  j["slack"] = slack;
  j["ratio"] = std::isfinite(ratio) ? nlohmann::ordered_json(ratio) : nlohmann::ordered_json(nullptr);
  j["quadrature_error"] = quadrature_error;
  if (entropy_sigma > 0.0 || bound_sigma > 0.0) {
    j["entropy_sigma"] = entropy_sigma;
    j["bound_sigma"] = bound_sigma;
    j["sigma_combined"] = sigma_combined();
  }
  j["inputs_digest"] = inputs_digest;
  j["params"] = params;
  if (!warnings.empty()) j["warnings"] = warnings;
  return j;
}

IntegrationResult entropy(const Measure1D& m, const RealFunction& g, const QuadratureSpec& spec) {
  spec.validate();
  auto gv = [&](double x) { return checked_nonnegative(g(x), x); };
  const IntegrationResult mass = integrate(m, gv, spec);
  if (!(mass.value > 0.0)) return {0.0, mass.error, mass.evaluations};
  const double mu = mass.value;
  auto integrand = [&](double x) {
    const double v = gv(x);
    if (v < kTiny) return mu;
    return mu * phi(v / mu);
  };
  IntegrationResult out = integrate(m, integrand, spec);
  out.value = std::max(out.value, 0.0);
  out.evaluations += mass.evaluations;
  return out;
}

IntegrationResult entropy(const Measure1D& m, const Expr& g, const QuadratureSpec& spec) {
  if (g.max_variable() > 0) throw DimensionError("a one-dimensional function may only use x");
  return entropy(m, [&](double x) { return g.eval(x); }, spec);
}

IntegrationResult classic_lsi_rhs(const Measure1D& m, const Func1D& f, double c, const QuadratureSpec& spec) {
  if (!(c > 0.0)) throw DomainError("the LSI constant must be positive");
  spec.validate();
  IntegrationResult r = integrate(m, [&](double x) {
    const double d = f.derivative(x);
    return d * d;
  }, spec);
  r.value *= 2.0 * c;
  r.error *= 2.0 * c;
  return r;
}

IntegrationResult theorem2_integral(const Measure1D& m, const TrimmedFamily1D& fam, const RealFunction& g,
                                    const TrimmedMeanCurve& curve, double eps, const QuadratureSpec& spec) {
  return theorem2_pass(m, fam, g, curve, eps, spec).result;
}

Theorem2Result theorem2_bound(const Measure1D& m, const TrimmedFamily1D& fam, const RealFunction& g,
                              const QuadratureSpec& spec) {
  spec.validate();
  auto gv = [&](double x) { return checked_nonnegative(g(x), x); };
  IntegrationResult second;
  try {
    second = integrate(m, [&](double x) {
      const double v = gv(x);
      return v * v;
    }, spec);
  } catch (const NonFiniteError& e) {
    throw NonFiniteError(std::string("g is not square integrable: ") + e.what());
  }
  if (!std::isfinite(second.value)) throw NonFiniteError("g is not square integrable");

  const TrimmedMeanCurve curve = TrimmedMeanCurve::build(fam, m, gv, spec);
  Theorem2Result out;
  const Theorem2Pass plain = theorem2_pass(m, fam, gv, curve, 0.0, spec);
  if (!plain.vanishing) {
    out.bound = plain.result.value;
    out.error = plain.result.error + curve.quadrature_error();
    return out;
  }

  out.regularized = true;
  const std::vector<double> eps{1e-3, 1e-4, 1e-5, 1e-6};
  double err = curve.quadrature_error();
  for (double e : eps) {
    const IntegrationResult r = theorem2_pass(m, fam, gv, curve, e, spec).result;
    out.eps_sequence.push_back(r.value);
    err += r.error;
  }
  const auto& b = out.eps_sequence;
  const double slack = 1e-9 * (1.0 + std::abs(b.back()));
  for (std::size_t k = 1; k < b.size(); ++k) {
    if (b[k] < b[k - 1] - slack) {
      throw DegenerateError("regularized bounds are not monotone in epsilon");
    }
  }
  const double d_prev = b[2] - b[1];
  const double d_last = b[3] - b[2];
  if (d_last > 0.5 * d_prev + slack) {
    std::ostringstream os;
    os << "regularized bounds do not converge as epsilon -> 0 (increments " << d_prev << ", " << d_last << ")";
    throw DegenerateError(os.str());
  }
  out.bound = b[3] + d_last * eps[3] / (eps[2] - eps[3]);
  out.error = err + std::abs(d_last);
  return out;
}

RdBoundEstimate theorem2_bound_rd(const ProductMeasure& pm, const BallTrimmingRd& fam, const Expr& g,
                                  std::uint64_t nsamples, std::uint64_t seed) {
  const std::size_t d = pm.dimension();
  if (d > 4) throw DimensionError("the Monte Carlo bound supports dimension d <= 4");
  if (fam.center.size() != d) throw DimensionError("ball center and measure differ in dimension");
  if (g.max_variable() >= static_cast<int>(d)) throw DimensionError("function uses more coordinates than the measure has");
  constexpr std::uint64_t kMinTail = 100;
  if (nsamples < 2 * kMinTail) throw DegenerateError("too few samples for the trimmed-mean curve");

  struct Point {
    double tau, g;
  };
  auto draw = [&](std::uint32_t stream) {
    auto work = [&](std::size_t chunk) {
      RandomStream rs(seed, stream, chunk);
      std::vector<double> u(d), x(d);
      std::vector<Point> pts;
      for (std::uint64_t i = chunk_begin(chunk); i < chunk_end(chunk, nsamples); ++i) {
        for (auto& ui : u) ui = rs.uniform();
        pm.sample(u, x);
        pts.push_back({tau_rd(fam, x), checked_nonnegative(g.eval(x), x[0])});
      }
      return pts;
    };
    std::vector<Point> all;
    for (auto& part : map_chunks<std::vector<Point>>(chunk_count(nsamples), work)) {
      all.insert(all.end(), part.begin(), part.end());
    }
    return all;
  };

  std::vector<Point> curve = draw(streams::curve);
  std::sort(curve.begin(), curve.end(), [](const Point& a, const Point& b) {
    return a.tau != b.tau ? a.tau < b.tau : a.g < b.g;
  });
  const std::size_t n = curve.size();
  // suffix[i] = mean of g over points i..n-1, accumulated as a running mean.
  std::vector<double> suffix(n + 1, 0.0);
  double mean = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double k = static_cast<double>(n - i);
    mean += (curve[i].g - mean) / k;
    suffix[i] = mean;
  }
  const std::size_t last = n - kMinTail;
  std::vector<double> taus(n);
  for (std::size_t i = 0; i < n; ++i) taus[i] = curve[i].tau;
  auto G = [&](double t) {
    std::size_t i = static_cast<std::size_t>(std::upper_bound(taus.begin(), taus.end(), t) - taus.begin());
    return suffix[std::min(i, last)];
  };

  const std::vector<Point> outer = draw(streams::outer);
  CoMoments<3> acc;
  for (const Point& p : outer) {
    const double Gt = G(p.tau);
    double z = 0.0;
    if (Gt <= kTiny) {
      if (p.g != 0.0) throw DegenerateError("estimated trimmed mean vanishes where g does not");
    } else {
      z = (p.g - Gt) * (p.g - Gt) / Gt;
    }
    acc.add({xlogx(p.g), p.g, z});
  }
  RdBoundEstimate out;
  out.bound = {acc.mean(2), acc.linear_std_error({0.0, 0.0, 1.0})};
  out.entropy = entropy_estimate(acc, 0, 1);
  out.t_max = taus[last];
  out.curve_samples = n;
  return out;
}

WeightValues weights_from_tail(double s, double p) {
  if (!(p > kTiny)) {
    std::ostringstream os;
    os << "density " << p << " vanishes inside the support";
    throw ZeroDensityError(os.str());
  }
  const double V = s / p;
  const double L = log_inverse_twice(s);
  const double V2 = V * V;
  return {V, V2 * L, 4.0 * V2, 8.0 * V2 * (L + 1.0)};
}

WeightValues WeightProfile::at(double x) const { return weights_from_tail(fhat(m_, x), m_.density(x)); }

WeightProfile weights(const Measure1D& m, const QuadratureSpec& spec) {
  spec.validate();
  return WeightProfile(m);
}

void check_symmetric(const Measure1D& m, const TrimmedFamily1D& fam, const Func1D& f) {
  double worst = 0.0;
  double worst_t = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const double t = k / 1000.0;
    const double fa = f.value(fam.a(m, t));
    const double fb = f.value(fam.b(m, t));
    const double dev = std::abs(fa - fb) / (1.0 + std::abs(fa));
    if (dev > worst) {
      worst = dev;
      worst_t = t;
    }
  }
  if (worst > 1e-8) {
    std::ostringstream os;
    os << "function is not symmetric with respect to the family: relative gap " << worst << " at t = " << worst_t;
    throw SymmetryViolationError(os.str(), worst_t);
  }
}

IntegrationResult prop1_bound(const Measure1D& m, const TrimmedFamily1D& fam, const Func1D& f,
                              const QuadratureSpec& spec) {
  spec.validate();
  check_symmetric(m, fam, f);
  TailIntegrand h;
  if (fam.is_quantile()) {
    h = [&](double x, double s) {
      const double d = f.derivative(x);
      if (d == 0.0) return 0.0;
      return 4.0 * weights_from_tail(s, m.density(x)).W * d * d;
    };
  } else {
    const double a0 = fam.center(m);
    h = [&, a0](double x, double) {
      const double d = f.derivative(x);
      if (d == 0.0) return 0.0;
      const double p = m.density(x);
      if (!(p > kTiny)) throw ZeroDensityError("density vanishes inside the support");
      const double V = (x <= a0 ? m.cdf(x) : m.ccdf(x)) / p;
      const double t = tau(fam, m, x);
      const double mass = t == 0.0 ? 1.0 : m.cdf(fam.a(m, t)) + m.ccdf(fam.b(m, t));
      if (!(mass > 0.0)) return 0.0;
      return 4.0 * V * V * -std::log(mass) * d * d;
    };
  }
  IntegrationResult out = integrate_tail(m, Tail::lower, h, 0.0, 0.5, spec);
  out += integrate_tail(m, Tail::upper, h, 0.0, 0.5, spec);
  return out;
}

double bernoulli_constant(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    std::ostringstream os;
    os << "probability " << p << " outside [0, 1]";
    throw DomainError(os.str());
  }
  if (p == 0.0 || p == 1.0) return 0.0;
  const double q = 1.0 - p;
  const double e = p - 0.5;
  const double pq = p * q;
  if (std::abs(e) < 1e-4) {
    const double e2 = e * e;
    return pq * 2.0 * (1.0 + e2 * (4.0 / 3.0 + e2 * 16.0 / 5.0));
  }
  return pq * std::atanh(2.0 * e) / e;
}

namespace {

struct SymPoint {
  double value, derivative;
};

// f̂ and f̂' at x given the conjugate point and both densities.
SymPoint sym_at(const Func1D& f, double x, double s, double px, double ps) {
  const double fx = f.value(x);
  const double fs = f.value(s);
  const double fh = std::sqrt(0.5 * (fx * fx + fs * fs));
  const double dx = f.derivative(x);
  const double ds = f.derivative(s);
  if (!(ps > kTiny)) throw ZeroDensityError("density vanishes at the conjugate point");
  const double num = fx * dx - fs * ds * px / ps;
  if (fh == 0.0) {
    if (num == 0.0) return {0.0, 0.0};
    std::ostringstream os;
    os << "symmetrized function vanishes at x = " << x << " with nonzero derivative numerator";
    throw NonFiniteError(os.str());
  }
  return {fh, num / (2.0 * fh)};
}

}  // namespace

Func1D symmetrize(const Measure1D& m, const TrimmedFamily1D& fam, const Func1D& f) {
  if (!fam.is_quantile()) throw UnsupportedError("symmetrization is implemented for the quantile family only");
  auto at = [m, fam, f](double x) {
    const double s = conjugate(fam, m, x);
    return sym_at(f, x, s, m.density(x), m.density(s));
  };
  return Func1D{[at](double x) { return at(x).value; }, [at](double x) { return at(x).derivative; },
                "sym(" + f.label + ")"};
}

Eq145Result eq145_bound(const Measure1D& m, const TrimmedFamily1D& fam, const Func1D& f,
                        const QuadratureSpec& spec) {
  if (!fam.is_quantile()) throw UnsupportedError("this bound is implemented for the quantile family only");
  spec.validate();
  auto conj = [&](double s, Tail side) { return side == Tail::lower ? m.upper_quantile(s) : m.quantile(s); };
  Eq145Result out;
  for (Tail side : {Tail::lower, Tail::upper}) {
    auto wterm = [&](double x, double s) {
      const double px = m.density(x);
      const WeightValues w = weights_from_tail(s, px);
      if (w.W == 0.0) return 0.0;
      const double c = conj(s, side);
      const SymPoint sp = sym_at(f, x, c, px, m.density(c));
      return 4.0 * w.W * sp.derivative * sp.derivative;
    };
    auto uterm = [&](double x, double s) {
      const double d = f.derivative(x);
      if (d == 0.0) return 0.0;
      return 2.0 * weights_from_tail(s, m.density(x)).U * d * d;
    };
    const IntegrationResult a = integrate_tail(m, side, wterm, 0.0, 0.5, spec);
    const IntegrationResult b = integrate_tail(m, side, uterm, 0.0, 0.5, spec);
    out.w_term += a.value;
    out.u_term += b.value;
    out.error += a.error + b.error;
  }
  out.bound = out.w_term + out.u_term;
  return out;
}

BoundReport theorem3_bound(const Measure1D& m, const Func1D& f, const QuadratureSpec& spec) {
  spec.validate();
  BoundReport r;
  r.method = "theorem3";
  const IntegrationResult ent = entropy(m, [&](double x) {
    const double v = f.value(x);
    return v * v;
  }, spec);
  auto h = [&](double x, double s) {
    const double d = f.derivative(x);
    if (d == 0.0) return 0.0;
    return weights_from_tail(s, m.density(x)).K * d * d;
  };
  IntegrationResult b = integrate_tail(m, Tail::lower, h, 0.0, 0.5, spec);
  b += integrate_tail(m, Tail::upper, h, 0.0, 0.5, spec);
  r.entropy = ent.value;
  r.bound = b.value;
  r.quadrature_error = ent.error + b.error;
  r.finish();
  return r;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace entrobound
