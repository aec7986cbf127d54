#include "entrobound/trimming.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "entrobound/errors.hpp"
#include "entrobound/parallel.hpp"
#include "entrobound/rng.hpp"

namespace entrobound {

namespace {

constexpr int kValidationGrid = 1000;
constexpr double kDegenerateMass = 1e-14;

double eval_t(const Expr& e, double t) { return e.eval(t); }

Tail opposite(Tail side) { return side == Tail::lower ? Tail::upper : Tail::lower; }

// ∫ g(x(s)) ds over s in [s1, s2] ⊂ [0, 1], s measured from the given side.
IntegrationResult integrate_side_range(const Measure1D& m, Tail side, const RealFunction& g,
                                       double s1, double s2, const QuadratureSpec& spec) {
  s1 = std::max(s1, 0.0);
  s2 = std::min(s2, 1.0);
  if (!(s2 > s1)) return {};
  auto h = [&](double x, double) { return g(x); };
  IntegrationResult out;
  const double width = s2 - s1;
  QuadratureSpec local = spec;
  local.abs_tol = std::max(spec.abs_tol * width, std::numeric_limits<double>::min());
  if (s1 < 0.5) out += integrate_tail(m, side, h, s1, std::min(s2, 0.5), local);
  if (s2 > 0.5) out += integrate_tail(m, opposite(side), h, 1.0 - s2, 1.0 - std::max(s1, 0.5), local);
  return out;
}

struct Ends {
  double a, b, pl, pu;
};

Ends endpoints(const TrimmedFamily1D& fam, const Measure1D& m, double u) {
  if (fam.is_quantile()) {
    const double s = 0.5 * u;
    return {m.quantile(s), m.upper_quantile(s), s, s};
  }
  const double t = 1.0 - u;
  const double a = fam.a(m, t);
  const double b = fam.b(m, t);
  return {a, b, m.cdf(a), m.ccdf(b)};
}

// 1 - τ(x), computed without cancellation for the quantile family.
double tau_complement(const TrimmedFamily1D& fam, const Measure1D& m, double x) {
  if (fam.is_quantile()) return 2.0 * fhat(m, x);
  const double c = fam.center(m);
  if (x == c) return 1.0;
  const bool right = x > c;
  auto inside = [&](double u) {
    const double t = 1.0 - u;
    return right ? fam.b(m, t) >= x : fam.a(m, t) <= x;
  };
  double lo = 1e-16;  // inside(lo) should hold
  if (!inside(lo)) return lo;
  double hi = 1.0;  // not inside (x != center)
  for (int it = 0; it < 400; ++it) {
    const double mid = hi / lo > 4.0 ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (inside(mid)) lo = mid;
    else hi = mid;
    if (hi - lo <= 1e-13 * hi) break;
  }
  return lo;
}

std::vector<double> pchip_slopes(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  std::vector<double> d(n, 0.0);
  if (n < 2) return d;
  std::vector<double> h(n - 1), delta(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    h[k] = x[k + 1] - x[k];
    delta[k] = (y[k + 1] - y[k]) / h[k];
  }
  if (n == 2) {
    d[0] = d[1] = delta[0];
    return d;
  }
  for (std::size_t k = 1; k + 1 < n; ++k) {
    if (delta[k - 1] * delta[k] <= 0.0) continue;
    const double w1 = 2.0 * h[k] + h[k - 1];
    const double w2 = h[k] + 2.0 * h[k - 1];
    d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
  }
  auto edge = [](double h0, double h1, double d0, double d1) {
    double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (s * d0 <= 0.0) return 0.0;
    if (d0 * d1 < 0.0 && std::abs(s) > 3.0 * std::abs(d0)) return 3.0 * d0;
    return s;
  };
  d[0] = edge(h[0], h[1], delta[0], delta[1]);
  d[n - 1] = edge(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  return d;
}

}  // namespace

// ---------------------------------------------------------------------------

TrimmedFamily1D TrimmedFamily1D::quantile() { return TrimmedFamily1D{}; }

TrimmedFamily1D TrimmedFamily1D::custom(Expr a, Expr b) {
  if (a.max_variable() > 0 || b.max_variable() > 0) {
    throw ValidationError("family endpoints may only depend on t");
  }
  TrimmedFamily1D f;
  f.mode_ = Mode::custom;
  const double a0 = eval_t(a, 0.0);
  const double b0 = eval_t(b, 0.0);
  if (std::abs(a0 - b0) > 1e-12 * (1.0 + std::abs(a0))) {
    std::ostringstream os;
    os << "family needs a(0) = b(0), got " << a0 << " and " << b0;
    throw ValidationError(os.str());
  }
  double pa = a0, pb = b0;
  for (int k = 1; k < kValidationGrid; ++k) {
    const double t = static_cast<double>(k) / kValidationGrid;
    const double at = eval_t(a, t);
    const double bt = eval_t(b, t);
    if (at > pa + 1e-12 * (1.0 + std::abs(pa)) || bt < pb - 1e-12 * (1.0 + std::abs(pb))) {
      std::ostringstream os;
      os << "family is not nested at t = " << t << " (a must not increase, b must not decrease)";
      throw ValidationError(os.str());
    }
    pa = at;
    pb = bt;
  }
  f.a_ = std::move(a);
  f.b_ = std::move(b);
  return f;
}

TrimmedFamily1D TrimmedFamily1D::from_json(const nlohmann::json& spec) {
  if (spec.is_null()) return quantile();
  if (!spec.is_object()) throw ConfigError("family spec must be an object");
  const std::string kind = spec.value("family", std::string("quantile"));
  if (kind == "quantile") return quantile();
  if (kind == "custom") {
    if (!spec.contains("a") || !spec.contains("b") || !spec.at("a").is_string() || !spec.at("b").is_string()) {
      throw ConfigError("custom family needs string endpoints 'a' and 'b'");
    }
    return custom(parse(spec.at("a").get<std::string>()), parse(spec.at("b").get<std::string>()));
  }
  throw ConfigError("unknown family '" + kind + "'");
}

nlohmann::json TrimmedFamily1D::to_json() const {
  if (is_quantile()) return {{"family", "quantile"}};
  return {{"family", "custom"}, {"a", print(*a_)}, {"b", print(*b_)}};
}

double TrimmedFamily1D::a(const Measure1D& m, double t) const {
  if (is_quantile()) return m.quantile(0.5 * (1.0 - t));
  return eval_t(*a_, t);
}

double TrimmedFamily1D::b(const Measure1D& m, double t) const {
  if (is_quantile()) return m.upper_quantile(0.5 * (1.0 - t));
  return eval_t(*b_, t);
}

double TrimmedFamily1D::center(const Measure1D& m) const {
  return is_quantile() ? m.median() : eval_t(*a_, 0.0);
}

void TrimmedFamily1D::validate(const Measure1D& m) const {
  if (is_quantile()) return;
  const Interval sup = m.support();
  for (int k = 0; k < kValidationGrid; ++k) {
    const double t = static_cast<double>(k) / kValidationGrid;
    if (a(m, t) <= sup.low && b(m, t) >= sup.high) {
      std::ostringstream os;
      os << "D_t covers the whole support at t = " << t << " < 1";
      throw ValidationError(os.str());
    }
  }
}

double fhat(const Measure1D& m, double x) { return std::min(m.cdf(x), m.ccdf(x)); }

double tau(const TrimmedFamily1D& fam, const Measure1D& m, double x) {
  if (fam.is_quantile()) {
    if (x == m.median()) return 0.0;
    return 1.0 - 2.0 * fhat(m, x);
  }
  return 1.0 - tau_complement(fam, m, x);
}

double tail_mass(const TrimmedFamily1D& fam, const Measure1D& m, double t) {
  if (!(t >= 0.0 && t < 1.0)) {
    std::ostringstream os;
    os << "trimming level " << t << " outside [0, 1)";
    throw DomainError(os.str());
  }
  if (fam.is_quantile()) return 1.0 - t;
  if (t == 0.0) return 1.0;
  return m.cdf(fam.a(m, t)) + m.ccdf(fam.b(m, t));
}

IntegrationResult integrate_probability_range(const Measure1D& m, const RealFunction& g,
                                              double v1, double v2, const QuadratureSpec& spec) {
  return integrate_side_range(m, Tail::lower, g, v1, v2, spec);
}

double trimmed_mean(const TrimmedFamily1D& fam, const Measure1D& m, const RealFunction& g,
                    double t, const QuadratureSpec& spec) {
  spec.validate();
  const double mass = tail_mass(fam, m, t);
  if (!(mass > kDegenerateMass)) {
    std::ostringstream os;
    os << "tail mass " << mass << " at t = " << t << " is too small for a trimmed mean";
    throw DegenerateError(os.str());
  }
  const Ends e = endpoints(fam, m, 1.0 - t);
  const double pl = fam.is_quantile() ? 0.5 * mass : e.pl;
  const double pu = fam.is_quantile() ? 0.5 * mass : e.pu;
  const IntegrationResult lo = integrate_side_range(m, Tail::lower, g, 0.0, pl, spec);
  const IntegrationResult hi = integrate_side_range(m, Tail::upper, g, 0.0, pu, spec);
  return (lo.value + hi.value) / mass;
}

double conjugate(const TrimmedFamily1D& fam, const Measure1D& m, double x) {
  if (fam.is_quantile()) {
    const double med = m.median();
    if (x == med) return med;
    const double v = m.cdf(x);
    if (v <= 0.0) return m.support().high;
    if (v <= 0.5) return m.upper_quantile(v);
    const double w = m.ccdf(x);
    if (w <= 0.0) return m.support().low;
    return m.quantile(w);
  }
  const double c = fam.center(m);
  if (x == c) return c;
  const double t = 1.0 - tau_complement(fam, m, x);
  return x < c ? fam.b(m, t) : fam.a(m, t);
}

// ---------------------------------------------------------------------------

TrimmedMeanCurve TrimmedMeanCurve::build(const TrimmedFamily1D& fam, const Measure1D& m,
                                         const RealFunction& g, const QuadratureSpec& spec,
                                         std::size_t max_nodes) {
  spec.validate();
  fam.validate(m);
  const bool quant = fam.is_quantile();
  const double xi_max = quant ? 30.0 * std::log(10.0) : 15.0 * std::log(10.0);
  const double min_mass = 1e-30;

  std::vector<double> us;
  for (int k = 0; k <= 64; ++k) us.push_back(1.0 - 0.9 * k / 64.0);
  const double xi0 = std::log(10.0);
  for (int k = 1; k <= 64; ++k) us.push_back(std::exp(-(xi0 + (xi_max - xi0) * k / 64.0)));

  TrimmedMeanCurve c;
  std::vector<Node>& nodes = c.nodes_;
  for (double u : us) {
    const Ends e = endpoints(fam, m, u);
    if (e.pl + e.pu < min_mass) break;
    nodes.push_back(Node{u, -std::log(u), e.a, e.b, e.pl, e.pu, 0.0, 0.0, 0.0});
  }
  if (nodes.size() < 2) throw DegenerateError("trimmed regions exhaust the measure immediately");

  auto cell = [&](const Node& outer, const Node& inner, Tail side) {
    return side == Tail::lower ? integrate_side_range(m, side, g, inner.pl, outer.pl, spec)
                               : integrate_side_range(m, side, g, inner.pu, outer.pu, spec);
  };
  auto finish = [&](Node& n) {
    const double mass = n.pl + n.pu;
    n.G = (n.lower + n.upper) / mass;
  };

  {
    Node& last = nodes.back();
    const IntegrationResult lo = integrate_side_range(m, Tail::lower, g, 0.0, last.pl, spec);
    const IntegrationResult hi = integrate_side_range(m, Tail::upper, g, 0.0, last.pu, spec);
    last.lower = lo.value;
    last.upper = hi.value;
    c.error_ += lo.error + hi.error;
    finish(last);
  }
  for (std::size_t k = nodes.size() - 1; k-- > 0;) {
    const IntegrationResult lo = cell(nodes[k], nodes[k + 1], Tail::lower);
    const IntegrationResult hi = cell(nodes[k], nodes[k + 1], Tail::upper);
    nodes[k].lower = nodes[k + 1].lower + lo.value;
    nodes[k].upper = nodes[k + 1].upper + hi.value;
    c.error_ += lo.error + hi.error;
    finish(nodes[k]);
  }

  // Bisect (in xi) the cell where G changes most, weighted by mass^(1/4).
  while (nodes.size() < max_nodes) {
    double best = 0.0;
    std::size_t at = nodes.size();
    for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
      const Node& l = nodes[k];
      const Node& r = nodes[k + 1];
      if (r.xi - l.xi < 1e-6) continue;
      const double scale = std::abs(l.G) + std::abs(r.G) + std::numeric_limits<double>::min();
      const double mass = (l.pl + l.pu) - (r.pl + r.pu);
      const double ind = std::abs(l.G - r.G) / scale * std::pow(std::max(mass, 0.0), 0.25);
      if (ind > best) {
        best = ind;
        at = k;
      }
    }
    if (at == nodes.size() || best < 1e-12) break;
    const double xi = 0.5 * (nodes[at].xi + nodes[at + 1].xi);
    const double u = std::exp(-xi);
    const Ends e = endpoints(fam, m, u);
    Node mid{u, xi, e.a, e.b, e.pl, e.pu, 0.0, 0.0, 0.0};
    const IntegrationResult lo = cell(mid, nodes[at + 1], Tail::lower);
    const IntegrationResult hi = cell(mid, nodes[at + 1], Tail::upper);
    mid.lower = nodes[at + 1].lower + lo.value;
    mid.upper = nodes[at + 1].upper + hi.value;
    c.error_ += lo.error + hi.error;
    finish(mid);
    nodes.insert(nodes.begin() + static_cast<std::ptrdiff_t>(at) + 1, mid);
  }

  std::vector<double> xs, ys;
  for (const Node& n : nodes) {
    xs.push_back(n.xi);
    ys.push_back(n.G);
  }
  c.slopes_ = pchip_slopes(xs, ys);
  return c;
}

double TrimmedMeanCurve::at_complement(double u) const {
  const double xi = u >= 1.0 ? 0.0 : -std::log(u);
  if (xi <= nodes_.front().xi) return nodes_.front().G;
  if (xi >= nodes_.back().xi) {
    // continue a growing curve geometrically in xi so that G keeps pace with g
    const Node& r = nodes_.back();
    const Node& l = nodes_[nodes_.size() - 2];
    if (!(l.G > 0.0) || !(r.G > l.G)) return r.G;
    return r.G * std::exp(std::log(r.G / l.G) * (xi - r.xi) / (r.xi - l.xi));
  }
  auto it = std::upper_bound(nodes_.begin(), nodes_.end(), xi,
                             [](double v, const Node& n) { return v < n.xi; });
  const std::size_t k = static_cast<std::size_t>(it - nodes_.begin()) - 1;
  const Node& l = nodes_[k];
  const Node& r = nodes_[k + 1];
  const double h = r.xi - l.xi;
  const double s = (xi - l.xi) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
  const double h10 = s3 - 2.0 * s2 + s;
  const double h01 = -2.0 * s3 + 3.0 * s2;
  const double h11 = s3 - s2;
  const double v = h00 * l.G + h10 * h * slopes_[k] + h01 * r.G + h11 * h * slopes_[k + 1];
  // PCHIP stays within the cell's data range; guard against rounding.
  return std::clamp(v, std::min(l.G, r.G), std::max(l.G, r.G));
}

double TrimmedMeanCurve::min_value() const {
  double v = std::numeric_limits<double>::infinity();
  for (const Node& n : nodes_) v = std::min(v, n.G);
  return v;
}

// ---------------------------------------------------------------------------

BallTrimmingRd BallTrimmingRd::from_json(const nlohmann::json& spec, std::size_t dim) {
  BallTrimmingRd f;
  f.center.assign(dim, 0.0);
  if (spec.is_object() && spec.contains("center")) {
    const auto& c = spec.at("center");
    if (!c.is_array() || c.size() != dim) throw ConfigError("ball center must be an array of length d");
    for (std::size_t i = 0; i < dim; ++i) f.center[i] = c.at(i).get<double>();
  }
  return f;
}

nlohmann::json BallTrimmingRd::to_json() const { return {{"family", "ball"}, {"center", center}}; }

double tau_rd(const BallTrimmingRd& fam, std::span<const double> x) {
  if (x.size() != fam.center.size()) throw DimensionError("point and ball center differ in dimension");
  double r2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - fam.center[i];
    r2 += d * d;
  }
  const double r = std::sqrt(r2);
  return r / (1.0 + r);
}

Estimate trimmed_mean_rd(const BallTrimmingRd& fam, const ProductMeasure& pm, const Expr& g,
                         double t, std::uint64_t nsamples, std::uint64_t seed) {
  if (!(t >= 0.0 && t < 1.0)) throw DomainError("trimming level outside [0, 1)");
  const std::size_t d = pm.dimension();
  if (fam.center.size() != d) throw DimensionError("ball center and measure differ in dimension");
  if (g.max_variable() >= static_cast<int>(d)) throw DimensionError("function uses more coordinates than the measure has");
  auto work = [&](std::size_t chunk) {
    RandomStream rs(seed, streams::main, chunk);
    std::vector<double> u(d), x(d);
    Moments acc;
    for (std::uint64_t i = chunk_begin(chunk); i < chunk_end(chunk, nsamples); ++i) {
      for (auto& ui : u) ui = rs.uniform();
      pm.sample(u, x);
      if (tau_rd(fam, x) > t) acc.add(g.eval(x));
    }
    return acc;
  };
  Moments total;
  for (const Moments& part : map_chunks<Moments>(chunk_count(nsamples), work)) total.merge(part);
  if (total.count() < 100) {
    std::ostringstream os;
    os << "only " << total.count() << " samples fell outside D_t at t = " << t;
    throw DegenerateError(os.str());
  }
  return {total.mean(), total.std_error()};
}

// ---------------------------------------------------------------------------

IdentityCheck identity_checks(const Measure1D& m, std::size_t npoints, std::uint64_t seed,
                              const QuadratureSpec& spec) {
  spec.validate();
  const TrimmedFamily1D fam = TrimmedFamily1D::quantile();
  IdentityCheck out;
  const double med = m.median();
  std::vector<double> breaks = m.kinks();
  breaks.push_back(med);
  for (int k = 1; k <= 9; ++k) {
    const double t = 0.1 * k;
    const double a = fam.a(m, t);
    const double b = fam.b(m, t);
    auto mass_tau = [&](double x) { return 2.0 * fhat(m, x); };
    const double lm = adaptive_integrate([&](double x) { return m.density(x) / mass_tau(x); }, a, b, breaks,
                                         spec.rel_tol, spec.abs_tol, spec.max_depth).value;
    const double pw = adaptive_integrate([&](double x) { return m.density(x) / std::pow(mass_tau(x), 1.5); }, a, b,
                                         breaks, spec.rel_tol, spec.abs_tol, spec.max_depth).value;
    const double mt = 1.0 - t;
    IdentityCheck::Level lv{t, lm, -std::log(mt), pw, 2.0 * (1.0 / std::sqrt(mt) - 1.0)};
    out.max_identity_error = std::max({out.max_identity_error, std::abs(lv.log_mass - lv.log_mass_exact),
                                       std::abs(lv.power - lv.power_exact)});
    out.levels.push_back(lv);
  }

  RandomStream rs(seed, streams::main, 0);
  const std::vector<double> kinks = m.kinks();
  auto near_kink = [&](double x, double h) {
    return std::any_of(kinks.begin(), kinks.end(), [&](double k) { return std::abs(x - k) < 4.0 * h; });
  };
  for (std::size_t i = 0; i < npoints; ++i) {
    const double u = 0.01 + 0.98 * rs.uniform();
    const double x = m.quantile(u);
    const double F = m.cdf(x);
    const double fh = fhat(m, x);
    const double t = tau(fam, m, x);
    out.max_fhat_error = std::max(out.max_fhat_error, std::abs(fh - 0.5 * tail_mass(fam, m, t)));
    out.max_tau_error = std::max(out.max_tau_error, std::abs(t - std::abs(2.0 * F - 1.0)));
    const double s = conjugate(fam, m, x);
    out.max_involution_error =
        std::max(out.max_involution_error, std::abs(conjugate(fam, m, s) - x) / (1.0 + std::abs(x)));
    const double h = 1e-5 * (1.0 + std::abs(x));
    const double exact = -m.density(x) / m.density(s);
    if (near_kink(x, h) || near_kink(s, h * std::abs(exact)) || std::abs(x - med) < 4.0 * h) continue;
    const double fd = (conjugate(fam, m, x + h) - conjugate(fam, m, x - h)) / (2.0 * h);
    out.max_derivative_error = std::max(out.max_derivative_error, std::abs(fd - exact) / std::abs(exact));
    ++out.points;
  }
  return out;
}

}  // namespace entrobound
