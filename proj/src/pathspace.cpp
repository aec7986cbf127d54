#include "entrobound/pathspace.hpp"

#include <charconv>
#include <limits>
#include <cmath>
#include <sstream>
#include <type_traits>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "entrobound/errors.hpp"
#include "entrobound/parallel.hpp"
#include "entrobound/rng.hpp"

namespace entrobound {

namespace mp = boost::multiprecision;

namespace {

constexpr double kMaxLeaves = 1e6;

Rational parse_decimal(const std::string& text) {
  std::size_t i = 0;
  bool negative = false;
  if (i < text.size() && (text[i] == '+' || text[i] == '-')) negative = text[i++] == '-';
  mp::cpp_int mantissa = 0;
  int scale = 0;
  bool digits = false;
  bool frac = false;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (c >= '0' && c <= '9') {
      mantissa = mantissa * 10 + (c - '0');
      digits = true;
      if (frac) --scale;
    } else if (c == '.' && !frac) {
      frac = true;
    } else {
      break;
    }
  }
  if (!digits) throw ConfigError("malformed number '" + text + "'");
  if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
    int e = 0;
    auto [ptr, ec] = std::from_chars(text.data() + i + 1 + (text[i + 1] == '+' ? 1 : 0), text.data() + text.size(), e);
    if (ec != std::errc() || ptr != text.data() + text.size()) throw ConfigError("malformed number '" + text + "'");
    scale += e;
    i = text.size();
  }
  if (i != text.size()) throw ConfigError("malformed number '" + text + "'");
  Rational r(mantissa);
  mp::cpp_int ten = 1;
  for (int k = 0; k < std::abs(scale); ++k) ten *= 10;
  r = scale >= 0 ? r * Rational(ten) : r / Rational(ten);
  return negative ? Rational(-r) : r;
}

template <class Real>
Real to_real(const Rational& r) {
  if constexpr (std::is_floating_point_v<Real>) {
    return mp::numerator(r).template convert_to<Real>() / mp::denominator(r).template convert_to<Real>();
  } else {
    return Real(mp::numerator(r)) / Real(mp::denominator(r));
  }
}

template <class Real>
struct StepReal {
  std::vector<Real> p;
  std::vector<bool> mult;
  std::vector<Real> value;
};

template <class Real>
std::vector<StepReal<Real>> real_steps(const MartingaleModel& model) {
  std::vector<StepReal<Real>> out;
  for (const auto& step : model.steps()) {
    StepReal<Real> s;
    for (const Branch& b : step) {
      if (b.p == 0) continue;
      s.p.push_back(to_real<Real>(b.p));
      s.mult.push_back(b.kind == Branch::Kind::mult);
      s.value.push_back(to_real<Real>(b.value));
    }
    out.push_back(std::move(s));
  }
  return out;
}

template <class Real>
struct Enumerator {
  const std::vector<StepReal<Real>>& steps;
  Real ent{0}, mean{0}, bound{0};

  void visit(std::size_t depth, const Real& M, const Real& P) {
    using std::log;
    if (depth == steps.size()) {
      if (M > 0) ent += P * M * log(M);
      mean += P * M;
      return;
    }
    const StepReal<Real>& s = steps[depth];
    Real var{0};
    for (std::size_t i = 0; i < s.p.size(); ++i) {
      const Real inc = s.mult[i] ? Real(M * (s.value[i] - 1)) : s.value[i];
      var += s.p[i] * inc * inc;
    }
    if (var > 0) bound += P * var / M;
    for (std::size_t i = 0; i < s.p.size(); ++i) {
      const Real next = s.mult[i] ? Real(M * s.value[i]) : Real(M + s.value[i]);
      if (next < 0) {
        std::ostringstream os;
        os << "martingale reaches a negative value at step " << depth + 1;
        throw NegativeValueError(os.str());
      }
      visit(depth + 1, next, Real(P * s.p[i]));
    }
  }
};

void check_arity(const Expr& F, std::size_t n) {
  if (F.max_variable() >= static_cast<int>(n)) {
    throw DimensionError("functional uses more coordinates than it has arguments");
  }
}

}  // namespace

Rational parse_rational(const nlohmann::json& v) {
  if (v.is_number_integer()) return Rational(v.get<long long>());
  if (v.is_number_unsigned()) return Rational(v.get<unsigned long long>());
  if (v.is_number_float()) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v.get<double>());
    if (ec != std::errc()) throw ConfigError("cannot format number");
    return parse_decimal(std::string(buf, ptr));
  }
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    const auto slash = s.find('/');
    if (slash == std::string::npos) return parse_decimal(s);
    const Rational den = parse_decimal(s.substr(slash + 1));
    if (den == 0) throw ConfigError("zero denominator in '" + s + "'");
    return parse_decimal(s.substr(0, slash)) / den;
  }
  throw ConfigError("expected a number or a fraction string");
}

MartingaleModel::MartingaleModel(Rational initial, std::vector<std::vector<Branch>> steps,
                                 std::vector<double> time_grid)
    : initial_(std::move(initial)), steps_(std::move(steps)), time_grid_(std::move(time_grid)) {
  if (initial_ <= 0) throw ValidationError("martingale needs a positive initial value");
  for (std::size_t k = 0; k < steps_.size(); ++k) {
    const auto& step = steps_[k];
    if (step.empty()) throw ValidationError("empty branch list at step " + std::to_string(k + 1));
    Rational total = 0, mult_mean = 0, add_mean = 0;
    for (const Branch& b : step) {
      if (b.p < 0) throw ValidationError("negative probability at step " + std::to_string(k + 1));
      if (b.kind == Branch::Kind::mult) {
        if (b.value < 0) throw NegativeValueError("negative multiplier at step " + std::to_string(k + 1));
        mult_mean += b.p * (b.value - 1);
      } else {
        add_mean += b.p * b.value;
      }
      total += b.p;
    }
    if (total != 1) throw ValidationError("probabilities at step " + std::to_string(k + 1) + " do not sum to 1");
    if (mult_mean != 0 || add_mean != 0) {
      throw NonMartingaleError("branch distribution at step " + std::to_string(k + 1) + " has nonzero mean increment");
    }
  }
  const std::size_t n = steps_.size();
  if (time_grid_.empty()) {
    for (std::size_t k = 0; k <= n; ++k) time_grid_.push_back(n == 0 ? 0.0 : static_cast<double>(k) / n);
  } else {
    if (time_grid_.size() != n + 1) throw ValidationError("time_grid needs one more entry than there are steps");
    for (std::size_t k = 0; k < time_grid_.size(); ++k) {
      if (time_grid_[k] < 0.0 || time_grid_[k] > 1.0 || (k > 0 && !(time_grid_[k] > time_grid_[k - 1]))) {
        throw ValidationError("time_grid must increase within [0, 1]");
      }
    }
  }
}

MartingaleModel MartingaleModel::from_json(const nlohmann::json& spec) {
  if (!spec.is_object() || !spec.contains("initial") || !spec.contains("steps") || !spec.at("steps").is_array()) {
    throw ConfigError("martingale model needs 'initial' and a 'steps' array");
  }
  std::vector<std::vector<Branch>> steps;
  for (const auto& s : spec.at("steps")) {
    if (!s.is_array()) throw ConfigError("each step must be an array of branches");
    std::vector<Branch> branches;
    for (const auto& b : s) {
      if (!b.is_object() || !b.contains("p")) throw ConfigError("each branch needs 'p'");
      Branch br;
      br.p = parse_rational(b.at("p"));
      if (b.contains("mult") == b.contains("add")) throw ConfigError("each branch needs exactly one of 'mult' or 'add'");
      br.kind = b.contains("mult") ? Branch::Kind::mult : Branch::Kind::add;
      br.value = parse_rational(b.contains("mult") ? b.at("mult") : b.at("add"));
      branches.push_back(std::move(br));
    }
    steps.push_back(std::move(branches));
  }
  std::vector<double> grid;
  if (spec.contains("time_grid")) grid = spec.at("time_grid").get<std::vector<double>>();
  return MartingaleModel(parse_rational(spec.at("initial")), std::move(steps), std::move(grid));
}

nlohmann::json MartingaleModel::to_json() const {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& step : steps_) {
    nlohmann::json s = nlohmann::json::array();
    for (const Branch& b : step) {
      s.push_back({{"p", b.p.str()}, {b.kind == Branch::Kind::mult ? "mult" : "add", b.value.str()}});
    }
    steps.push_back(s);
  }
  return {{"initial", initial_.str()}, {"steps", steps}, {"time_grid", time_grid_}};
}

double MartingaleModel::leaf_count() const {
  double n = 1.0;
  for (const auto& step : steps_) {
    std::size_t live = 0;
    for (const Branch& b : step) live += b.p != 0 ? 1 : 0;
    n *= static_cast<double>(live);
  }
  return n;
}

template <class Real>
Theorem1Exact<Real> theorem1_enumerate(const MartingaleModel& model) {
  if (model.leaf_count() > kMaxLeaves) {
    std::ostringstream os;
    os << "tree has " << model.leaf_count() << " leaves, above the enumeration limit of 1e6";
    throw ValidationError(os.str());
  }
  const auto steps = real_steps<Real>(model);
  Enumerator<Real> e{steps};
  e.visit(0, to_real<Real>(model.initial()), Real(1));
  using std::log;
  Real ent = e.ent - e.mean * log(e.mean);
  if (ent < 0) ent = Real(0);
  return {ent, e.bound};
}

template Theorem1Exact<double> theorem1_enumerate<double>(const MartingaleModel&);
template Theorem1Exact<long double> theorem1_enumerate<long double>(const MartingaleModel&);

Theorem1Exact<double> theorem1_enumerate_quad(const MartingaleModel& model) {
  const auto r = theorem1_enumerate<mp::cpp_bin_float_quad>(model);
  return {r.entropy.convert_to<double>(), r.bound.convert_to<double>()};
}

Theorem1Mc theorem1_mc(const MartingaleModel& model, std::uint64_t nsamples, std::uint64_t seed) {
  if (nsamples < 2) throw ValidationError("Monte Carlo needs at least two samples");
  const auto steps = real_steps<double>(model);
  // Per step: cumulative probabilities and the variance coefficients.
  struct Prepared {
    std::vector<double> cum;
    double vm = 0.0, va = 0.0;
  };
  std::vector<Prepared> prep;
  for (const auto& s : steps) {
    Prepared p;
    double c = 0.0;
    for (std::size_t i = 0; i < s.p.size(); ++i) {
      c += s.p[i];
      p.cum.push_back(c);
      if (s.mult[i]) p.vm += s.p[i] * (s.value[i] - 1.0) * (s.value[i] - 1.0);
      else p.va += s.p[i] * s.value[i] * s.value[i];
    }
    p.cum.back() = 1.0;
    prep.push_back(std::move(p));
  }
  const double m0 = to_real<double>(model.initial());
  auto work = [&](std::size_t chunk) {
    RandomStream rs(seed, streams::main, chunk);
    CoMoments<3> acc;
    for (std::uint64_t n = chunk_begin(chunk); n < chunk_end(chunk, nsamples); ++n) {
      double M = m0;
      double b = 0.0;
      for (std::size_t k = 0; k < steps.size(); ++k) {
        const Prepared& p = prep[k];
        const double var = M * M * p.vm + p.va;
        if (var > 0.0) b += var / M;
        const double u = rs.uniform();
        std::size_t i = 0;
        while (i + 1 < p.cum.size() && u > p.cum[i]) ++i;
        M = steps[k].mult[i] ? M * steps[k].value[i] : M + steps[k].value[i];
        if (M < 0.0) throw NegativeValueError("martingale reaches a negative value");
      }
      acc.add({xlogx(M), M, b});
    }
    return acc;
  };
  const auto parts = map_chunks<CoMoments<3>>(chunk_count(nsamples), work);
  Theorem1Mc out;
  CoMoments<3> total;
  std::uint64_t next_mark = kChunkSize;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    total.merge(parts[i]);
    if (total.count() >= next_mark || i + 1 == parts.size()) {
      out.convergence.push_back({total.count(), entropy_estimate(total, 0, 1),
                                 {total.mean(2), total.linear_std_error({0.0, 0.0, 1.0})}});
      while (next_mark <= total.count()) next_mark *= 2;
    }
  }
  out.entropy = entropy_estimate(total, 0, 1);
  out.bound = {total.mean(2), total.linear_std_error({0.0, 0.0, 1.0})};
  return out;
}

// ---------------------------------------------------------------------------

CylinderFunctional CylinderFunctional::from_json(const nlohmann::json& spec) {
  if (!spec.is_object()) throw ConfigError("cylinder functional spec must be an object");
  CylinderFunctional cf;
  const std::string mode = spec.value("mode", std::string("brownian"));
  if (mode == "brownian") cf.mode = Mode::brownian;
  else if (mode == "poisson") cf.mode = Mode::poisson;
  else throw ConfigError("unknown cylinder mode '" + mode + "'");
  if (!spec.contains("F") || !spec.at("F").is_string()) throw ConfigError("cylinder functional needs a string 'F'");
  cf.F = parse(spec.at("F").get<std::string>());
  if (cf.mode == Mode::brownian) {
    if (!spec.contains("times")) throw ConfigError("brownian functional needs 'times'");
    cf.times = spec.at("times").get<std::vector<double>>();
    if (cf.times.empty()) throw ConfigError("'times' must not be empty");
    for (std::size_t k = 0; k < cf.times.size(); ++k) {
      if (!(cf.times[k] > (k == 0 ? 0.0 : cf.times[k - 1]))) throw ConfigError("'times' must be positive and increasing");
    }
    cf.arity = cf.times.size();
  } else {
    const int used = cf.F.max_variable() + 1;
    cf.arity = spec.contains("n") ? spec.at("n").get<std::size_t>() : static_cast<std::size_t>(std::max(used, 1));
    if (cf.arity == 0) throw ConfigError("'n' must be positive");
  }
  check_arity(cf.F, cf.arity);
  return cf;
}

nlohmann::json CylinderFunctional::to_json() const {
  nlohmann::json j{{"mode", mode == Mode::brownian ? "brownian" : "poisson"}, {"F", print(F)}};
  if (mode == Mode::brownian) j["times"] = times;
  else j["n"] = arity;
  return j;
}

namespace {

// Columns: ξ^2 log ξ^2, ξ^2, ‖Dξ‖^2.
struct PathAcc {
  CoMoments<3> co;
  Moments xi;
  void merge(const PathAcc& o) {
    co.merge(o.co);
    xi.merge(o.xi);
  }
};

BoundReport finish_path_report(const std::string& method, const PathAcc& acc, double factor) {
  BoundReport r;
  r.method = method;
  const Estimate ent = entropy_estimate(acc.co, 0, 1);
  r.entropy = ent.value;
  r.entropy_sigma = ent.sigma;
  r.bound = factor * acc.co.mean(2);
  r.bound_sigma = factor * acc.co.linear_std_error({0.0, 0.0, 1.0});
  r.finish();
  const double kurt = acc.xi.excess_kurtosis();
  r.params["samples"] = acc.co.count();
  r.params["xi_excess_kurtosis"] = kurt;
  if (kurt > 100.0) {
    std::ostringstream os;
    os << "sample excess kurtosis of xi is " << kurt << "; entropy error bars may be unreliable";
    r.warnings.push_back(os.str());
  }
  return r;
}

}  // namespace

BoundReport brownian_cylinder_check(const CylinderFunctional& cf, std::uint64_t nsamples, std::uint64_t seed) {
  if (cf.mode != CylinderFunctional::Mode::brownian) throw ValidationError("functional is not in brownian mode");
  if (nsamples < 2) throw ValidationError("Monte Carlo needs at least two samples");
  const std::size_t n = cf.times.size();
  check_arity(cf.F, n);
  std::vector<Expr> dF;
  for (std::size_t i = 0; i < n; ++i) dF.push_back(deriv(cf.F, static_cast<int>(i)));
  std::vector<double> dt(n), sd(n);
  for (std::size_t k = 0; k < n; ++k) {
    dt[k] = cf.times[k] - (k == 0 ? 0.0 : cf.times[k - 1]);
    sd[k] = std::sqrt(dt[k]);
  }
  auto work = [&](std::size_t chunk) {
    RandomStream rs(seed, streams::main, chunk);
    PathAcc acc;
    std::vector<double> B(n);
    for (std::uint64_t s = chunk_begin(chunk); s < chunk_end(chunk, nsamples); ++s) {
      double b = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        b += sd[k] * rs.normal();
        B[k] = b;
      }
      const double xi = cf.F.eval(B);
      double S = 0.0, norm = 0.0;
      for (std::size_t k = n; k-- > 0;) {
        S += dF[k].eval(B);
        norm += S * S * dt[k];
      }
      const double y = xi * xi;
      acc.co.add({xlogx(y), y, norm});
      acc.xi.add(xi);
    }
    return acc;
  };
  PathAcc total;
  for (const PathAcc& p : map_chunks<PathAcc>(chunk_count(nsamples), work)) total.merge(p);
  BoundReport r = finish_path_report("mc-brownian", total, 2.0);
  r.params["functional"] = cf.to_json();
  return r;
}

BoundReport poisson_functional_check(const CylinderFunctional& cf, double rate, std::uint64_t nsamples,
                                     std::uint64_t seed) {
  if (cf.mode != CylinderFunctional::Mode::poisson) throw ValidationError("functional is not in poisson mode");
  if (!(rate > 0.0)) throw DomainError("Poisson rate must be positive");
  if (nsamples < 2) throw ValidationError("Monte Carlo needs at least two samples");
  const std::size_t n = cf.arity;
  check_arity(cf.F, n);
  std::vector<Expr> dF;
  for (std::size_t k = 0; k < n; ++k) {
    dF.push_back(deriv(cf.F, static_cast<int>(k)));
    if (!compactly_supported_in(dF.back(), static_cast<int>(k))) {
      std::ostringstream os;
      os << "partial derivative in x" << k + 1 << " is not compactly supported in that argument";
      throw SupportError(os.str());
    }
  }
  auto work = [&](std::size_t chunk) {
    RandomStream rs(seed, streams::main, chunk);
    PathAcc acc;
    std::vector<double> T(n);
    for (std::uint64_t s = chunk_begin(chunk); s < chunk_end(chunk, nsamples); ++s) {
      double t = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        t += rs.exponential(rate);
        T[k] = t;
      }
      const double xi = cf.F.eval(T);
      double S = 0.0, norm = 0.0;
      for (std::size_t k = n; k-- > 0;) {
        S += dF[k].eval(T);
        norm += S * S * (T[k] - (k == 0 ? 0.0 : T[k - 1]));
      }
      const double y = xi * xi;
      acc.co.add({xlogx(y), y, norm});
      acc.xi.add(xi);
    }
    return acc;
  };
  PathAcc total;
  for (const PathAcc& p : map_chunks<PathAcc>(chunk_count(nsamples), work)) total.merge(p);
  BoundReport r = finish_path_report("mc-poisson", total, 4.0 / rate);
  r.params["functional"] = cf.to_json();
  r.params["rate"] = rate;
  return r;
}

// ---------------------------------------------------------------------------

TrimmingMc trimming_martingale_mc(const Measure1D& m, const TrimmedFamily1D& fam, const RealFunction& g,
                                  const TrimmedMeanCurve& curve, std::uint64_t nsamples, std::uint64_t seed) {
  if (nsamples < 2) throw ValidationError("Monte Carlo needs at least two samples");
  struct Draw {
    double x, uc;
  };
  auto draw = [&](RandomStream& rs) {
    const double u = rs.uniform();
    if (u <= 0.5) {
      const double x = m.quantile(u);
      return Draw{x, fam.is_quantile() ? 2.0 * u : 1.0 - tau(fam, m, x)};
    }
    const double s = 1.0 - u;
    const double x = m.upper_quantile(s);
    return Draw{x, fam.is_quantile() ? 2.0 * s : 1.0 - tau(fam, m, x)};
  };
  const std::size_t chunks = chunk_count(nsamples);
  double gmin = std::numeric_limits<double>::infinity();
  for (double v : map_chunks<double>(chunks, [&](std::size_t chunk) {
         RandomStream rs(seed, streams::main, chunk);
         double lo = std::numeric_limits<double>::infinity();
         for (std::uint64_t i = chunk_begin(chunk); i < chunk_end(chunk, nsamples); ++i) lo = std::min(lo, g(draw(rs).x));
         return lo;
       })) {
    gmin = std::min(gmin, v);
  }
  if (gmin < -1e-12) throw NegativeFunctionError("function takes negative values");
  const double eps = gmin < 1e-6 ? 1e-6 : 0.0;
  auto work = [&](std::size_t chunk) {
    RandomStream rs(seed, streams::main, chunk);
    Moments acc;
    for (std::uint64_t i = chunk_begin(chunk); i < chunk_end(chunk, nsamples); ++i) {
      const Draw d = draw(rs);
      const double G = curve.at_complement(d.uc) + eps;
      const double gv = std::max(g(d.x), 0.0) + eps;
      if (!(G > 0.0)) {
        if (gv != 0.0) throw DegenerateError("trimmed mean vanishes where g does not");
        acc.add(0.0);
        continue;
      }
      const double diff = gv - G;
      // rounding-level differences count as zero, as in the quadrature
      const bool level = std::abs(diff) <= 64 * std::numeric_limits<double>::epsilon() * std::max(gv, G);
      acc.add(level ? 0.0 : diff * (diff / G));
    }
    return acc;
  };
  Moments total;
  for (const Moments& p : map_chunks<Moments>(chunks, work)) total.merge(p);
  return {{total.mean(), total.std_error()}, eps};
}

TrimmingMc trimming_martingale_mc(const Measure1D& m, const TrimmedFamily1D& fam, const RealFunction& g,
                                  std::uint64_t nsamples, std::uint64_t seed, const QuadratureSpec& spec) {
  const TrimmedMeanCurve curve = TrimmedMeanCurve::build(fam, m, g, spec);
  return trimming_martingale_mc(m, fam, g, curve, nsamples, seed);
}

}  // namespace entrobound
