#include "entrobound/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/erf.hpp>

#include "entrobound/errors.hpp"

namespace entrobound {

namespace detail {

class Distribution {
 public:
  virtual ~Distribution() = default;
  virtual Measure1D::Kind kind() const = 0;
  virtual double density(double x) const = 0;
  virtual double cdf(double x) const = 0;
  virtual double ccdf(double x) const = 0;
  virtual Interval support() const = 0;
  virtual nlohmann::json to_json() const = 0;
  // Characteristic width used for bracketing.
  virtual double scale() const = 0;
  virtual std::vector<double> kink_points() const { return {}; }
  virtual double guess(double s, Tail side) const = 0;

  // Closed forms override these; the default is the bracketing solver.
  virtual double lower_quantile(double v) const { return solve(v, Tail::lower); }
  virtual double upper_quantile(double w) const { return solve(w, Tail::upper); }

 protected:
  double solve(double target, Tail side) const;
};

// Solves cdf(x) = target (lower) or ccdf(x) = target (upper). The residual is
// arranged to be nondecreasing in x in both cases. Bracket expansion, then
// Newton steps that stay inside the bracket, falling back to bisection.
double Distribution::solve(double target, Tail side) const {
  auto resid = [&](double x) {
    return side == Tail::lower ? cdf(x) - target : target - ccdf(x);
  };
  const Interval sup = support();
  const double width = scale();
  double x = std::clamp(guess(target, side), sup.low, sup.high);
  double r = resid(x);
  const double tol = 4.0 * std::numeric_limits<double>::epsilon() * target;
  if (std::abs(r) <= tol) return x;

  double lo = x, hi = x;
  double rlo = r, rhi = r;
  double step = width;
  int expansions = 0;
  while (rlo > 0.0) {
    if (++expansions > 4000) throw ConvergenceError("quantile: cannot bracket from below");
    hi = lo;
    rhi = rlo;
    lo = std::max(lo - step, sup.low);
    rlo = resid(lo);
    step *= 2.0;
    if (lo == sup.low && rlo > 0.0) throw ConvergenceError("quantile: target below support");
  }
  while (rhi < 0.0) {
    if (++expansions > 4000) throw ConvergenceError("quantile: cannot bracket from above");
    lo = hi;
    rlo = rhi;
    hi = std::min(hi + step, sup.high);
    rhi = resid(hi);
    step *= 2.0;
    if (hi == sup.high && rhi < 0.0) throw ConvergenceError("quantile: target above support");
  }
  if (rlo == 0.0) return lo;
  if (rhi == 0.0) return hi;

  double best = std::abs(rlo) < std::abs(rhi) ? lo : hi;
  double best_r = std::min(std::abs(rlo), std::abs(rhi));
  x = (x > lo && x < hi) ? x : 0.5 * (lo + hi);
  for (int it = 0; it < 400; ++it) {
    r = resid(x);
    if (std::abs(r) < best_r) {
      best = x;
      best_r = std::abs(r);
    }
    if (std::abs(r) <= tol) return x;
    if (r < 0.0) lo = x; else hi = x;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() *
                       std::max(std::abs(lo), std::abs(hi)) +
                       std::numeric_limits<double>::denorm_min()) {
      return best;
    }
    const double p = density(x);
    double next = 0.5 * (lo + hi);
    // Newton only where the density is not flat relative to the target.
    if (p > 1e-12 * target / width) {
      const double nx = x - r / p;
      if (nx > lo && nx < hi) next = nx;
    }
    x = next;
  }
  if (best_r <= 1e-12) return best;
  throw ConvergenceError("quantile: no convergence within iteration limit");
}

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

class Gaussian final : public Distribution {
 public:
  Gaussian(double mean, double sd) : mean_(mean), sd_(sd) {
    if (!std::isfinite(mean) || !(sd > 0.0) || !std::isfinite(sd)) {
      throw ValidationError("gaussian requires finite mean and std > 0");
    }
  }
  Measure1D::Kind kind() const override { return Measure1D::Kind::gaussian; }
  double density(double x) const override {
    const double z = (x - mean_) / sd_;
    return kInvSqrt2Pi * std::exp(-0.5 * z * z) / sd_;
  }
  double cdf(double x) const override { return 0.5 * std::erfc(-(x - mean_) / (sd_ * kSqrt2)); }
  double ccdf(double x) const override { return 0.5 * std::erfc((x - mean_) / (sd_ * kSqrt2)); }
  Interval support() const override {
    return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  }
  double scale() const override { return sd_; }
  double guess(double s, Tail side) const override {
    const double z = kSqrt2 * boost::math::erfc_inv(2.0 * s);
    return side == Tail::lower ? mean_ - sd_ * z : mean_ + sd_ * z;
  }
  nlohmann::json to_json() const override {
    return {{"kind", "gaussian"}, {"mean", mean_}, {"std", sd_}};
  }

 private:
  double mean_, sd_;
};

class Uniform final : public Distribution {
 public:
  Uniform(double a, double b) : a_(a), b_(b) {
    if (!std::isfinite(a) || !std::isfinite(b) || !(b > a)) {
      throw ValidationError("uniform requires finite a < b");
    }
  }
  Measure1D::Kind kind() const override { return Measure1D::Kind::uniform; }
  double density(double x) const override { return (x >= a_ && x <= b_) ? 1.0 / (b_ - a_) : 0.0; }
  double cdf(double x) const override { return std::clamp((x - a_) / (b_ - a_), 0.0, 1.0); }
  double ccdf(double x) const override { return std::clamp((b_ - x) / (b_ - a_), 0.0, 1.0); }
  Interval support() const override { return {a_, b_}; }
  double scale() const override { return b_ - a_; }
  std::vector<double> kink_points() const override { return {a_, b_}; }
  double guess(double s, Tail side) const override {
    return side == Tail::lower ? lower_quantile(s) : upper_quantile(s);
  }
  double lower_quantile(double v) const override { return a_ + v * (b_ - a_); }
  double upper_quantile(double w) const override { return b_ - w * (b_ - a_); }
  nlohmann::json to_json() const override { return {{"kind", "uniform"}, {"a", a_}, {"b", b_}}; }

 private:
  double a_, b_;
};

class Exponential final : public Distribution {
 public:
  explicit Exponential(double rate) : rate_(rate) {
    if (!(rate > 0.0) || !std::isfinite(rate)) throw ValidationError("exponential requires rate > 0");
  }
  Measure1D::Kind kind() const override { return Measure1D::Kind::exponential; }
  double density(double x) const override { return x < 0.0 ? 0.0 : rate_ * std::exp(-rate_ * x); }
  double cdf(double x) const override { return x <= 0.0 ? 0.0 : -std::expm1(-rate_ * x); }
  double ccdf(double x) const override { return x <= 0.0 ? 1.0 : std::exp(-rate_ * x); }
  Interval support() const override { return {0.0, std::numeric_limits<double>::infinity()}; }
  double scale() const override { return 1.0 / rate_; }
  std::vector<double> kink_points() const override { return {0.0}; }
  double guess(double s, Tail side) const override {
    return side == Tail::lower ? lower_quantile(s) : upper_quantile(s);
  }
  double lower_quantile(double v) const override { return -std::log1p(-v) / rate_; }
  double upper_quantile(double w) const override { return -std::log(w) / rate_; }
  nlohmann::json to_json() const override { return {{"kind", "exponential"}, {"rate", rate_}}; }

 private:
  double rate_;
};

class Logistic final : public Distribution {
 public:
  Logistic(double loc, double scale) : loc_(loc), s_(scale) {
    if (!std::isfinite(loc) || !(scale > 0.0) || !std::isfinite(scale)) {
      throw ValidationError("logistic requires finite loc and scale > 0");
    }
  }
  Measure1D::Kind kind() const override { return Measure1D::Kind::logistic; }
  double density(double x) const override {
    const double e = std::exp(-std::abs((x - loc_) / s_));
    return e / (s_ * (1.0 + e) * (1.0 + e));
  }
  double cdf(double x) const override { return sigmoid((x - loc_) / s_); }
  double ccdf(double x) const override { return sigmoid(-(x - loc_) / s_); }
  Interval support() const override {
    return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  }
  double scale() const override { return s_; }
  double guess(double s, Tail side) const override {
    return side == Tail::lower ? lower_quantile(s) : upper_quantile(s);
  }
  double lower_quantile(double v) const override { return loc_ + s_ * (std::log(v) - std::log1p(-v)); }
  double upper_quantile(double w) const override { return loc_ - s_ * (std::log(w) - std::log1p(-w)); }
  nlohmann::json to_json() const override {
    return {{"kind", "logistic"}, {"loc", loc_}, {"scale", s_}};
  }

 private:
  static double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
  }
  double loc_, s_;
};

}  // namespace

class Mixture final : public Distribution {
 public:
  Mixture(std::vector<double> weights, std::vector<Measure1D> parts)
      : weights_(std::move(weights)), parts_(std::move(parts)) {
    if (weights_.empty() || weights_.size() != parts_.size()) {
      throw ValidationError("mixture needs one weight per part and at least one part");
    }
    double total = 0.0;
    for (double w : weights_) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("mixture weights must be >= 0");
      total += w;
    }
    if (!(total > 0.0)) throw ValidationError("mixture weights must not all be zero");
    for (double& w : weights_) w /= total;
  }
  Measure1D::Kind kind() const override { return Measure1D::Kind::mixture; }
  double density(double x) const override {
    double s = 0.0;
    for (std::size_t i = 0; i < parts_.size(); ++i) s += weights_[i] * parts_[i].density(x);
    return s;
  }
  double cdf(double x) const override {
    double s = 0.0;
    for (std::size_t i = 0; i < parts_.size(); ++i) s += weights_[i] * parts_[i].cdf(x);
    return std::min(s, 1.0);
  }
  double ccdf(double x) const override {
    double s = 0.0;
    for (std::size_t i = 0; i < parts_.size(); ++i) s += weights_[i] * parts_[i].ccdf(x);
    return std::min(s, 1.0);
  }
  Interval support() const override {
    Interval out{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (std::size_t i = 0; i < parts_.size(); ++i) {
      if (weights_[i] == 0.0) continue;
      const Interval s = parts_[i].support();
      out.low = std::min(out.low, s.low);
      out.high = std::max(out.high, s.high);
    }
    return out;
  }
  double scale() const override {
    double s = 0.0;
    for (std::size_t i = 0; i < parts_.size(); ++i) {
      const Interval sup = parts_[i].support();
      const double w = std::isfinite(sup.high - sup.low)
                           ? sup.high - sup.low
                           : parts_[i].upper_quantile(0.25) - parts_[i].quantile(0.25);
      s = std::max(s, w);
    }
    return s > 0.0 ? s : 1.0;
  }
  std::vector<double> kink_points() const override {
    std::vector<double> out;
    for (const auto& p : parts_) {
      for (double x : p.kinks()) out.push_back(x);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
  double guess(double s, Tail side) const override {
    double g = 0.0;
    for (std::size_t i = 0; i < parts_.size(); ++i) {
      g += weights_[i] * (side == Tail::lower ? parts_[i].quantile(s) : parts_[i].upper_quantile(s));
    }
    return g;
  }
  nlohmann::json to_json() const override {
    nlohmann::json parts = nlohmann::json::array();
    for (const auto& p : parts_) parts.push_back(p.to_json());
    return {{"kind", "mixture"}, {"weights", weights_}, {"parts", parts}};
  }

 private:
  std::vector<double> weights_;
  std::vector<Measure1D> parts_;
};

class GridDensity final : public Distribution {
 public:
  GridDensity(std::vector<double> xs, std::vector<double> ps) : xs_(std::move(xs)), ps_(std::move(ps)) {
    if (xs_.size() < 2 || xs_.size() != ps_.size()) {
      throw ValidationError("grid density needs matching xs/ps of length >= 2");
    }
    for (std::size_t i = 0; i < xs_.size(); ++i) {
      if (!std::isfinite(xs_[i]) || !std::isfinite(ps_[i])) throw ValidationError("grid values must be finite");
      if (ps_[i] < 0.0) throw ValidationError("grid density values must be nonnegative");
      if (i > 0 && !(xs_[i] > xs_[i - 1])) throw ValidationError("grid xs must be strictly increasing");
    }
    raw_ps_ = ps_;
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < xs_.size(); ++i) total += 0.5 * (ps_[i] + ps_[i + 1]) * (xs_[i + 1] - xs_[i]);
    if (!(total > 0.0)) throw ValidationError("grid density values must not all be zero");
    for (double& p : ps_) p /= total;
    const std::size_t n = xs_.size();
    left_.assign(n, 0.0);
    right_.assign(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) left_[i + 1] = left_[i] + segment_mass(i);
    for (std::size_t i = n - 1; i > 0; --i) right_[i - 1] = right_[i] + segment_mass(i - 1);
  }
  Measure1D::Kind kind() const override { return Measure1D::Kind::grid; }
  double density(double x) const override {
    if (x < xs_.front() || x > xs_.back()) return 0.0;
    const std::size_t i = segment(x);
    const double h = xs_[i + 1] - xs_[i];
    const double u = (x - xs_[i]) / h;
    return ps_[i] + (ps_[i + 1] - ps_[i]) * u;
  }
  double cdf(double x) const override {
    if (x <= xs_.front()) return 0.0;
    if (x >= xs_.back()) return 1.0;
    const std::size_t i = segment(x);
    const double h = xs_[i + 1] - xs_[i];
    const double d = x - xs_[i];
    const double k = (ps_[i + 1] - ps_[i]) / (2.0 * h);
    return std::min(1.0, left_[i] + ps_[i] * d + k * d * d);
  }
  double ccdf(double x) const override {
    if (x <= xs_.front()) return 1.0;
    if (x >= xs_.back()) return 0.0;
    const std::size_t i = segment(x);
    const double h = xs_[i + 1] - xs_[i];
    const double e = xs_[i + 1] - x;
    const double k = (ps_[i + 1] - ps_[i]) / (2.0 * h);
    return std::min(1.0, right_[i + 1] + ps_[i + 1] * e - k * e * e);
  }
  Interval support() const override { return {xs_.front(), xs_.back()}; }
  double scale() const override { return xs_.back() - xs_.front(); }
  std::vector<double> kink_points() const override { return xs_; }
  double guess(double s, Tail side) const override {
    return side == Tail::lower ? lower_quantile(s) : upper_quantile(s);
  }
  double lower_quantile(double v) const override {
    // First knot whose cumulative mass exceeds v; zero-mass segments are skipped.
    auto it = std::upper_bound(left_.begin(), left_.end(), v);
    if (it == left_.end()) return xs_.back();
    const std::size_t i = static_cast<std::size_t>(it - left_.begin()) - 1;
    const double h = xs_[i + 1] - xs_[i];
    const double k = (ps_[i + 1] - ps_[i]) / (2.0 * h);
    const double c = v - left_[i];
    const double b = ps_[i];
    const double disc = std::max(0.0, b * b + 4.0 * k * c);
    const double den = b + std::sqrt(disc);
    const double d = den > 0.0 ? 2.0 * c / den : 0.0;
    return xs_[i] + std::clamp(d, 0.0, h);
  }
  double upper_quantile(double w) const override {
    // right_ is nonincreasing; find the segment [i, i+1] with right_[i+1] <= w < right_[i].
    const std::size_t n = xs_.size();
    std::size_t i = n - 1;
    {
      auto first_le = std::lower_bound(right_.begin(), right_.end(), w,
                                       [](double r, double val) { return r > val; });
      // first index j with right_[j] <= w
      const std::size_t j = static_cast<std::size_t>(first_le - right_.begin());
      if (j == 0) return xs_.front();
      i = j - 1;
    }
    const double h = xs_[i + 1] - xs_[i];
    const double k = (ps_[i + 1] - ps_[i]) / (2.0 * h);
    const double c = w - right_[i + 1];
    const double b = ps_[i + 1];
    const double disc = std::max(0.0, b * b - 4.0 * k * c);
    const double den = b + std::sqrt(disc);
    const double e = den > 0.0 ? 2.0 * c / den : 0.0;
    return xs_[i + 1] - std::clamp(e, 0.0, h);
  }
  nlohmann::json to_json() const override { return {{"kind", "grid"}, {"xs", xs_}, {"ps", raw_ps_}}; }

 private:
  double segment_mass(std::size_t i) const { return 0.5 * (ps_[i] + ps_[i + 1]) * (xs_[i + 1] - xs_[i]); }
  std::size_t segment(double x) const {
    auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    std::size_t i = static_cast<std::size_t>(it - xs_.begin());
    i = i == 0 ? 0 : i - 1;
    return std::min(i, xs_.size() - 2);
  }
  std::vector<double> xs_, ps_, raw_ps_;
  std::vector<double> left_;   // mass left of xs_[i]
  std::vector<double> right_;  // mass right of xs_[i]
};

}  // namespace detail

Measure1D::Measure1D(std::shared_ptr<const detail::Distribution> impl) : impl_(std::move(impl)) {}

Measure1D Measure1D::gaussian(double mean, double sd) {
  return Measure1D(std::make_shared<detail::Gaussian>(mean, sd));
}
Measure1D Measure1D::uniform(double a, double b) { return Measure1D(std::make_shared<detail::Uniform>(a, b)); }
Measure1D Measure1D::exponential(double rate) {
  return Measure1D(std::make_shared<detail::Exponential>(rate));
}
Measure1D Measure1D::logistic(double loc, double scale) {
  return Measure1D(std::make_shared<detail::Logistic>(loc, scale));
}
Measure1D Measure1D::mixture(std::vector<double> weights, std::vector<Measure1D> parts) {
  return Measure1D(std::make_shared<detail::Mixture>(std::move(weights), std::move(parts)));
}
Measure1D Measure1D::grid(std::vector<double> xs, std::vector<double> ps) {
  return Measure1D(std::make_shared<detail::GridDensity>(std::move(xs), std::move(ps)));
}

Measure1D make_grid_density(std::vector<double> xs, std::vector<double> ps) {
  return Measure1D::grid(std::move(xs), std::move(ps));
}

namespace {

double number_or(const nlohmann::json& spec, const char* key, double fallback) {
  if (!spec.contains(key)) return fallback;
  const auto& v = spec.at(key);
  if (!v.is_number()) throw ConfigError(std::string("measure field '") + key + "' must be a number");
  return v.get<double>();
}

std::vector<double> number_array(const nlohmann::json& spec, const char* key) {
  if (!spec.contains(key) || !spec.at(key).is_array()) {
    throw ConfigError(std::string("measure field '") + key + "' must be an array of numbers");
  }
  std::vector<double> out;
  for (const auto& v : spec.at(key)) {
    if (!v.is_number()) throw ConfigError(std::string("measure field '") + key + "' must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

Measure1D Measure1D::from_json(const nlohmann::json& spec) {
  if (!spec.is_object() || !spec.contains("kind") || !spec.at("kind").is_string()) {
    throw ConfigError("measure spec must be an object with a string 'kind'");
  }
  const std::string kind = spec.at("kind").get<std::string>();
  if (kind == "gaussian") return gaussian(number_or(spec, "mean", 0.0), number_or(spec, "std", 1.0));
  if (kind == "uniform") return uniform(number_or(spec, "a", 0.0), number_or(spec, "b", 1.0));
  if (kind == "exponential") return exponential(number_or(spec, "rate", 1.0));
  if (kind == "logistic") return logistic(number_or(spec, "loc", 0.0), number_or(spec, "scale", 1.0));
  if (kind == "grid") return grid(number_array(spec, "xs"), number_array(spec, "ps"));
  if (kind == "mixture") {
    if (!spec.contains("parts") || !spec.at("parts").is_array()) {
      throw ConfigError("mixture needs a 'parts' array");
    }
    std::vector<Measure1D> parts;
    for (const auto& p : spec.at("parts")) parts.push_back(from_json(p));
    return mixture(number_array(spec, "weights"), std::move(parts));
  }
  throw ConfigError("unknown measure kind '" + kind + "'");
}

nlohmann::json Measure1D::to_json() const { return impl_->to_json(); }
Measure1D::Kind Measure1D::kind() const { return impl_->kind(); }

std::string Measure1D::name() const {
  switch (kind()) {
    case Kind::gaussian: return "gaussian";
    case Kind::uniform: return "uniform";
    case Kind::exponential: return "exponential";
    case Kind::logistic: return "logistic";
    case Kind::mixture: return "mixture";
    case Kind::grid: return "grid";
  }
  return "unknown";
}

double Measure1D::density(double x) const { return impl_->density(x); }
double Measure1D::cdf(double x) const { return impl_->cdf(x); }
double Measure1D::ccdf(double x) const { return impl_->ccdf(x); }

double Measure1D::quantile(double v) const {
  if (!(v > 0.0 && v < 1.0)) {
    std::ostringstream os;
    os << "quantile level " << v << " outside (0, 1)";
    throw DomainError(os.str());
  }
  return v <= 0.5 ? impl_->lower_quantile(v) : impl_->upper_quantile(1.0 - v);
}

double Measure1D::upper_quantile(double w) const {
  if (!(w > 0.0 && w < 1.0)) {
    std::ostringstream os;
    os << "upper quantile level " << w << " outside (0, 1)";
    throw DomainError(os.str());
  }
  return w <= 0.5 ? impl_->upper_quantile(w) : impl_->lower_quantile(1.0 - w);
}

Interval Measure1D::support() const { return impl_->support(); }
std::vector<double> Measure1D::kinks() const { return impl_->kink_points(); }

double sample(const Measure1D& m, double u) {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("uniform variate outside (0, 1)");
  return m.quantile(u);
}

double quantile(const Measure1D& m, double v) { return m.quantile(v); }

IntegrationResult integrate_tail(const Measure1D& m, Tail side, const TailIntegrand& h,
                                 double lo, double hi, const QuadratureSpec& spec) {
  if (!(hi > lo)) return {};
  if (lo < 0.0 || hi > 0.5) throw DomainError("tail integration range must lie in [0, 1/2]");
  auto at = [&](double s) {
    const double x = side == Tail::lower ? m.quantile(s) : m.upper_quantile(s);
    return h(x, s);
  };
  std::vector<double> breaks;
  for (double x : m.kinks()) {
    const double s = side == Tail::lower ? m.cdf(x) : m.ccdf(x);
    if (s > lo && s < hi) breaks.push_back(s);
  }
  const double cut = spec.tail_cut;
  IntegrationResult out;
  const double lin_lo = std::max(lo, cut);
  if (hi > lin_lo) {
    out += adaptive_integrate(at, lin_lo, hi, breaks, spec.rel_tol, 0.5 * spec.abs_tol, spec.max_depth);
  }
  if (lo < cut) {
    const double tail_hi = std::min(hi, cut);
    const double abs_tol = std::max(0.5 * spec.abs_tol, spec.rel_tol * std::abs(out.value));
    std::vector<double> tail_breaks;
    for (double s : breaks) {
      if (s < tail_hi) tail_breaks.push_back(s);
    }
    // Kinks deep in the tail are rare; split the log-scale piece at them too.
    std::vector<double> pts{lo};
    pts.insert(pts.end(), tail_breaks.begin(), tail_breaks.end());
    pts.push_back(tail_hi);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      out += log_scale_integrate(at, pts[i], pts[i + 1], spec.rel_tol,
                                 abs_tol / static_cast<double>(pts.size() - 1), spec.max_depth);
    }
  }
  return out;
}

IntegrationResult integrate(const Measure1D& m, const RealFunction& h, const QuadratureSpec& spec) {
  spec.validate();
  auto hx = [&](double x, double) { return h(x); };
  IntegrationResult out = integrate_tail(m, Tail::lower, hx, 0.0, 0.5, spec);
  out += integrate_tail(m, Tail::upper, hx, 0.0, 0.5, spec);
  return out;
}

ProductMeasure::ProductMeasure(std::vector<Measure1D> components) : components_(std::move(components)) {
  if (components_.empty()) throw ValidationError("product measure needs dimension >= 1");
}

ProductMeasure ProductMeasure::from_json(const nlohmann::json& spec) {
  if (!spec.is_object() || !spec.contains("components") || !spec.at("components").is_array()) {
    throw ConfigError("product measure needs a 'components' array");
  }
  std::vector<Measure1D> parts;
  for (const auto& c : spec.at("components")) parts.push_back(Measure1D::from_json(c));
  return ProductMeasure(std::move(parts));
}

nlohmann::json ProductMeasure::to_json() const {
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : components_) comps.push_back(c.to_json());
  return {{"kind", "product"}, {"components", comps}};
}

void ProductMeasure::sample(std::span<const double> u, std::span<double> out) const {
  if (u.size() != components_.size() || out.size() != components_.size()) {
    throw DimensionError("product measure sample dimension mismatch");
  }
  for (std::size_t i = 0; i < components_.size(); ++i) out[i] = entrobound::sample(components_[i], u[i]);
}

}  // namespace entrobound
