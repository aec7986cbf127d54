#include "entrobound/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

#include "entrobound/bounds.hpp"
#include "entrobound/errors.hpp"
#include "entrobound/pathspace.hpp"

namespace entrobound::cli {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";
constexpr double kQuadratureTol = 1e-8;
constexpr double kMcSigmas = 3.0;
constexpr std::size_t kCurveNodes = 512;
constexpr std::size_t kNonnegativeChecks = 1000;
constexpr std::size_t kProfilePoints = 513;
constexpr double kMaxEnumeratedLeaves = 1e6;
constexpr std::uint64_t kDefaultIdentityPoints = 1000;

// Tolerances of the identity checks.
constexpr double kIdentityTol = 1e-6;
constexpr double kTailTol = 1e-12;
constexpr double kInvolutionTol = 1e-8;
constexpr double kDerivativeTol = 1e-5;

const std::set<std::string> kKnownKeys = {"method", "name",  "measure",    "family", "function",
                                          "f",      "g",     "c",          "model",  "functional",
                                          "rate",   "quadrature", "seed",  "samples", "sweep",
                                          "output"};

const std::vector<std::string> kMethods = {"entropy", "classic",     "theorem2",    "prop1",
                                           "eq145",   "theorem3",    "mc-theorem1", "mc-brownian",
                                           "mc-poisson", "mc-trimming", "identities"};

const double kNaN = std::numeric_limits<double>::quiet_NaN();

double quadrature_tolerance(double bound) { return kQuadratureTol * (1.0 + std::abs(bound)); }

std::uint64_t as_uint(const json& v, const std::string& key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d >= 0.0 && d <= 9007199254740992.0 && std::floor(d) == d) return static_cast<std::uint64_t>(d);
  }
  throw ConfigError("'" + key + "' must be a nonnegative integer");
}

double as_number(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("'" + key + "' must be a number");
  return v.get<double>();
}

std::uint64_t require_uint(const json& cfg, const std::string& key, const std::string& method) {
  if (!cfg.contains(key)) {
    throw ConfigError("method '" + method + "' needs '" + key + "' (set it in the config or pass --" + key + ")");
  }
  return as_uint(cfg.at(key), key);
}

QuadratureSpec quadrature_from(const json& cfg) {
  QuadratureSpec q;
  if (cfg.contains("quadrature")) {
    const json& j = cfg.at("quadrature");
    if (!j.is_object()) throw ConfigError("'quadrature' must be an object");
    for (const auto& [key, v] : j.items()) {
      if (key == "rel_tol") q.rel_tol = as_number(v, "quadrature.rel_tol");
      else if (key == "abs_tol") q.abs_tol = as_number(v, "quadrature.abs_tol");
      else if (key == "tail_cut") q.tail_cut = as_number(v, "quadrature.tail_cut");
      else if (key == "max_depth") q.max_depth = static_cast<int>(as_uint(v, "quadrature.max_depth"));
      else throw ConfigError("unknown quadrature field '" + key + "' (expected rel_tol, abs_tol, tail_cut, max_depth)");
    }
  }
  try {
    q.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("invalid quadrature settings: ") + e.what());
  }
  return q;
}

ojson quadrature_json(const QuadratureSpec& q) {
  return {{"rel_tol", q.rel_tol}, {"abs_tol", q.abs_tol}, {"tail_cut", q.tail_cut}, {"max_depth", q.max_depth}};
}

struct FunctionSpec {
  bool is_f = true;
  std::string text;
  Expr expr;

  std::string label() const { return (is_f ? "f=" : "g=") + text; }
  ojson to_json() const { return {{is_f ? "f" : "g", text}}; }
  // g = f^2 or g itself.
  Expr g_expr() const { return is_f ? pow(expr, 2) : expr; }
};

// The raw expression text, before parsing.
std::optional<FunctionSpec> function_text(const json& cfg) {
  const json* holder = &cfg;
  if (cfg.contains("function")) {
    if (cfg.contains("f") || cfg.contains("g")) throw ConfigError("give the function either under 'function' or as 'f'/'g', not both");
    holder = &cfg.at("function");
    if (!holder->is_object()) throw ConfigError("'function' must be an object such as {\"f\": \"exp(0.5*x)\"}");
  }
  const bool has_f = holder->contains("f");
  const bool has_g = holder->contains("g");
  if (has_f && has_g) throw ConfigError("give exactly one of 'f' and 'g'");
  if (!has_f && !has_g) return std::nullopt;
  const json& v = holder->at(has_f ? "f" : "g");
  if (!v.is_string()) throw ConfigError(std::string("'") + (has_f ? "f" : "g") + "' must be an expression string");
  FunctionSpec fs;
  fs.is_f = has_f;
  fs.text = v.get<std::string>();
  return fs;
}

std::optional<FunctionSpec> function_from(const json& cfg) {
  auto fs = function_text(cfg);
  if (fs) fs->expr = parse(fs->text);
  return fs;
}

FunctionSpec require_function(const json& cfg, const std::string& method) {
  auto fs = function_from(cfg);
  if (!fs) throw ConfigError("method '" + method + "' needs a function: {\"f\": ...} or {\"g\": ...}");
  return *fs;
}

FunctionSpec require_f(const json& cfg, const std::string& method) {
  FunctionSpec fs = require_function(cfg, method);
  if (!fs.is_f) throw ConfigError("method '" + method + "' needs 'f' (the bound involves f'), not 'g'");
  return fs;
}

bool is_product(const json& cfg) {
  return cfg.contains("measure") && cfg.at("measure").is_object() && cfg.at("measure").value("kind", "") == "product";
}

Measure1D measure_from(const json& cfg, const std::string& method) {
  if (!cfg.contains("measure")) throw ConfigError("method '" + method + "' needs a 'measure'");
  if (is_product(cfg)) throw ConfigError("method '" + method + "' needs a one-dimensional measure");
  return Measure1D::from_json(cfg.at("measure"));
}

// Rejects g < 0 on a grid of quantile points.
void check_nonnegative(const Measure1D& m, const RealFunction& g) {
  for (std::size_t k = 0; k < kNonnegativeChecks; ++k) {
    const double x = m.quantile((static_cast<double>(k) + 0.5) / kNonnegativeChecks);
    const double v = g(x);
    if (v < 0.0) {
      std::ostringstream os;
      os << "g must be nonnegative, got g(" << x << ") = " << v;
      throw NegativeFunctionError(os.str());
    }
  }
}

RealFunction g_function(const Measure1D& m, const FunctionSpec& fs) {
  const Func1D f = to_func(fs.expr, fs.text);
  if (fs.is_f) {
    return [v = f.value](double x) {
      const double y = v(x);
      return y * y;
    };
  }
  check_nonnegative(m, f.value);
  return f.value;
}

ojson weight_profile_series(const Measure1D& m, const QuadratureSpec& spec) {
  const WeightProfile wp = weights(m, spec);
  ojson rows = ojson::array();
  for (std::size_t k = 1; k <= kProfilePoints; ++k) {
    const double x = m.quantile(static_cast<double>(k) / (kProfilePoints + 1));
    try {
      const WeightValues w = wp.at(x);
      rows.push_back({x, w.V, w.W, w.U, w.K});
    } catch (const ZeroDensityError&) {
      // no weight where the density vanishes
    }
  }
  return {{"columns", {"x", "V", "W", "U", "K"}}, {"rows", std::move(rows)}};
}

std::string label_json(const json& j) { return j.dump(); }

// ---------------------------------------------------------------------------

enum class Verdict { proved, informational, none };

struct Evaluation {
  BoundReport br;
  bool mc = false;
  bool has_bound = true;
  Verdict verdict = Verdict::proved;
  bool forced_violation = false;
  ojson inputs = ojson::object();
  ojson extra = ojson::object();
  ojson series = ojson::object();
  std::string measure_label;
  std::string function_label;
  std::optional<std::uint64_t> seed;
};

void echo_common(Evaluation& ev, const json& cfg, const std::string& method) {
  ev.inputs["method"] = method;
  if (cfg.contains("name")) ev.inputs["name"] = cfg.at("name");
}

Evaluation eval_1d_quadrature(const json& cfg, const std::string& method) {
  Evaluation ev;
  echo_common(ev, cfg, method);
  const QuadratureSpec spec = quadrature_from(cfg);
  const Measure1D m = measure_from(cfg, method);
  ev.inputs["measure"] = m.to_json();
  ev.measure_label = label_json(m.to_json());
  ev.br.method = method;

  if (method == "entropy") {
    const FunctionSpec fs = require_function(cfg, method);
    ev.inputs["function"] = fs.to_json();
    ev.function_label = fs.label();
    const auto r = entropy(m, g_function(m, fs), spec);
    ev.br.entropy = r.value;
    ev.br.quadrature_error = r.error;
    ev.has_bound = false;
    ev.verdict = Verdict::none;
  } else if (method == "classic") {
    const FunctionSpec fs = require_f(cfg, method);
    const double c = cfg.contains("c") ? as_number(cfg.at("c"), "c") : 1.0;
    ev.inputs["function"] = fs.to_json();
    ev.inputs["c"] = c;
    ev.function_label = fs.label();
    const Func1D f = to_func(fs.expr, fs.text);
    const auto ent = entropy(m, g_function(m, fs), spec);
    const auto rhs = classic_lsi_rhs(m, f, c, spec);
    ev.br.entropy = ent.value;
    ev.br.bound = rhs.value;
    ev.br.quadrature_error = ent.error + rhs.error;
    bool proved = false;
    if (m.kind() == Measure1D::Kind::gaussian) {
      const double sd = m.to_json().at("std").get<double>();
      proved = c >= sd * sd;
    }
    ev.verdict = proved ? Verdict::proved : Verdict::informational;
    ev.br.params["c"] = c;
    ev.br.params["proved"] = proved;
  } else if (method == "theorem2" || method == "mc-trimming") {
    const FunctionSpec fs = require_function(cfg, method);
    const TrimmedFamily1D fam = TrimmedFamily1D::from_json(cfg.contains("family") ? cfg.at("family") : json());
    fam.validate(m);
    ev.inputs["family"] = fam.to_json();
    ev.inputs["function"] = fs.to_json();
    ev.inputs["curve_nodes"] = kCurveNodes;
    ev.function_label = fs.label();
    const RealFunction g = g_function(m, fs);
    const auto ent = entropy(m, g, spec);
    const Theorem2Result t2 = theorem2_bound(m, fam, g, spec);
    ev.br.entropy = ent.value;
    ev.br.bound = t2.bound;
    ev.br.quadrature_error = ent.error + t2.error;
    ev.br.params["regularized"] = t2.regularized;
    if (t2.regularized) ev.br.params["eps_bounds"] = t2.eps_sequence;
    if (method == "mc-trimming") {
      const std::uint64_t n = require_uint(cfg, "samples", method);
      const std::uint64_t seed = require_uint(cfg, "seed", method);
      ev.inputs["seed"] = seed;
      ev.inputs["samples"] = n;
      ev.seed = seed;
      const TrimmingMc mc = trimming_martingale_mc(m, fam, g, n, seed, spec);
      const double z = mc.estimate.sigma > 0.0 ? (mc.estimate.value - t2.bound) / mc.estimate.sigma : 0.0;
      ev.extra["mc"] = {{"value", mc.estimate.value}, {"sigma", mc.estimate.sigma}, {"eps", mc.eps}, {"z", z}};
      if (std::abs(z) > kMcSigmas) {
        ev.br.warnings.push_back("Monte Carlo estimate differs from the quadrature bound by more than 3 sigma");
      }
    }
  } else if (method == "prop1" || method == "eq145") {
    const FunctionSpec fs = require_f(cfg, method);
    const TrimmedFamily1D fam = TrimmedFamily1D::from_json(cfg.contains("family") ? cfg.at("family") : json());
    fam.validate(m);
    ev.inputs["family"] = fam.to_json();
    ev.inputs["function"] = fs.to_json();
    ev.function_label = fs.label();
    const Func1D f = to_func(fs.expr, fs.text);
    const auto ent = entropy(m, g_function(m, fs), spec);
    ev.br.entropy = ent.value;
    if (method == "prop1") {
      check_symmetric(m, fam, f);
      const auto b = prop1_bound(m, fam, f, spec);
      ev.br.bound = b.value;
      ev.br.quadrature_error = ent.error + b.error;
      ev.verdict = fam.is_quantile() ? Verdict::proved : Verdict::informational;
    } else {
      const Eq145Result e = eq145_bound(m, fam, f, spec);
      ev.br.bound = e.bound;
      ev.br.quadrature_error = ent.error + e.error;
      ev.br.params["w_term"] = e.w_term;
      ev.br.params["u_term"] = e.u_term;
    }
    ev.series["weight-profile"] = weight_profile_series(m, spec);
  } else if (method == "theorem3") {
    const FunctionSpec fs = require_f(cfg, method);
    ev.inputs["function"] = fs.to_json();
    ev.function_label = fs.label();
    BoundReport r = theorem3_bound(m, to_func(fs.expr, fs.text), spec);
    r.method = method;
    ev.br = std::move(r);
    ev.series["weight-profile"] = weight_profile_series(m, spec);
  } else if (method == "identities") {
    const std::uint64_t n = cfg.contains("samples") ? as_uint(cfg.at("samples"), "samples") : kDefaultIdentityPoints;
    const std::uint64_t seed = cfg.contains("seed") ? as_uint(cfg.at("seed"), "seed") : 0;
    ev.inputs["seed"] = seed;
    ev.inputs["samples"] = n;
    ev.seed = seed;
    const IdentityCheck ic = identity_checks(m, n, seed, spec);
    ev.has_bound = false;
    ev.verdict = Verdict::none;
    ev.br.entropy = kNaN;
    ojson levels = ojson::array();
    for (const auto& lv : ic.levels) {
      levels.push_back({{"t", lv.t},
                        {"log_mass", lv.log_mass},
                        {"log_mass_exact", lv.log_mass_exact},
                        {"power", lv.power},
                        {"power_exact", lv.power_exact}});
    }
    ev.extra["levels"] = std::move(levels);
    ev.extra["max_identity_error"] = ic.max_identity_error;
    ev.extra["max_fhat_error"] = ic.max_fhat_error;
    ev.extra["max_tau_error"] = ic.max_tau_error;
    ev.extra["max_involution_error"] = ic.max_involution_error;
    ev.extra["max_derivative_error"] = ic.max_derivative_error;
    ev.extra["derivative_points"] = ic.points;
    ev.extra["tolerances"] = {{"identity", kIdentityTol},
                              {"tail", kTailTol},
                              {"involution", kInvolutionTol},
                              {"derivative", kDerivativeTol}};
    ev.forced_violation = ic.max_identity_error > kIdentityTol || ic.max_fhat_error > kTailTol ||
                          ic.max_tau_error > kTailTol || ic.max_involution_error > kInvolutionTol ||
                          ic.max_derivative_error > kDerivativeTol;
    ev.series["weight-profile"] = weight_profile_series(m, spec);
  }
  ev.inputs["quadrature"] = quadrature_json(spec);
  return ev;
}

Evaluation eval_theorem2_rd(const json& cfg) {
  const std::string method = "theorem2";
  Evaluation ev;
  echo_common(ev, cfg, method);
  const ProductMeasure pm = ProductMeasure::from_json(cfg.at("measure"));
  if (cfg.contains("family")) {
    const json& fam = cfg.at("family");
    if (!fam.is_object() || fam.value("family", "ball") != "ball") {
      throw ConfigError("product measures only support the ball family {\"family\": \"ball\", \"center\": [...]}");
    }
  }
  const BallTrimmingRd ball = BallTrimmingRd::from_json(cfg.contains("family") ? cfg.at("family") : json(), pm.dimension());
  const FunctionSpec fs = require_function(cfg, method);
  const std::uint64_t n = require_uint(cfg, "samples", method);
  const std::uint64_t seed = require_uint(cfg, "seed", method);
  ev.inputs["measure"] = pm.to_json();
  ev.inputs["family"] = ball.to_json();
  ev.inputs["function"] = fs.to_json();
  ev.inputs["seed"] = seed;
  ev.inputs["samples"] = n;
  ev.measure_label = label_json(pm.to_json());
  ev.function_label = fs.label();
  ev.seed = seed;
  ev.mc = true;
  const RdBoundEstimate r = theorem2_bound_rd(pm, ball, fs.g_expr(), n, seed);
  ev.br.method = method;
  ev.br.entropy = r.entropy.value;
  ev.br.entropy_sigma = r.entropy.sigma;
  ev.br.bound = r.bound.value;
  ev.br.bound_sigma = r.bound.sigma;
  ev.br.params["t_max"] = r.t_max;
  ev.br.params["curve_samples"] = r.curve_samples;
  return ev;
}

Evaluation eval_mc_paths(const json& cfg, const std::string& method) {
  Evaluation ev;
  echo_common(ev, cfg, method);
  const std::uint64_t n = require_uint(cfg, "samples", method);
  const std::uint64_t seed = require_uint(cfg, "seed", method);
  ev.seed = seed;
  ev.mc = true;
  if (method == "mc-theorem1") {
    if (!cfg.contains("model")) throw ConfigError("method 'mc-theorem1' needs a 'model'");
    const MartingaleModel model = MartingaleModel::from_json(cfg.at("model"));
    ev.inputs["model"] = model.to_json();
    ev.measure_label = "";
    ev.function_label = "";
    const Theorem1Mc mc = theorem1_mc(model, n, seed);
    ev.br.method = method;
    ev.br.entropy = mc.entropy.value;
    ev.br.entropy_sigma = mc.entropy.sigma;
    ev.br.bound = mc.bound.value;
    ev.br.bound_sigma = mc.bound.sigma;
    ev.br.params["leaves"] = model.leaf_count();
    if (model.leaf_count() <= kMaxEnumeratedLeaves) {
      const auto ex = theorem1_enumerate<double>(model);
      ev.extra["exact"] = {{"entropy", ex.entropy}, {"bound", ex.bound}};
      if (ex.entropy > ex.bound + quadrature_tolerance(ex.bound)) ev.forced_violation = true;
      if (std::abs(mc.entropy.value - ex.entropy) > kMcSigmas * mc.entropy.sigma ||
          std::abs(mc.bound.value - ex.bound) > kMcSigmas * mc.bound.sigma) {
        ev.br.warnings.push_back("Monte Carlo estimate differs from enumeration by more than 3 sigma");
      }
    }
    ojson rows = ojson::array();
    for (const auto& p : mc.convergence) {
      rows.push_back({p.n, p.entropy.value, p.entropy.sigma, p.bound.value, p.bound.sigma});
    }
    ev.series["mc-convergence"] = {{"columns", {"n", "entropy", "entropy_sigma", "bound", "bound_sigma"}},
                                   {"rows", std::move(rows)}};
  } else {
    if (!cfg.contains("functional")) throw ConfigError("method '" + method + "' needs a 'functional'");
    const CylinderFunctional cf = CylinderFunctional::from_json(cfg.at("functional"));
    const bool want_poisson = method == "mc-poisson";
    if ((cf.mode == CylinderFunctional::Mode::poisson) != want_poisson) {
      throw ConfigError(std::string("method '") + method + "' needs functional mode '" +
                        (want_poisson ? "poisson" : "brownian") + "'");
    }
    ev.inputs["functional"] = cf.to_json();
    ev.measure_label = want_poisson ? "poisson" : "brownian";
    ev.function_label = "F=" + print(cf.F);
    if (want_poisson) {
      const double rate = cfg.contains("rate") ? as_number(cfg.at("rate"), "rate") : 1.0;
      ev.inputs["rate"] = rate;
      ev.br = poisson_functional_check(cf, rate, n, seed);
    } else {
      ev.br = brownian_cylinder_check(cf, n, seed);
    }
    ev.br.method = method;
  }
  ev.inputs["seed"] = seed;
  ev.inputs["samples"] = n;
  return ev;
}

Evaluation evaluate(const json& cfg) {
  if (!cfg.is_object()) throw ConfigError("a run config must be a JSON object");
  for (const auto& [key, v] : cfg.items()) {
    (void)v;
    if (!kKnownKeys.count(key)) throw ConfigError("unknown config field '" + key + "'");
  }
  if (!cfg.contains("method") || !cfg.at("method").is_string()) {
    throw ConfigError("config needs a string 'method' (one of entropy, classic, theorem2, prop1, eq145, theorem3, "
                      "mc-theorem1, mc-brownian, mc-poisson, mc-trimming, identities)");
  }
  const std::string method = cfg.at("method").get<std::string>();
  if (std::find(kMethods.begin(), kMethods.end(), method) == kMethods.end()) {
    throw ConfigError("unknown method '" + method + "'");
  }
  if (method == "theorem2" && is_product(cfg)) return eval_theorem2_rd(cfg);
  if (method == "mc-theorem1" || method == "mc-brownian" || method == "mc-poisson") return eval_mc_paths(cfg, method);
  return eval_1d_quadrature(cfg, method);
}

std::string status_of(const Evaluation& ev) {
  if (ev.forced_violation) return "violation";
  if (!ev.has_bound) return "ok";
  const double gap = ev.br.entropy - ev.br.bound;
  const double thr = ev.mc ? kMcSigmas * ev.br.sigma_combined() : quadrature_tolerance(ev.br.bound);
  if (!(gap > thr)) return "ok";
  return ev.verdict == Verdict::proved ? "violation" : "not-proved";
}

json apply_overrides(json cfg, const Overrides& o) {
  if (!cfg.is_object()) throw ConfigError("a run config must be a JSON object");
  if (o.seed) cfg["seed"] = *o.seed;
  if (o.samples) cfg["samples"] = *o.samples;
  if (o.rel_tol) cfg["quadrature"]["rel_tol"] = *o.rel_tol;
  if (o.abs_tol) cfg["quadrature"]["abs_tol"] = *o.abs_tol;
  return cfg;
}

void substitute(json& j, const std::string& pattern, double value, const std::string& text) {
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s == pattern) {
      j = value;
      return;
    }
    for (std::size_t pos = s.find(pattern); pos != std::string::npos; pos = s.find(pattern, pos + text.size())) {
      s.replace(pos, pattern.size(), text);
    }
    j = s;
  } else if (j.is_structured()) {
    for (auto& child : j) substitute(child, pattern, value, text);
  }
}

struct SweepPoint {
  double value;
  json config;
};

std::vector<SweepPoint> expand_sweep(const json& cfg) {
  const json& sw = cfg.at("sweep");
  if (!sw.is_object() || !sw.contains("name") || !sw.at("name").is_string() || !sw.contains("values") ||
      !sw.at("values").is_array() || sw.at("values").empty()) {
    throw ConfigError("'sweep' needs a string 'name' and a nonempty 'values' array");
  }
  const std::string pattern = "{" + sw.at("name").get<std::string>() + "}";
  std::vector<SweepPoint> out;
  for (const auto& v : sw.at("values")) {
    const double value = as_number(v, "sweep.values");
    json c = cfg;
    c.erase("sweep");
    substitute(c, pattern, value, format_number(value));
    out.push_back({value, std::move(c)});
  }
  return out;
}

RunOutcome finish_outcome(Evaluation ev) {
  RunOutcome out;
  out.method = ev.br.method;
  const std::string digest = fnv1a_hex(ev.inputs.dump());
  ev.br.inputs_digest = digest;
  ev.br.finish();
  if (!ev.has_bound) {
    ev.br.bound = ev.br.slack = ev.br.ratio = kNaN;
  }
  out.status = status_of(ev);
  out.measure = ev.measure_label;
  out.function = ev.function_label;
  out.entropy = ev.br.entropy;
  out.bound = ev.br.bound;
  out.slack = ev.br.slack;
  out.ratio = ev.br.ratio;
  out.error = ev.mc ? ev.br.sigma_combined() : ev.br.quadrature_error;
  out.seed = ev.seed;

  ojson result = ev.br.to_json();
  result.erase("method");
  result.erase("inputs_digest");
  if (!ev.has_bound) {
    result.erase("bound");
    result.erase("slack");
    result.erase("ratio");
  }
  if (std::isnan(ev.br.entropy)) result.erase("entropy");
  for (auto& [key, v] : ev.extra.items()) result[key] = v;

  ojson report;
  report["tool"] = "entrobound";
  report["version"] = kVersion;
  report["method"] = out.method;
  report["inputs"] = std::move(ev.inputs);
  report["inputs_digest"] = digest;
  report["result"] = std::move(result);
  report["series"] = std::move(ev.series);
  report["status"] = out.status;
  out.report = std::move(report);
  return out;
}

int status_rank(const RunOutcome& r) {
  if (r.status == "violation") return 3;
  if (r.status == "ok" || r.status == "not-proved" || r.status == "informational") return 0;
  return 2;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += "\"\"";
    else q += ch;
  }
  return q + "\"";
}

const ojson& series_of(const ojson& report, const std::string& kind) {
  if (!report.is_object() || !report.contains("series") || !report.at("series").contains(kind)) {
    throw MissingSeriesError("report has no '" + kind + "' series");
  }
  const ojson& s = report.at("series").at(kind);
  if (!s.contains("columns") || !s.contains("rows")) throw MissingSeriesError("series '" + kind + "' is malformed");
  return s;
}

std::string format_plot_value(const ojson& v) {
  if (!v.is_number()) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string format_number(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

int RunOutcome::exit_code() const {
  if (status == "violation") return kExitViolation;
  if (status == "ok" || status == "not-proved" || status == "informational") return kExitOk;
  return kExitError;
}

std::string RunOutcome::summary() const {
  std::ostringstream os;
  os << method;
  if (!measure.empty()) os << " " << measure;
  if (!function.empty()) os << " " << function;
  os << ":";
  if (!message.empty()) {
    os << " " << status << ": " << message;
    return os.str();
  }
  if (!std::isnan(entropy)) os << " entropy " << format_number(entropy);
  if (!std::isnan(bound)) os << " bound " << format_number(bound) << " slack " << format_number(slack);
  os << " [" << status << "]";
  return os.str();
}

RunOutcome run(const json& config, const Overrides& overrides) {
  const json cfg = apply_overrides(config, overrides);
  if (!cfg.contains("sweep")) return finish_outcome(evaluate(cfg));

  const std::vector<SweepPoint> points = expand_sweep(cfg);
  const std::string name = cfg.at("sweep").at("name").get<std::string>();
  std::vector<RunOutcome> rows;
  for (const auto& p : points) rows.push_back(run_row(p.config));

  RunOutcome out;
  const ojson inputs = ojson::parse(cfg.dump());
  ojson runs = ojson::array();
  ojson series_rows = ojson::array();
  int worst = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const RunOutcome& r = rows[i];
    ojson row;
    row["param"] = points[i].value;
    if (!r.message.empty()) {
      row["status"] = r.status;
      row["message"] = r.message;
    } else {
      row["entropy"] = r.entropy;
      row["bound"] = r.bound;
      row["slack"] = r.slack;
      row["ratio"] = std::isfinite(r.ratio) ? ojson(r.ratio) : ojson(nullptr);
      row["error"] = r.error;
      row["status"] = r.status;
      series_rows.push_back({points[i].value, r.slack, r.error});
    }
    runs.push_back(std::move(row));
    if (status_rank(r) > status_rank(rows[static_cast<std::size_t>(worst)])) worst = static_cast<int>(i);
  }
  out = rows[static_cast<std::size_t>(worst)];
  const std::string digest = fnv1a_hex(inputs.dump());
  ojson report;
  report["tool"] = "entrobound";
  report["version"] = kVersion;
  report["method"] = out.method.empty() ? cfg.value("method", "") : out.method;
  report["inputs"] = inputs;
  report["inputs_digest"] = digest;
  report["result"] = {{"runs", std::move(runs)}};
  report["series"] = {{"slack-vs-param", {{"columns", {name, "slack", "error"}}, {"rows", std::move(series_rows)}}}};
  report["status"] = out.status;
  out.report = std::move(report);
  out.message.clear();
  return out;
}

RunOutcome run_row(const json& config, const Overrides& overrides) {
  try {
    return run(config, overrides);
  } catch (const Error& e) {
    RunOutcome out;
    if (config.is_object()) {
      out.method = config.value("method", "");
      if (config.contains("seed")) {
        try {
          out.seed = as_uint(config.at("seed"), "seed");
        } catch (const Error&) {
        }
      }
      if (overrides.seed) out.seed = overrides.seed;
      if (config.contains("measure")) out.measure = label_json(config.at("measure"));
      try {
        if (auto fs = function_text(config)) out.function = fs->label();
      } catch (const Error&) {
      }
    }
    out.entropy = out.bound = out.slack = out.ratio = out.error = kNaN;
    out.status = e.kind();
    out.message = e.what();
    ojson report;
    report["tool"] = "entrobound";
    report["version"] = kVersion;
    report["method"] = out.method;
    report["status"] = out.status;
    report["error"] = out.message;
    out.report = std::move(report);
    return out;
  }
}

std::string SuiteResult::csv() const {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : rows) {
    const std::vector<std::string> fields = {
        r.method,
        r.measure,
        r.function,
        format_number(r.entropy),
        format_number(r.bound),
        format_number(r.slack),
        format_number(r.ratio),
        format_number(r.error),
        r.seed ? std::to_string(*r.seed) : std::string(),
        r.status};
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out += ',';
      out += csv_field(fields[i]);
    }
    out += '\n';
  }
  return out;
}

SuiteResult run_suite(const json& suite, const Overrides& overrides) {
  json defaults = json::object();
  const json* runs = &suite;
  if (suite.is_object()) {
    for (const auto& [key, v] : suite.items()) {
      (void)v;
      if (key != "defaults" && key != "runs") throw ConfigError("unknown suite field '" + key + "' (expected defaults, runs)");
    }
    if (suite.contains("defaults")) {
      defaults = suite.at("defaults");
      if (!defaults.is_object()) throw ConfigError("suite 'defaults' must be an object");
    }
    if (!suite.contains("runs")) throw ConfigError("suite needs a 'runs' array");
    runs = &suite.at("runs");
  }
  if (!runs->is_array()) throw ConfigError("suite runs must be an array of configs");
  if (runs->empty()) throw ConfigError("suite has no runs");

  SuiteResult result;
  for (const auto& r : *runs) {
    json cfg = defaults;
    if (!r.is_object()) throw ConfigError("each suite run must be an object");
    for (const auto& [key, v] : r.items()) cfg[key] = v;
    if (cfg.contains("sweep")) {
      std::vector<SweepPoint> points;
      try {
        points = expand_sweep(apply_overrides(cfg, overrides));
      } catch (const Error&) {
        result.rows.push_back(run_row(cfg, overrides));
        continue;
      }
      for (const auto& p : points) result.rows.push_back(run_row(p.config));
    } else {
      result.rows.push_back(run_row(cfg, overrides));
    }
  }
  int worst = kExitOk;
  for (const auto& r : result.rows) {
    const int code = r.exit_code();
    if (code == kExitViolation) worst = kExitViolation;
    else if (code == kExitError && worst == kExitOk) worst = kExitError;
  }
  result.exit_code = worst;
  return result;
}

std::string emit_plotdata(const ojson& report, const std::string& kind, const std::string& column) {
  if (kind != "weight-profile" && kind != "slack-vs-param" && kind != "mc-convergence") {
    throw ConfigError("unknown plot kind '" + kind + "' (expected weight-profile, slack-vs-param, mc-convergence)");
  }
  const ojson& s = series_of(report, kind);
  const auto columns = s.at("columns").get<std::vector<std::string>>();
  std::vector<std::size_t> pick;
  if (kind == "weight-profile") {
    const std::string col = column.empty() ? "K" : column;
    const auto it = std::find(columns.begin(), columns.end(), col);
    if (it == columns.end() || it == columns.begin()) {
      throw MissingSeriesError("weight profile has no column '" + col + "' (expected V, W, U or K)");
    }
    pick = {0, static_cast<std::size_t>(it - columns.begin())};
  } else if (kind == "slack-vs-param") {
    pick = {0, 1, 2};
  } else {
    const std::string col = column.empty() ? "bound" : column;
    const auto it = std::find(columns.begin(), columns.end(), col);
    const auto sig = std::find(columns.begin(), columns.end(), col + "_sigma");
    if (it == columns.end() || sig == columns.end()) {
      throw MissingSeriesError("convergence series has no column '" + col + "' (expected entropy or bound)");
    }
    pick = {0, static_cast<std::size_t>(it - columns.begin()), static_cast<std::size_t>(sig - columns.begin())};
  }

  std::ostringstream os;
  os << "# entrobound " << kind << "\n";
  if (report.contains("method")) os << "# method: " << report.at("method").get<std::string>() << "\n";
  if (report.contains("inputs_digest")) os << "# inputs_digest: " << report.at("inputs_digest").get<std::string>() << "\n";
  os << "# columns:";
  for (std::size_t c : pick) os << " " << columns[c];
  os << "\n";
  for (const auto& row : s.at("rows")) {
    for (std::size_t i = 0; i < pick.size(); ++i) {
      if (i) os << " ";
      os << format_plot_value(row.at(pick[i]));
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace entrobound::cli
