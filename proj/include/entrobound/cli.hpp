#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace entrobound::cli {

/// Command-line values that take precedence over the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> samples;
  std::optional<double> rel_tol;
  std::optional<double> abs_tol;
};

/// Exit codes of the tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitViolation = 2;

/// One evaluated configuration (one CSV row).
struct RunOutcome {
  nlohmann::ordered_json report;  // the JSON report of `entrobound run`
  std::string method;
  std::string measure;   // compact label for CSV
  std::string function;  // compact label for CSV
  double entropy = 0.0;
  double bound = 0.0;
  double slack = 0.0;
  double ratio = 0.0;
  double error = 0.0;  // quadrature error, or combined sigma for Monte Carlo
  std::optional<std::uint64_t> seed;
  std::string status;  // ok | violation | not-proved | informational | <error kind>
  std::string message;  // error text for failed rows

  int exit_code() const;
  /// "theorem3 gaussian f=exp(0.5*x): entropy ... bound ... [ok]"
  std::string summary() const;
};

/// Validates and evaluates a single run configuration. Library errors are
/// propagated; a JSON report is returned otherwise. A config with a "sweep"
/// entry evaluates every value and reports them under result.runs.
RunOutcome run(const nlohmann::json& config, const Overrides& overrides = {});

/// Same, but failures become a row with status set to the error kind.
RunOutcome run_row(const nlohmann::json& config, const Overrides& overrides = {});

struct SuiteResult {
  std::vector<RunOutcome> rows;
  int exit_code = kExitOk;
  std::string csv() const;
};

/// {"defaults": {...}, "runs": [...]} or a bare array of configs. Each run is
/// merged over the defaults and sweeps expand into one row per value.
/// Throws ConfigError for an empty suite.
SuiteResult run_suite(const nlohmann::json& suite, const Overrides& overrides = {});

inline constexpr const char* kCsvHeader = "method,measure,function,entropy,bound,slack,ratio,error,seed,status";

/// Plot data for kind weight-profile, slack-vs-param or mc-convergence.
/// `column` picks V/W/U/K for weight profiles and entropy/bound for
/// convergence series. Throws MissingSeriesError.
std::string emit_plotdata(const nlohmann::ordered_json& report, const std::string& kind,
                          const std::string& column = {});

/// Shortest round-trip decimal form; empty for NaN.
std::string format_number(double v);

/// Tool entry point, shared by the executable and the tests.
int main(int argc, char** argv);

}  // namespace entrobound::cli
