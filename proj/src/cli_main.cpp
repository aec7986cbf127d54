#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "entrobound/cli.hpp"
#include "entrobound/errors.hpp"

namespace entrobound::cli {

namespace {

nlohmann::json read_json(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw ConfigError(std::string("cannot open ") + what + " '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("cannot parse ") + what + " '" + path + "': " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
  out.close();
  if (!out) throw ConfigError("failed writing '" + path + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropy bounds: quadrature, enumeration and Monte Carlo checks"};
  app.require_subcommand(1);

  Overrides ov;
  auto add_overrides = [&ov](CLI::App* sub) {
    sub->add_option("--seed", ov.seed, "Random seed (overrides the config)");
    sub->add_option("--samples", ov.samples, "Monte Carlo sample count (overrides the config)");
    sub->add_option("--rel-tol", ov.rel_tol, "Relative quadrature tolerance (overrides the config)");
    sub->add_option("--abs-tol", ov.abs_tol, "Absolute quadrature tolerance (overrides the config)");
  };

  std::string config, out, in, kind, column;
  CLI::App* run_cmd = app.add_subcommand("run", "Evaluate one configuration and write a JSON report");
  run_cmd->add_option("--config", config, "Run configuration (JSON)")->required();
  run_cmd->add_option("--out", out, "Report path (default: config output.path, else stdout)");
  add_overrides(run_cmd);

  CLI::App* suite_cmd = app.add_subcommand("suite", "Evaluate a suite of configurations into a CSV report");
  suite_cmd->add_option("--config", config, "Suite file (JSON)")->required();
  suite_cmd->add_option("--out", out, "CSV report path")->required();
  add_overrides(suite_cmd);

  CLI::App* plot_cmd = app.add_subcommand("plot", "Extract a series of a JSON report as columnar text");
  plot_cmd->add_option("--in", in, "JSON report from 'run'")->required();
  plot_cmd->add_option("--kind", kind, "weight-profile, slack-vs-param or mc-convergence")
      ->required()
      ->check(CLI::IsMember({"weight-profile", "slack-vs-param", "mc-convergence"}));
  plot_cmd->add_option("--out", out, "Output path")->required();
  plot_cmd->add_option("--column", column, "V, W, U, K for weight profiles; entropy or bound for convergence");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*run_cmd) {
      const nlohmann::json cfg = read_json(config, "config");
      const RunOutcome r = run(cfg, ov);
      std::string path = out;
      if (path.empty() && cfg.is_object() && cfg.contains("output") && cfg.at("output").is_object() &&
          cfg.at("output").contains("path")) {
        path = cfg.at("output").at("path").get<std::string>();
      }
      const std::string text = r.report.dump(2) + "\n";
      if (path.empty()) {
        std::cout << text;
        std::cerr << r.summary() << "\n";
      } else {
        write_text(path, text);
        std::cout << r.summary() << "\n";
      }
      return r.exit_code();
    }
    if (*suite_cmd) {
      const SuiteResult s = run_suite(read_json(config, "suite"), ov);
      write_text(out, s.csv());
      std::size_t ok = 0, violations = 0, errors = 0;
      for (const auto& r : s.rows) {
        const int code = r.exit_code();
        if (code == kExitOk) ++ok;
        else if (code == kExitViolation) ++violations;
        else ++errors;
      }
      std::cout << "suite: " << s.rows.size() << " rows, " << ok << " ok, " << violations << " violations, "
                << errors << " errors\n";
      return s.exit_code;
    }
    if (*plot_cmd) {
      const nlohmann::json raw = read_json(in, "report");
      const nlohmann::ordered_json report = nlohmann::ordered_json::parse(raw.dump());
      write_text(out, emit_plotdata(report, kind, column));
      std::cout << "plot: wrote " << kind << " to " << out << "\n";
      return kExitOk;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace entrobound::cli
