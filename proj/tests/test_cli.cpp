#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "entrobound/cli.hpp"
#include "entrobound/errors.hpp"

using namespace entrobound;
using nlohmann::json;

namespace {

json load(const std::string& rel) {
  std::ifstream in(std::string(ENTROBOUND_SOURCE_DIR) + "/" + rel);
  return json::parse(in);
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

std::vector<std::vector<double>> data_rows(const std::string& plot) {
  std::vector<std::vector<double>> rows;
  for (const auto& l : lines_of(plot)) {
    if (l.empty() || l[0] == '#') continue;
    std::istringstream is(l);
    std::vector<double> r;
    for (double v; is >> v;) r.push_back(v);
    rows.push_back(r);
  }
  return rows;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

int call_main(std::vector<std::string> args) {
  args.insert(args.begin(), "entrobound");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  return cli::main(static_cast<int>(args.size()), argv.data());
}

}  // namespace

TEST(Cli, EntropyOfUniformIdentity) {
  const auto out = cli::run(load("configs/entropy_uniform.json"));
  // Ent(x) under U(0,1): E[x log x] - E[x] log E[x] = -1/4 + log(2)/2
  EXPECT_NEAR(out.entropy, -0.25 + 0.5 * std::log(2.0), 1e-9);
  EXPECT_EQ(out.status, "ok");
  EXPECT_EQ(out.exit_code(), cli::kExitOk);
  EXPECT_EQ(out.report["tool"], "entrobound");
  EXPECT_EQ(out.report["version"], "0.1.0");
}

TEST(Cli, ReportLayout) {
  const auto out = cli::run(load("configs/theorem3_gaussian.json"));
  std::vector<std::string> keys;
  for (auto it = out.report.begin(); it != out.report.end(); ++it) keys.push_back(it.key());
  EXPECT_EQ(keys, (std::vector<std::string>{"tool", "version", "method", "inputs", "inputs_digest", "result", "series",
                                            "status"}));
  EXPECT_GE(out.slack, 0.0);
  EXPECT_EQ(out.report["inputs_digest"].get<std::string>().size(), 16u);
}

TEST(Cli, ConstantFunctionRow) {
  const json cfg = {{"method", "theorem3"}, {"measure", {{"kind", "gaussian"}}}, {"function", {{"f", "2.5"}}}};
  const auto out = cli::run(cfg);
  EXPECT_EQ(out.entropy, 0.0);
  EXPECT_EQ(out.bound, 0.0);
  EXPECT_EQ(out.ratio, 1.0);

  const json cfg2 = {{"method", "theorem2"}, {"measure", {{"kind", "exponential"}}}, {"function", {{"g", "3"}}}};
  const auto out2 = cli::run(cfg2);
  EXPECT_NEAR(out2.entropy, 0.0, 1e-14);
  EXPECT_NEAR(out2.bound, 0.0, 1e-14);
}

TEST(Cli, ErrorsAreTyped) {
  EXPECT_THROW(cli::run(load("configs/bad_function.json")), ParseError);
  const auto row = cli::run_row(load("configs/bad_function.json"));
  EXPECT_EQ(row.status, "ParseError");
  EXPECT_EQ(row.exit_code(), cli::kExitError);
  EXPECT_TRUE(std::isnan(row.entropy));

  json unknown = load("configs/entropy_uniform.json");
  unknown["colour"] = "blue";
  EXPECT_THROW(cli::run(unknown), ConfigError);

  const json no_seed = {{"method", "mc-brownian"},
                        {"functional", {{"mode", "brownian"}, {"times", {1.0}}, {"F", "exp(x1)"}}},
                        {"samples", 1000}};
  EXPECT_THROW(cli::run(no_seed), ConfigError);

  const json negative = {{"method", "entropy"}, {"measure", {{"kind", "gaussian"}}}, {"function", {{"g", "x"}}}};
  EXPECT_THROW(cli::run(negative), NegativeFunctionError);

  EXPECT_THROW(cli::run_suite(json::array()), ConfigError);
  EXPECT_THROW(cli::run_suite(json{{"runs", json::array()}}), ConfigError);
}

TEST(Cli, ViolationExitCode) {
  cli::RunOutcome r;
  r.status = "violation";
  EXPECT_EQ(r.exit_code(), cli::kExitViolation);
  r.status = "not-proved";
  EXPECT_EQ(r.exit_code(), cli::kExitOk);
}

TEST(Cli, SuiteCsv) {
  const json suite = {{"defaults", {{"measure", {{"kind", "uniform"}, {"a", 0}, {"b", 1}}}}},
                      {"runs",
                       {{{"method", "entropy"}, {"function", {{"g", "x"}}}},
                        {{"method", "theorem3"}, {"function", {{"f", "x, 1"}}}},
                        {{"method", "theorem2"}, {"function", {{"g", "x"}}}}}}};
  const auto res = cli::run_suite(suite);
  ASSERT_EQ(res.rows.size(), 3u);
  EXPECT_EQ(res.exit_code, cli::kExitError);
  const auto ls = lines_of(res.csv());
  ASSERT_EQ(ls.size(), 4u);
  EXPECT_EQ(ls[0], cli::kCsvHeader);
  // bad expression row: quoted function label, empty numeric fields
  EXPECT_NE(ls[2].find("\"f=x, 1\""), std::string::npos) << ls[2];
  EXPECT_NE(ls[2].find(",,,,,,"), std::string::npos) << ls[2];
  EXPECT_NE(ls[2].find("ParseError"), std::string::npos);
  EXPECT_NEAR(res.rows[2].bound, 1.0 / 6.0, 1e-6);
}

TEST(Cli, FormatNumber) {
  EXPECT_EQ(cli::format_number(0.1), "0.1");
  EXPECT_EQ(cli::format_number(std::nan("")), "");
  EXPECT_EQ(std::stod(cli::format_number(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Cli, AcceptanceSuiteAllOk) {
  const auto res = cli::run_suite(load("suites/acceptance_suite.json"));
  EXPECT_EQ(res.exit_code, cli::kExitOk);
  EXPECT_GE(res.rows.size(), 30u);
  for (const auto& r : res.rows) EXPECT_TRUE(r.status == "ok" || r.status == "not-proved") << r.summary();
}

TEST(Cli, WeightProfilePlot) {
  const auto out = cli::run(load("configs/weight_profile_uniform.json"));
  const std::string plot = cli::emit_plotdata(out.report, "weight-profile");
  EXPECT_EQ(lines_of(plot).front(), "# entrobound weight-profile");
  const auto rows = data_rows(plot);
  ASSERT_EQ(rows.size(), 513u);
  bool found = false;
  for (const auto& r : rows) {
    ASSERT_EQ(r.size(), 2u);
    // for U(0,1): V = 1/2 at the median and K = 8 V^2 (L + 1) with L = 0
    if (std::abs(r[0] - 0.5) < 1e-12) {
      EXPECT_NEAR(r[1], 2.0, 1e-12);
      found = true;
    }
  }
  EXPECT_TRUE(found);
  const auto v = data_rows(cli::emit_plotdata(out.report, "weight-profile", "V"));
  EXPECT_NEAR(v[256][1], 0.5, 1e-12);
}

TEST(Cli, MissingSeries) {
  const auto out = cli::run(load("configs/entropy_uniform.json"));
  EXPECT_THROW(cli::emit_plotdata(out.report, "mc-convergence"), MissingSeriesError);
  EXPECT_THROW(cli::emit_plotdata(out.report, "slack-vs-param"), MissingSeriesError);
}

TEST(Cli, SweepSlackSeries) {
  const auto out = cli::run(load("configs/gaussian_lsi_sweep.json"));
  ASSERT_EQ(out.report["result"]["runs"].size(), 5u);
  const auto rows = data_rows(cli::emit_plotdata(out.report, "slack-vs-param"));
  ASSERT_EQ(rows.size(), 5u);
  for (const auto& r : rows) {
    // exponentials are extremal for the Gaussian LSI
    const double l = r[0], exact = 0.5 * l * l * std::exp(0.5 * l * l);
    EXPECT_NEAR(r[1], 0.0, 1e-7 * exact);
  }
}

TEST(Cli, ConvergenceSeriesShrinks) {
  json cfg = load("configs/theorem1_two_leaf.json");
  cfg["samples"] = 200000;
  const auto out = cli::run(cfg);
  const auto rows = data_rows(cli::emit_plotdata(out.report, "mc-convergence", "entropy"));
  ASSERT_GE(rows.size(), 3u);
  const auto& a = rows.front();
  const auto& b = rows.back();
  ASSERT_EQ(a.size(), 3u);
  // sigma ~ n^(-1/2)
  const double slope = std::log(b[2] / a[2]) / std::log(b[0] / a[0]);
  EXPECT_NEAR(slope, -0.5, 0.15);
}

TEST(Cli, OverridesApply) {
  cli::Overrides o;
  o.seed = 99;
  o.samples = 20000;
  const auto out = cli::run(load("configs/brownian_example.json"), o);
  EXPECT_EQ(out.seed, std::optional<std::uint64_t>(99));
  EXPECT_EQ(out.report["inputs"]["samples"], 20000);
  EXPECT_EQ(out.report["inputs"]["seed"], 99);
}

TEST(Cli, ReportsAreReproducible) {
  json cfg = load("configs/poisson_bump.json");
  cfg["samples"] = 50000;
  ::setenv("ENTROBOUND_THREADS", "1", 1);
  const std::string a = cli::run(cfg).report.dump();
  ::setenv("ENTROBOUND_THREADS", "5", 1);
  const std::string b = cli::run(cfg).report.dump();
  ::unsetenv("ENTROBOUND_THREADS");
  const std::string c = cli::run(cfg).report.dump();
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
}

TEST(Cli, MainEndToEnd) {
  const auto dir = std::filesystem::temp_directory_path() / "entrobound_test_cli";
  std::filesystem::create_directories(dir);
  const std::string src = ENTROBOUND_SOURCE_DIR;
  const auto report = dir / "report.json";
  EXPECT_EQ(call_main({"run", "--config", src + "/configs/weight_profile_uniform.json", "--out", report.string()}), 0);
  const json r = json::parse(read_file(report));
  EXPECT_EQ(r["method"], "theorem3");

  const auto plot = dir / "k.dat";
  EXPECT_EQ(call_main({"plot", "--in", report.string(), "--kind", "weight-profile", "--out", plot.string()}), 0);
  EXPECT_EQ(data_rows(read_file(plot)).size(), 513u);
  EXPECT_EQ(call_main({"plot", "--in", report.string(), "--kind", "mc-convergence", "--out", plot.string()}), 1);

  EXPECT_EQ(call_main({"run", "--config", src + "/configs/bad_function.json", "--out", report.string()}), 1);
  EXPECT_EQ(call_main({"run", "--config", (dir / "missing.json").string()}), 1);

  const auto csv = dir / "suite.csv";
  const auto suite = dir / "suite.json";
  {
    std::ofstream os(suite);
    os << R"j({"runs": [{"method": "entropy", "measure": {"kind": "gaussian"}, "function": {"g": "exp(x)"}}]})j";
  }
  EXPECT_EQ(call_main({"suite", "--config", suite.string(), "--out", csv.string()}), 0);
  const auto ls = lines_of(read_file(csv));
  ASSERT_EQ(ls.size(), 2u);
  EXPECT_EQ(ls[0], cli::kCsvHeader);
  std::filesystem::remove_all(dir);
}
