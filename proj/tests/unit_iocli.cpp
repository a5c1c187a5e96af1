#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "doctest.h"
#include "quartet/iocli.hpp"
#include "quartet/presets.hpp"

using namespace quartet;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("quartet_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  REQUIRE(out.good());
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("quartet");
  for (const auto& a : args) argv.push_back(a.c_str());
  return iocli::cli_main(static_cast<int>(argv.size()), argv.data());
}

// Message of the ConfigError the callable throws; fails the test otherwise.
std::string config_error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const iocli::ConfigError& e) {
    return e.what();
  }
  FAIL("expected a ConfigError");
  return {};
}

}  // namespace

TEST_CASE("trace csv round trip is bit exact") {
  sequences::Trace t;
  t.time_us = {0.0, 1.0 / 3.0, 2.0 / 3.0 + 1e-16};
  t.pl = {7.000000000000001e-06, 0.123456789012345678, 56.39};
  t.sigma = {0.1, 0.2, 0.30000000000000004};
  t.label = "probe";

  const std::string csv = iocli::trace_to_csv(t);
  CHECK(csv.rfind("time_us,pl_counts_per_us,sigma", 0) == 0);
  const auto back = iocli::trace_from_csv(csv, "<test>");
  REQUIRE(back.time_us.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(back.time_us[i] == t.time_us[i]);
    CHECK(back.pl[i] == t.pl[i]);
    CHECK(back.sigma[i] == t.sigma[i]);
  }

  // Without sigma the column disappears.
  t.sigma.clear();
  const std::string csv2 = iocli::trace_to_csv(t);
  CHECK(csv2.rfind("time_us,pl_counts_per_us\n", 0) == 0);
  CHECK(iocli::trace_from_csv(csv2, "<test>").sigma.empty());
}

TEST_CASE("csv ingestion reports the offending row") {
  CHECK_THROWS_AS(iocli::trace_from_csv("nonsense\n1,2\n", "<test>"),
                  iocli::ConfigError);

  const auto bad_cell = config_error_of([] {
    iocli::trace_from_csv("time_us,pl_counts_per_us\n0,1\n0.5,oops\n",
                          "<test>");
  });
  CHECK(bad_cell.find("row 3") != std::string::npos);
  CHECK(bad_cell.find("<test>") != std::string::npos);

  CHECK_THROWS_AS(
      iocli::trace_from_csv("time_us,pl_counts_per_us\n0,1,9\n", "<test>"),
      iocli::ConfigError);
  const auto decreasing = config_error_of([] {
    iocli::trace_from_csv("time_us,pl_counts_per_us\n1,1\n0.5,1\n", "<t>");
  });
  CHECK(decreasing.find("time not increasing") != std::string::npos);
  CHECK_THROWS_AS(iocli::trace_from_csv("time_us,pl_counts_per_us\n", "<t>"),
                  iocli::ConfigError);
}

TEST_CASE("config parsing rejects unknown keys with their path") {
  CHECK_THROWS_AS(iocli::parse_config("{", "<inline>"), iocli::ConfigError);
  CHECK_THROWS_AS(iocli::parse_config("{}", "<inline>"), iocli::ConfigError);

  const auto unknown = config_error_of([] {
    iocli::parse_config(R"({"model": {"rates": {"gamma_x": 1.0}}})",
                        "<inline>");
  });
  CHECK(unknown.find("model.rates.gamma_x") != std::string::npos);

  const auto bad_preset = config_error_of([] {
    iocli::parse_config(R"({"model": {"rates_preset": "bogus"}})", "<inline>");
  });
  CHECK(bad_preset.find("rates_preset") != std::string::npos);

  const auto parse_err = config_error_of(
      [] { iocli::parse_config("{\n  \"model\": oops\n}", "<inline>"); });
  CHECK(parse_err.find("line") != std::string::npos);
}

TEST_CASE("presets land in the parsed model") {
  const auto cfg = iocli::parse_config(
      R"({"model": {"rates_preset": "table2_no_strain",
                    "strain_preset": "table1_strain"}})",
      "<inline>");
  CHECK(cfg.model.rates.gamma_r == doctest::Approx(56.39));
  CHECK(cfg.model.rates.gamma_3 == doctest::Approx(3.81));
  CHECK(cfg.model.rates.gamma_4 == doctest::Approx(0.24));
  CHECK(cfg.model.rates.beta == doctest::Approx(0.1358));
  CHECK(cfg.rates_preset == "table2_no_strain");
  CHECK(cfg.strain_preset == "table1_strain");
  // Strain lands in both manifold Hamiltonians (same deformation).
  const auto s = presets::strain("table1_strain");
  CHECK(s.pi_z == doctest::Approx(1.51));
  CHECK(s.pi_1 == doctest::Approx(3.78));
  CHECK(s.pi_2 == doctest::Approx(3.68));
  CHECK(s.theta == doctest::Approx(0.92 * std::numbers::pi));
  CHECK(std::abs(cfg.model.h_ground.matrix(0, 1)) > 0.0);
  // Detection defaults.
  CHECK(cfg.model.efficiency == doctest::Approx(1.5e-4));
  CHECK(cfg.model.dark_rate_hz == doctest::Approx(7.0));
  CHECK(cfg.seed == 1);
}

TEST_CASE("simulate subcommand end to end") {
  const auto dir = fresh_dir("simulate");
  const auto out = dir / "out";
  const auto config = dir / "config.json";
  spit(config, R"({
    "model": {"rates_preset": "table2_no_strain"},
    "experiment": {"kind": "lifetime", "transition": "A1",
                   "options": {"samples": 12}},
    "output": {"directory": ")" + out.generic_string() + R"("}
  })");

  CHECK(run_cli({"simulate", config.string()}) == iocli::exit_ok);
  REQUIRE(fs::exists(out / "result.json"));

  const auto doc = nlohmann::json::parse(slurp(out / "result.json"));
  CHECK(doc.at("schema_version").get<int>() == iocli::schema_version);
  const double tau = doc.at("scalars").at("tau_us").get<double>();
  CHECK(tau == doctest::Approx(1.0 / 166.39).epsilon(0.01));
  CHECK(doc.at("provenance").at("seed").get<std::uint64_t>() == 1);
  CHECK(doc.at("config").at("model").is_object());

  // Exactly one trace CSV, ingestible, strictly increasing times.
  int csvs = 0;
  fs::path trace_path;
  for (const auto& e : fs::directory_iterator(out)) {
    if (e.path().extension() == ".csv") {
      ++csvs;
      trace_path = e.path();
    }
  }
  CHECK(csvs == 1);
  const auto trace = iocli::ingest_trace(trace_path.string());
  CHECK(trace.time_us.size() == 12);
  CHECK_NOTHROW(trace.validate());

  // Same config, fresh directory: the emitted CSV is byte-identical.
  const auto out2 = dir / "out2";
  CHECK(run_cli({"simulate", config.string(), "--out",
                 out2.generic_string()}) == iocli::exit_ok);
  CHECK(slurp(trace_path) == slurp(out2 / trace_path.filename()));
}

TEST_CASE("cli rejects bad invocations with exit code 1") {
  const auto dir = fresh_dir("cli_errors");

  CHECK(run_cli({"bogus"}) == iocli::exit_validation);
  CHECK(run_cli({"simulate", (dir / "missing.json").string()}) ==
        iocli::exit_validation);

  // Validation failure inside the config (negative rate).
  const auto bad = dir / "bad.json";
  spit(bad, R"({"model": {"rates": {"gamma_r": -5.0}},
                "experiment": {"kind": "lifetime"}})");
  CHECK(run_cli({"simulate", bad.string()}) == iocli::exit_validation);

  // Simulate without an experiment section.
  const auto none = dir / "none.json";
  spit(none, R"({"model": {"rates_preset": "table2_no_strain"}})");
  CHECK(run_cli({"simulate", none.string()}) == iocli::exit_validation);
}

TEST_CASE("result documents carry sorted keys and config snapshots") {
  iocli::ResultBuilder builder(7, R"({"model":{}})");
  builder.add_scalar("zeta", 1.0);
  builder.add_scalar("alpha", 2.0);
  builder.add_note("note one");
  const std::string text = builder.json();
  const auto doc = nlohmann::json::parse(text);
  CHECK(doc.at("scalars").at("zeta").get<double>() == 1.0);
  CHECK(doc.at("provenance").at("seed").get<std::uint64_t>() == 7);
  CHECK(doc.at("config").at("model").is_object());
  // nlohmann objects iterate lexicographically: alpha serializes before zeta.
  CHECK(text.find("alpha") < text.find("zeta"));
}
