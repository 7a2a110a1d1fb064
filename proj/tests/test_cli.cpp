#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "avgbound/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliRun {
  int code = -1;
  std::string log;  // stdout + stderr
};

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "avgbound_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

CliRun run_cli(const std::string& args, const fs::path& dir) {
  const fs::path log = dir / "run.log";
  const std::string cmd = std::string("\"") + AVGBOUND_CLI_PATH + "\" " + args + " > \"" +
                          log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  CliRun r;
  if (status != -1 && WIFEXITED(status)) r.code = WEXITSTATUS(status);
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.log = ss.str();
  return r;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  return json::parse(in);
}

double cell(const avgbound::io::CsvTable& t, std::size_t row, std::size_t col) {
  return std::strtod(t.rows[row][col].c_str(), nullptr);
}

const std::string kQuickA =
    "example.figure = a\n"
    "output.rows = 101\n"
    "audit.nodes = 2000\n";

}  // namespace

TEST_CASE("cli n-op writes bound curves, fixed-point metadata and the audit") {
  const fs::path dir = fresh_dir("n_op");
  write_file(dir / "run.cfg", kQuickA);
  const CliRun r = run_cli("n-op --config \"" + (dir / "run.cfg").string() + "\" --out \"" +
                               (dir / "out").string() + "\"",
                           dir);
  CHECK(r.code == 0);
  CHECK(r.log.find("T_N =") != std::string::npos);

  const json meta = read_json(dir / "out" / "ell0.json");
  REQUIRE(meta["labels"].size() == 2);
  CHECK(meta["labels"][0] == "1");
  // frozen fixed-point oracle for this configuration
  CHECK(std::fabs(meta["ell0"][0].get<double>() - 0.12513687771368657) < 1e-12);
  CHECK(std::fabs(meta["ell0"][1].get<double>() - 0.12517596466977762) < 1e-12);
  CHECK(meta["eps_A"].get<double>() < 0.01);
  CHECK(meta["residual"].get<double>() < 1e-12);
  CHECK(meta["iterations"].get<int>() >= 1);
  CHECK(meta["status"] == "full_horizon");
  CHECK(meta["U_eff"].get<double>() == doctest::Approx(1.0));
  CHECK_FALSE(meta["degenerate_zero"].get<bool>());
  CHECK(meta["T_N_seconds"].get<double>() > 0.0);

  const avgbound::io::CsvTable curves = avgbound::io::read_csv((dir / "out" / "n_result.csv").string());
  REQUIRE(curves.header.size() == 5);
  CHECK(curves.header[0] == "tau");
  CHECK(curves.header[1] == "n_1");
  CHECK(curves.header[4] == "m_2");
  REQUIRE(curves.rows.size() == 101);
  CHECK(cell(curves, 0, 0) == 0.0);
  CHECK(cell(curves, 0, 1) == doctest::Approx(0.12513687771368657).epsilon(1e-12));
  CHECK(cell(curves, 0, 3) == 0.0);  // m starts at zero
  CHECK(cell(curves, 100, 0) == doctest::Approx(1.0));
  // n stays positive and m accumulates monotonically from zero
  CHECK(cell(curves, 100, 1) > 0.0);
  CHECK(cell(curves, 100, 2) > 0.0);
  CHECK(cell(curves, 100, 3) > 0.0);

  const avgbound::io::CsvTable audit = avgbound::io::read_csv((dir / "out" / "audit.csv").string());
  REQUIRE(audit.header.size() == 3);
  CHECK(audit.header[1] == "margin_1");
  REQUIRE(audit.rows.size() == 2001);  // audit.nodes + 1
  for (std::size_t k = 0; k < audit.rows.size(); k += 100) {
    CHECK(cell(audit, k, 1) > -1e-6);
    CHECK(cell(audit, k, 2) > -1e-6);
  }
}

TEST_CASE("cli l-op writes the direct error trajectory") {
  const fs::path dir = fresh_dir("l_op");
  write_file(dir / "run.cfg", kQuickA);
  const CliRun r = run_cli("l-op --config \"" + (dir / "run.cfg").string() + "\" --out \"" +
                               (dir / "out").string() + "\"",
                           dir);
  CHECK(r.code == 0);
  CHECK(r.log.find("T_L =") != std::string::npos);

  const avgbound::io::CsvTable t = avgbound::io::read_csv((dir / "out" / "l_result.csv").string());
  REQUIRE(t.header.size() == 7);
  CHECK(t.header[0] == "t");
  CHECK(t.header[1] == "tau");
  CHECK(t.header[2] == "L_1");
  CHECK(t.header[4] == "theta_mod_2pi");
  CHECK(t.header[5] == "norm_1");
  REQUIRE(t.rows.size() == 101);
  // the initial error is exactly zero
  CHECK(cell(t, 0, 0) == 0.0);
  CHECK(cell(t, 0, 2) == 0.0);
  CHECK(cell(t, 0, 3) == 0.0);
  CHECK(cell(t, 0, 4) == 0.0);
  CHECK(cell(t, 0, 5) == 0.0);
  // fast time runs to U / eps
  CHECK(cell(t, 100, 0) == doctest::Approx(100.0).epsilon(1e-9));
  CHECK(cell(t, 100, 1) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("cli compare runs both routes and confirms the bound") {
  const fs::path dir = fresh_dir("compare");
  write_file(dir / "run.cfg", kQuickA + "samples.count = 2000\n");
  const CliRun r = run_cli("compare --config \"" + (dir / "run.cfg").string() + "\" --out \"" +
                               (dir / "out").string() + "\"",
                           dir);
  CHECK(r.code == 0);
  CHECK(r.log.find("speedup") != std::string::npos);

  const json rep = read_json(dir / "out" / "report.json");
  CHECK(rep["all_hold"].get<bool>());
  REQUIRE(rep["bound_holds"].size() == 2);
  CHECK(rep["bound_holds"][0].get<bool>());
  CHECK(rep["bound_holds"][1].get<bool>());
  CHECK(rep["n_samples"].get<int>() == 2000);
  CHECK(rep["n_windows"].get<int>() == 20);
  CHECK(rep["n_status"] == "full_horizon");
  CHECK(rep["l_status"] == "completed");
  CHECK(rep["worst_ratio"][0].get<double>() < 1.0 + 1e-9);
  CHECK(rep["worst_ratio"][0].get<double>() > 0.5);
  CHECK(rep["speedup"].get<double>() > 1.0);
  CHECK(rep["window_peak_ratio"].size() == 20);

  const avgbound::io::CsvTable t = avgbound::io::read_csv((dir / "out" / "compare.csv").string());
  REQUIRE(t.header.size() == 6);
  CHECK(t.header[2] == "Lnorm_1");
  CHECK(t.header[4] == "n_1");
  REQUIRE(t.rows.size() == 101);
  // the bound dominates on the emitted grid as well
  for (std::size_t k = 0; k < t.rows.size(); k += 10) {
    CHECK(cell(t, k, 2) <= cell(t, k, 4) * (1.0 + 1e-9));
    CHECK(cell(t, k, 3) <= cell(t, k, 5) * (1.0 + 1e-9));
  }
}

TEST_CASE("cli check passes clean and catches an injected estimator fault") {
  const std::string quick_checks =
      "check.samples = 400\n"
      "check.family_trials = 2000\n"
      "check.bundle_trials = 80\n";

  const fs::path good = fresh_dir("check_good");
  write_file(good / "run.cfg", kQuickA + quick_checks);
  const CliRun ok = run_cli("check --config \"" + (good / "run.cfg").string() + "\" --out \"" +
                                (good / "out").string() + "\" --seed 1",
                            good);
  CHECK(ok.code == 0);
  const json jok = read_json(good / "out" / "check.json");
  CHECK(jok["pass"].get<bool>());
  CHECK(jok["identities"]["entries"].size() == 9);
  CHECK(jok["family"]["pass"].get<bool>());
  CHECK(jok["bundle_validity"]["pass"].get<bool>());
  CHECK(jok["bundle_contract"]["pass"].get<bool>());

  const fs::path bad = fresh_dir("check_bad");
  write_file(bad / "run.cfg", kQuickA + quick_checks + "debug.corrupt_s = true\n");
  const CliRun fail = run_cli("check --config \"" + (bad / "run.cfg").string() + "\" --out \"" +
                                  (bad / "out").string() + "\"",
                              bad);
  CHECK(fail.code == 1);
  CHECK(fail.log.find("FAIL identity a") != std::string::npos);
  const json jbad = read_json(bad / "out" / "check.json");
  CHECK_FALSE(jbad["pass"].get<bool>());
  bool a_failed = false;
  for (const auto& e : jbad["identities"]["entries"])
    if (e["key"] == "a" && !e["pass"].get<bool>()) a_failed = true;
  CHECK(a_failed);
}

TEST_CASE("cli exit code 2 on a hypothesis violation") {
  const fs::path dir = fresh_dir("hypothesis");
  write_file(dir / "run.cfg", kQuickA + "example.epsilon = 8\n");
  const CliRun r = run_cli("n-op --config \"" + (dir / "run.cfg").string() + "\" --out \"" +
                               (dir / "out").string() + "\"",
                           dir);
  CHECK(r.code == 2);
  CHECK(r.log.find("hypothesis violation") != std::string::npos);
}

TEST_CASE("cli exit code 3 on a stalled bound with partial output") {
  const fs::path dir = fresh_dir("stall");
  write_file(dir / "run.cfg",
             "example.figure = a\n"
             "example.U = 12\n"
             "output.rows = 51\n"
             "audit.nodes = 500\n");
  const CliRun r = run_cli("n-op --config \"" + (dir / "run.cfg").string() + "\" --out \"" +
                               (dir / "out").string() + "\"",
                           dir);
  CHECK(r.code == 3);
  CHECK(r.log.find("integration stalled") != std::string::npos);

  const json meta = read_json(dir / "out" / "ell0.json");
  CHECK(meta["status"] == "integration_stall");
  CHECK(meta["stall"].get<std::string>().find("stalled") != std::string::npos);
  const double U_eff = meta["U_eff"].get<double>();
  CHECK(U_eff > 4.0);
  CHECK(U_eff < 12.0);

  const avgbound::io::CsvTable curves =
      avgbound::io::read_csv((dir / "out" / "n_result.csv").string());
  REQUIRE(curves.rows.size() == 51);
  CHECK(cell(curves, 50, 0) == doctest::Approx(U_eff).epsilon(1e-9));
}

TEST_CASE("cli exit code 4 on configuration problems") {
  const fs::path dir = fresh_dir("config_errors");

  write_file(dir / "unknown.cfg", "definitely.not.a.key = 1\n");
  CliRun r = run_cli("n-op --config \"" + (dir / "unknown.cfg").string() + "\"", dir);
  CHECK(r.code == 4);
  CHECK(r.log.find("config error") != std::string::npos);

  write_file(dir / "bad_params.cfg", "example.lambda1 = 0\n");
  r = run_cli("n-op --config \"" + (dir / "bad_params.cfg").string() + "\" --out \"" +
                  (dir / "out").string() + "\"",
              dir);
  CHECK(r.code == 4);
  CHECK(r.log.find("lambda1") != std::string::npos);

  r = run_cli("n-op", dir);  // missing --config
  CHECK(r.code == 4);

  r = run_cli("n-op --config \"" + (dir / "missing.cfg").string() + "\"", dir);
  CHECK(r.code == 4);
}

TEST_CASE("cli sweep: empty grids, grid order and per-point failure capture") {
  const fs::path empty = fresh_dir("sweep_empty");
  write_file(empty / "run.cfg", "example.figure = a\nsweep.epsilon =\n");
  CliRun r = run_cli("sweep --config \"" + (empty / "run.cfg").string() + "\" --out \"" +
                         (empty / "out").string() + "\"",
                     empty);
  CHECK(r.code == 0);
  const avgbound::io::CsvTable none =
      avgbound::io::read_csv((empty / "out" / "sweep.csv").string());
  CHECK(none.header.size() == 11);
  CHECK(none.rows.empty());

  const fs::path grid = fresh_dir("sweep_grid");
  write_file(grid / "run.cfg",
             "example.figure = a\n"
             "samples.count = 500\n"
             "sweep.epsilon = 1e-2, 8\n"
             "sweep.threads = 2\n");
  r = run_cli("sweep --config \"" + (grid / "run.cfg").string() + "\" --out \"" +
                  (grid / "out").string() + "\"",
              grid);
  CHECK(r.code == 0);
  CHECK(r.log.find("2 point(s), 1 ok") != std::string::npos);

  const avgbound::io::CsvTable t = avgbound::io::read_csv((grid / "out" / "sweep.csv").string());
  REQUIRE(t.rows.size() == 2);
  CHECK(t.header[0] == "epsilon");
  CHECK(t.header[5] == "status");
  // rows come out in grid order regardless of the worker pool
  CHECK(cell(t, 0, 0) == doctest::Approx(1e-2));
  CHECK(t.rows[0][5] == "ok");
  CHECK(t.rows[0][6] == "true");
  CHECK(cell(t, 0, 7) < 1.0 + 1e-9);  // worst_ratio
  CHECK(cell(t, 1, 0) == doctest::Approx(8.0));
  CHECK(t.rows[1][5] == "hypothesis_violation");
  CHECK(t.rows[1][6] == "na");
  CHECK_FALSE(t.rows[1][10].empty());  // detail preserved (commas sanitized)
}
