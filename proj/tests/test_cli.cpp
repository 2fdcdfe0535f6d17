#include "doctest.h"

#include "acp_phonon/commands.hpp"
#include "acp_phonon/config.hpp"
#include "acp_phonon/io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

using namespace acp_phonon;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("acp_phonon_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream o;
  o << f.rdbuf();
  return o.str();
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "run.cfg";
  std::ofstream(p) << text;
  return p;
}

const char* kSmallChain = R"(# four atom chain
[system]
model = chain1d
n_atoms = 4

[numerics]
scf_tol = 1e-10
id_threshold = 1e-5
seed = 7
)";

std::string chain_config(int n_atoms) {
  std::string text = kSmallChain;
  text.replace(text.find("n_atoms = 4"), 11, "n_atoms = " + std::to_string(n_atoms));
  return text;
}

CommandOptions options_for(const fs::path& cfg, const fs::path& out) {
  CommandOptions o;
  o.config_path = cfg;
  o.out_dir = out;
  return o;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(ACP_PHONON_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("config defaults are materialized per model") {
  const RunConfig c = parse_config("[system]\nmodel = chain1d\n");
  CHECK(c.system.n_atoms == 60);
  CHECK(c.kernel().kappa == doctest::Approx(0.1));
  CHECK(c.kernel().eps0 == doctest::Approx(1.0));
  const AtomicConfiguration a = c.configuration();
  CHECK(a.cell[0] == doctest::Approx(144.0));
  CHECK(a.sigma == doctest::Approx(0.3));
  CHECK(c.acp_options().n_cheb == 20);
  CHECK(c.acp_options().srft_oversampling == 8);
  CHECK(c.acp_options().max_outer_iters == 4);
  CHECK(c.phonon.dos_sigma == doctest::Approx(0.01));

  const RunConfig t = parse_config("[system]\nmodel = triangular2d\nk_cells = 2\n");
  CHECK(t.configuration().n_atoms() == 8);
  CHECK(t.kernel().eps0 == doctest::Approx(0.05));
  CHECK(t.configuration().sigma == doctest::Approx(0.24));
  CHECK(t.acp_options().srft_oversampling == 16);
  CHECK(t.acp_options().max_outer_iters == 2);
  CHECK(t.phonon.dos_sigma == doctest::Approx(0.08));
  CHECK(t.configuration_of_size(18).n_atoms() == 18);
  CHECK_THROWS_AS(t.configuration_of_size(10), InvalidArgument);
}

TEST_CASE("config parsing rejects bad input") {
  CHECK_THROWS_AS(parse_config("[system]\nbogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[nowhere]\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[system]\nn_atoms = 4\nn_atoms = 5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[system]\nn_atoms = four\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("n_atoms = 4\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[physics]\nkappa = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[phonon]\nmethods = dfpt,magic\n"), ConfigError);
  CHECK_NOTHROW(parse_config("; comment\n[system] # trailing\nn_atoms = 4 ; note\n"));
}

TEST_CASE("config text round trip") {
  const RunConfig c = parse_config(
      "[system]\nmodel = triangular2d\nk_cells = 3\nvacancy_count = 2\n"
      "[numerics]\nid_threshold = 1e-5\nn_cheb = 12\n[phonon]\nmethods = acp,dfpt\n"
      "acoustic_sum_rule = false\n");
  const RunConfig again = parse_config(c.to_text());
  CHECK(again.to_text() == c.to_text());
  CHECK(again.acp_options().id_threshold == 1e-5);
  CHECK(again.phonon.methods.size() == 2);
  CHECK(!again.phonon.acoustic_sum_rule);
  CHECK(again.configuration().n_atoms() == 16);
}

TEST_CASE("shipped example configs load") {
  int count = 0;
  for (const auto& entry : fs::directory_iterator(ACP_PHONON_CONFIG_DIR)) {
    if (entry.path().extension() != ".cfg") continue;
    CAPTURE(entry.path().string());
    const RunConfig c = load_config(entry.path());
    CHECK(c.configuration().n_atoms() > 0);
    ++count;
  }
  CHECK(count >= 2);
}

TEST_CASE("numbers round trip through their text form") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 200; ++i) {
    const double x = u(rng) * std::pow(10.0, i % 20 - 10);
    CHECK(std::stod(format_number(x)) == x);
  }
  CHECK(std::stod(format_number(std::numeric_limits<double>::min())) ==
        std::numeric_limits<double>::min());
  CHECK(format_number(0.5) == "0.5");
}

TEST_CASE("csv and checkpoint files") {
  TempDir tmp;
  Eigen::MatrixXd rows(2, 2);
  rows << 1.0, 0.1, 2.0, 1.0 / 3.0;
  const std::string csv = csv_table({"a", "b"}, rows);
  CHECK(csv.rfind("a,b\n", 0) == 0);
  CHECK(csv.find(format_number(1.0 / 3.0)) != std::string::npos);
  write_text_file(tmp.path / "t.csv", csv);
  CHECK(slurp(tmp.path / "t.csv") == csv);

  CHECK(!read_checkpoint(tmp.path));
  Checkpoint cp{"abc", Field::LinSpaced(16, 0.0, 1.0), Batch::Random(16, 3)};
  write_checkpoint(tmp.path, cp);
  const auto back = read_checkpoint(tmp.path);
  REQUIRE(back);
  CHECK(back->key == "abc");
  CHECK(back->input_density == cp.input_density);
  CHECK(back->orbitals == cp.orbitals);
}

TEST_CASE("log-log slope") {
  CHECK(loglog_slope({10, 20, 40}, {1, 8, 64}) == doctest::Approx(3.0));
  CHECK_THROWS_AS(loglog_slope({10}, {1}), InvalidArgument);
}

TEST_CASE("ground-state command and checkpoint restart") {
  TempDir tmp;
  const fs::path cfg = write_config(tmp.path, std::string(kSmallChain) + "[output]\ncheckpoint = true\n");
  std::ostringstream log;
  REQUIRE(cmd_ground_state(options_for(cfg, tmp.path / "out"), log) == exit_ok);
  const json first = json::parse(slurp(tmp.path / "out" / "ground_state.json"));
  CHECK(first["n_atoms"] == 4);
  CHECK(first["eigenvalues"].size() == 4);
  CHECK(first["scf_residual_history"].back().get<double>() <= 1e-10);
  CHECK(!first["restarted_from_checkpoint"].get<bool>());
  CHECK(fs::exists(tmp.path / "out" / "density.csv"));

  REQUIRE(cmd_ground_state(options_for(cfg, tmp.path / "out"), log) == exit_ok);
  const json second = json::parse(slurp(tmp.path / "out" / "ground_state.json"));
  CHECK(second["restarted_from_checkpoint"].get<bool>());
  CHECK(second["scf_iterations"].get<int>() <= 2);
  CHECK(second["gap"].get<double>() == doctest::Approx(first["gap"].get<double>()).epsilon(1e-9));
  CHECK(second["total_energy"].get<double>() ==
        doctest::Approx(first["total_energy"].get<double>()).epsilon(1e-10));
}

TEST_CASE("malformed config leaves no artifacts") {
  TempDir tmp;
  const fs::path cfg = write_config(tmp.path, "[system]\nmodel = helix\n");
  std::ostringstream log;
  CHECK(cmd_ground_state(options_for(cfg, tmp.path / "out"), log) == exit_config);
  CHECK(cmd_phonon(options_for(cfg, tmp.path / "out"), log) == exit_config);
  CHECK((!fs::exists(tmp.path / "out") || fs::is_empty(tmp.path / "out")));
  CHECK(cmd_ground_state(options_for(tmp.path / "missing.cfg", tmp.path / "out"), log) == exit_config);
}

TEST_CASE("SCF failure maps to its exit code") {
  TempDir tmp;
  const fs::path cfg = write_config(tmp.path, std::string(kSmallChain) + "max_scf_iters = 1\n");
  std::ostringstream log;
  CHECK(cmd_ground_state(options_for(cfg, tmp.path / "out"), log) == exit_scf);
}

TEST_CASE("frozen phonon command on a four atom chain") {
  TempDir tmp;
  const fs::path cfg = write_config(
      tmp.path, std::string(kSmallChain) + "[phonon]\nmethods = fd\nacoustic_sum_rule = false\n");
  std::ostringstream log;
  REQUIRE(cmd_phonon(options_for(cfg, tmp.path / "out"), log) == exit_ok);
  const fs::path out = tmp.path / "out";
  const json rep = json::parse(slurp(out / "report_fd.json"));
  CHECK(rep["acoustic_sum_rule_violation"].get<double>() <= 1e-4);
  CHECK(rep["scf_solves"] == 8);
  CHECK(slurp(out / "dmatrix_fd.csv").rfind("I0_x,I1_x,I2_x,I3_x\n", 0) == 0);
  CHECK(slurp(out / "frequencies_fd.csv").rfind("index,omega\n", 0) == 0);
  CHECK(slurp(out / "dos_fd.csv").rfind("omega,rho\n", 0) == 0);
  CHECK(!fs::exists(out / "comparison.json"));
}

TEST_CASE("phonon command compares methods") {
  TempDir tmp;
  // eight atoms give the compression enough columns to adapt to
  const fs::path cfg = write_config(tmp.path, chain_config(8) + "[phonon]\nmethods = dfpt,acp,fd\n");
  CommandOptions o = options_for(cfg, tmp.path / "out");
  std::ostringstream log;
  REQUIRE(cmd_phonon(o, log) == exit_ok);
  const fs::path out = tmp.path / "out";
  for (const char* m : {"dfpt", "acp", "fd"}) {
    const std::string tag = m;
    CHECK(fs::exists(out / ("dmatrix_" + tag + ".csv")));
    CHECK(fs::exists(out / ("frequencies_" + tag + ".csv")));
    CHECK(fs::exists(out / ("dos_" + tag + ".csv")));
    const json rep = json::parse(slurp(out / ("report_" + tag + ".json")));
    CHECK(rep["acoustic_sum_rule_enforced"].get<bool>());
    CHECK(rep.contains("timings"));
    if (tag != "acp") CHECK(rep["acoustic_sum_rule_violation"].get<double>() <= 1e-4);
  }

  const json acp = json::parse(slurp(out / "report_acp.json"));
  CHECK(acp["seed"] == 7);
  CHECK(acp["n_mu_history"].size() == acp["outer_iterations"].get<std::size_t>());
  CHECK(acp["sketch_seeds"].size() == acp["n_mu_history"].size());

  const json cmp = json::parse(slurp(out / "comparison.json"));
  REQUIRE(cmp.size() == 3);
  CHECK(cmp[0]["reference"] == "dfpt");
  CHECK(cmp[0]["candidate"] == "acp");
  CHECK(cmp[0]["linf_freq"].get<double>() <= 1e-4);
  CHECK(cmp[1]["linf_freq"].get<double>() <= 2e-3);
}

TEST_CASE("outputs are bit identical for a fixed seed") {
  TempDir tmp;
  const fs::path cfg = write_config(tmp.path, std::string(kSmallChain) + "[phonon]\nmethods = acp\n");
  std::ostringstream log;
  REQUIRE(cmd_phonon(options_for(cfg, tmp.path / "a"), log) == exit_ok);
  REQUIRE(cmd_phonon(options_for(cfg, tmp.path / "b"), log) == exit_ok);
  for (const char* f : {"dmatrix_acp.csv", "frequencies_acp.csv", "dos_acp.csv"})
    CHECK(slurp(tmp.path / "a" / f) == slurp(tmp.path / "b" / f));
  json ra = json::parse(slurp(tmp.path / "a" / "report_acp.json"));
  json rb = json::parse(slurp(tmp.path / "b" / "report_acp.json"));
  ra.erase("timings");
  rb.erase("timings");
  CHECK(ra == rb);
}

TEST_CASE("benchmark command") {
  TempDir tmp;
  const fs::path cfg = write_config(tmp.path, kSmallChain);
  std::ostringstream log;
  CommandOptions o = options_for(cfg, tmp.path / "one");
  o.sizes = {4};
  o.methods = {"dfpt"};
  REQUIRE(cmd_benchmark(o, log) == exit_ok);
  const std::string one = slurp(tmp.path / "one" / "scaling.csv");
  CHECK(one.rfind("size,method,seconds,slope\n", 0) == 0);
  std::istringstream lines(one);
  std::string header, row, extra;
  std::getline(lines, header);
  std::getline(lines, row);
  CHECK(!std::getline(lines, extra));
  CHECK(row.rfind("4,dfpt,", 0) == 0);
  CHECK(row.back() == ',');

  o.out_dir = tmp.path / "two";
  o.sizes = {4, 6, 8};
  o.methods = {"dfpt", "acp"};
  REQUIRE(cmd_benchmark(o, log) == exit_ok);
  const json rep = json::parse(slurp(tmp.path / "two" / "scaling_report.json"));
  REQUIRE(rep.size() == 6);
  for (const json& cell : rep) {
    CHECK(cell.contains("seconds"));
    CHECK(!cell.contains("error"));
  }
  std::istringstream table(slurp(tmp.path / "two" / "scaling.csv"));
  int rows = 0;
  for (std::string line; std::getline(table, line);) rows += line.back() != ',';
  CHECK(rows == 7);
}

TEST_CASE("command line entry point") {
  TempDir tmp;
  const fs::path cfg = write_config(tmp.path, kSmallChain);
  CHECK(run_cli("ground-state --config " + cfg.string() + " --out " + (tmp.path / "o").string()) == 0);
  CHECK(fs::exists(tmp.path / "o" / "ground_state.json"));
  CHECK(run_cli("ground-state") == 2);
  CHECK(run_cli("phonon --config " + cfg.string() + " --method nope --out " +
                (tmp.path / "p").string()) == 2);
  CHECK(run_cli("frobnicate") == 2);
  const fs::path bad = tmp.path / "bad.cfg";
  std::ofstream(bad) << "[system\n";
  CHECK(run_cli("ground-state --config " + bad.string() + " --out " + (tmp.path / "q").string()) == 2);
  CHECK(!fs::exists(tmp.path / "q" / "ground_state.json"));
}
