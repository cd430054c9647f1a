#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "catch_amalgamated.hpp"

#include "kgm/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::initializer_list<std::string> args) {
  std::vector<std::string> storage{"kgm"};
  storage.insert(storage.end(), args);
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  std::ostringstream out, err;
  const int code = kgm::cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("kgm_cli_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("config round trip") {
  using namespace kgm::cli;
  RunConfig cfg;
  CHECK(parse_config(serialize(cfg)) == cfg);

  cfg.seed = 7;
  cfg.solve.p = 2.75;
  cfg.solve.omega = 0.123456789012345;
  cfg.solve.force = true;
  cfg.solve.grid.boundary = "dirichlet";
  cfg.solve.solver.method = "nehari";
  cfg.zero_mass.alpha = 4.5;
  cfg.zero_mass.limit = false;
  cfg.sweep.p_range = "2.1:3.9:0.1";
  cfg.thresholds.p = 3.5;
  cfg.thresholds.out = "th.json";
  cfg.selftest.quick = true;
  const std::string text = serialize(cfg);
  CHECK(parse_config(text) == cfg);
  CHECK(text.find("[solve]") != std::string::npos);
  CHECK(text.find("omega=0.123456789012345") != std::string::npos);
}

TEST_CASE("config file with flag overrides") {
  const auto dir = scratch_dir("config");
  fs::create_directories(dir);
  {
    std::ofstream os(dir / "run.ini");
    os << "[thresholds]\np=3\nomega=0.5\n";
  }
  const auto a = run({"thresholds", "--config", (dir / "run.ini").string()});
  CHECK(a.code == 0);
  CHECK(a.out.find("\"omega\": 0.5") != std::string::npos);
  const auto b = run({"thresholds", "--config", (dir / "run.ini").string(), "--omega", "0.9"});
  CHECK(b.code == 0);
  CHECK(b.out.find("\"omega\": 0.9") != std::string::npos);
}

TEST_CASE("thresholds command") {
  const auto a = run({"thresholds", "--p", "3", "--m", "1", "--omega", "0.9"});
  CHECK(a.code == 0);
  CHECK(a.out.find("\"inf_kp\": 1.0") != std::string::npos);
  CHECK(a.out.find("\"region\": \"ExistenceThm1\"") != std::string::npos);

  const auto b = run({"thresholds", "--p", "3.5", "--m", "1", "--omega", "0.99"});
  CHECK(b.code == 0);
  CHECK(b.out.find("\"alpha_star\": -0.045454545454545456") != std::string::npos);
  CHECK(b.out.find("\"passed\": true") != std::string::npos);

  CHECK(run({"thresholds", "--p", "2"}).code == 1);
  CHECK(run({"thresholds"}).code == 1);
}

TEST_CASE("solve exit codes") {
  const auto missing = run({"solve", "--omega", "0.5"});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("--p") != std::string::npos);

  const auto dir = scratch_dir("solve");
  const auto refused = run({"solve", "--p", "6", "--m", "1", "--omega", "0.5", "--out", dir.string()});
  CHECK(refused.code == 1);
  CHECK(refused.err.find("Nonexistence region (classifier)") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "report.json"));

  CHECK(run({"solve", "--p", "3", "--omega", "1.0"}).code == 1);
  CHECK(run({"solve", "--p", "3", "--n", "8"}).code == 1);
  CHECK(run({"solve", "--p", "3", "--method", "newton"}).code == 1);
  CHECK(run({"solve", "--p", "3", "--lambda", "2"}).code == 1);

  const auto ok = run({"solve", "--p", "3", "--n", "1000", "--rmax", "40", "--out", dir.string()});
  CHECK(ok.code == 0);
  CHECK(fs::exists(dir / "report.json"));
  CHECK(fs::exists(dir / "u.csv"));
  CHECK(fs::exists(dir / "phi.json"));
  const auto report = kgm::Json::parse(slurp(dir / "report.json"));
  CHECK(report["accepted"] == true);
  CHECK(report["report"]["converged"] == true);

  const auto capped = run({"solve", "--p", "3", "--n", "1000", "--rmax", "40", "--max-iters", "1",
                           "--out", dir.string()});
  CHECK(capped.code == 2);
}

TEST_CASE("zero-mass exit codes") {
  CHECK(run({"zero-mass", "--q", "5.5"}).code == 1);
  CHECK(run({"zero-mass", "--alpha", "3"}).code == 1);
  CHECK(run({"zero-mass", "--steps", "0"}).code == 1);
  const auto dir = scratch_dir("zero_mass");
  const auto single = run({"zero-mass", "--steps", "1", "--n", "1000", "--out", dir.string()});
  CHECK(single.code == 0);
  const auto rows = slurp(dir / "trace.csv");
  CHECK(std::count(rows.begin(), rows.end(), '\n') == 2);
  CHECK(fs::exists(dir / "u0.csv"));
  CHECK(fs::exists(dir / "phi0.csv"));
}

TEST_CASE("sweep command") {
  const auto a = scratch_dir("sweep_a");
  const auto b = scratch_dir("sweep_b");
  CHECK(run({"sweep", "--out", a.string()}).code == 0);
  CHECK(run({"sweep", "--out", b.string()}).code == 0);
  CHECK(slurp(a / "regions.csv") == slurp(b / "regions.csv"));
  CHECK(slurp(a / "curves.dat") == slurp(b / "curves.dat"));
  CHECK(run({"sweep", "--p", "2:3"}).code == 1);
  CHECK(run({"sweep", "--ratio", "0:1:0.1"}).code == 1);
}

TEST_CASE("selftest command") {
  const auto quick = run({"selftest", "--quick"});
  CHECK(quick.code == 0);
  CHECK(quick.out.find("[FAIL]") == std::string::npos);

  const auto sabotaged = run({"selftest", "--quick", "--sabotage", "ab-identity"});
  CHECK(sabotaged.code == 2);
  CHECK(sabotaged.out.find("[FAIL]") != std::string::npos);
  CHECK(sabotaged.err.find("A + B = C") != std::string::npos);

  CHECK(run({"selftest", "--sabotage", "nonsense"}).code == 1);
  CHECK(run({}).code == 1);
}
