#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const char* kToySpec = R"JSON({
  "subsystems": [
    {
      "id": 1,
      "state_domain": {"lower": [0], "upper": [1]},
      "modes": [{"A": [0.5]}, {"A": [0.5], "b": [0.6]}],
      "safe": {"lower": [0], "upper": [1]}
    }
  ]
})JSON";

/* two-node network whose gain cycle sits above the identity: kappa = 0.9
 * and a strong coupling make gamma_12 * gamma_21 > 1 */
const char* kBadGainSpec = R"JSON({
  "subsystems": [
    {
      "id": 1,
      "state_domain": {"lower": [0], "upper": [1]},
      "internal_domain": {"lower": [0], "upper": [1]},
      "internal_blocks": [{"source": 2, "dim": 1}],
      "modes": [{"A": [0.9], "D": [0.9]}],
      "outputs": [{"target": 1, "C": [1]}, {"target": 2, "C": [1]}]
    },
    {
      "id": 2,
      "state_domain": {"lower": [0], "upper": [1]},
      "internal_domain": {"lower": [0], "upper": [1]},
      "internal_blocks": [{"source": 1, "dim": 1}],
      "modes": [{"A": [0.9], "D": [0.9]}],
      "outputs": [{"target": 2, "C": [1]}, {"target": 1, "C": [1]}]
    }
  ],
  "edges": [[1, 2], [2, 1]]
})JSON";

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("symco_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int run(const std::string& args) {
  const std::string cmd = std::string(SYMCO_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string write_spec(const TempDir& dir, const char* text, const char* name) {
  const fs::path p = dir.path / name;
  std::ofstream os(p);
  os << text;
  return p.string();
}

}  // namespace

TEST_CASE("missing spec file is a configuration error") {
  TempDir dir;
  CHECK(run("certify --spec /nonexistent/net.json") == 2);
  CHECK(run("abstract --spec /nonexistent/net.json --out " + (dir.path / "o").string()) == 2);
}

TEST_CASE("eta above the span is a build error") {
  TempDir dir;
  const std::string spec = write_spec(dir, kToySpec, "toy.json");
  CHECK(run("abstract --spec " + spec + " --eta 2.0 --out " +
            (dir.path / "out").string()) == 3);
}

TEST_CASE("abstract dumps the toy system") {
  TempDir dir;
  const std::string spec = write_spec(dir, kToySpec, "toy.json");
  const std::string out = (dir.path / "out").string();
  CHECK(run("abstract --spec " + spec + " --eta 0.5 --out " + out) == 0);
  CHECK(fs::exists(fs::path(out) / "subsystem_1.fts"));
}

TEST_CASE("certify and compose pass on the toy system") {
  TempDir dir;
  const std::string spec = write_spec(dir, kToySpec, "toy.json");
  CHECK(run("certify --spec " + spec + " --samples 500") == 0);
  CHECK(run("compose --spec " + spec + " --eta 0.5 --theta 0.6 0.2 0.2") == 0);
}

TEST_CASE("small-gain failure exits with the gate code") {
  TempDir dir;
  const std::string spec = write_spec(dir, kBadGainSpec, "bad.json");
  CHECK(run("compose --spec " + spec + " --eta 0.1 --theta 0.92 0.04 0.04") == 4);
}

TEST_CASE("synthesize then simulate, including the zero-step run") {
  TempDir dir;
  const std::string spec = write_spec(dir, kToySpec, "toy.json");
  const std::string out = (dir.path / "ctl").string();
  CHECK(run("synthesize --spec " + spec + " --eta 0.25 --out " + out) == 0);
  CHECK(fs::exists(fs::path(out) / "subsystem_1.ctl"));

  const std::string sim_out = (dir.path / "sim").string();
  CHECK(run("simulate --spec " + spec + " --controllers " + out + " --steps 0 --out " +
            sim_out) == 0);
  std::ifstream csv(fs::path(sim_out) / "trajectory.csv");
  REQUIRE(csv.good());
  std::string header, rest;
  std::getline(csv, header);
  CHECK(header == "step,subsystem,x0,mode");
  CHECK_FALSE(std::getline(csv, rest)); /* empty beyond the header */

  CHECK(run("simulate --spec " + spec + " --controllers " + out +
            " --steps 50 --seed 3 --out " + sim_out) == 0);
}

TEST_CASE("traffic pipeline through the command line") {
  TempDir dir;
  const std::string out = (dir.path / "traffic").string();
  CHECK(run("traffic --scale-links 2 --eta 0.5 --steps 60 --samples 300 --seed 9 --out " +
            out) == 0);
  CHECK(fs::exists(fs::path(out) / "traffic_report.txt"));
  CHECK(fs::exists(fs::path(out) / "trajectory.csv"));
  std::ifstream report(fs::path(out) / "traffic_report.txt");
  std::stringstream buf;
  buf << report.rdbuf();
  CHECK(buf.str().find("kappa = 0.65") != std::string::npos);
  CHECK(buf.str().find("verdict: PASS") != std::string::npos);
}
