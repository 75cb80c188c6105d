// End-to-end checks of the command-line front end: exit codes, determinism,
// schemas. Drives the installed binary through std::system; the binary path
// arrives via the VOLDENS_CLI environment variable set by CTest.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "voldens/io.hpp"

namespace {

namespace fs = std::filesystem;

struct CliFixture {
  fs::path dir;
  std::string cli;
  CliFixture() {
    const char* env = std::getenv("VOLDENS_CLI");
    REQUIRE_MESSAGE(env != nullptr, "VOLDENS_CLI must point at the voldens binary");
    cli = env;
    dir = fs::temp_directory_path() / ("voldens_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~CliFixture() { fs::remove_all(dir); }

  int run(const std::string& args, std::string* out = nullptr) const {
    const auto stdout_path = dir / "stdout.txt";
    const std::string cmd = cli + " " + args + " > " + stdout_path.string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    if (out) {
      std::ifstream in(stdout_path);
      std::stringstream ss;
      ss << in.rdbuf();
      *out = ss.str();
    }
    REQUIRE(WIFEXITED(rc));
    return WEXITSTATUS(rc);
  }

  std::string slurp(const fs::path& p) const {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
};

}  // namespace

TEST_CASE("cli: usage errors exit 1") {
  CliFixture f;
  CHECK(f.run("") == 1);
  CHECK(f.run("simulate --n 100 --out " + (f.dir / "a.csv").string()) == 1);  // no --model
  CHECK(f.run("frobnicate") == 1);
  // stationarity violation: alpha_1 + alpha_2 + beta_1 = 1.05 >= 1
  // (alpha_0 is the constant term and does not enter the condition)
  CHECK(f.run("simulate --model garch --alpha 0.1,0.1,0.2 --beta 0.85 --n 10 --out " +
              (f.dir / "g.csv").string()) == 1);
  CHECK(f.run("estimate --input nope.csv --out x.csv --scale sigma --p 2") == 1);
  CHECK(f.run("--help") == 0);
}

TEST_CASE("cli: data errors exit 2") {
  CliFixture f;
  CHECK(f.run("estimate --input " + (f.dir / "missing.csv").string() + " --out " +
              (f.dir / "o.csv").string()) == 2);
  const auto bad = f.dir / "bad.csv";
  {
    std::ofstream out(bad);
    out << "t,x,sigma_sq\n0,not_a_number,1\n";
  }
  CHECK(f.run("estimate --input " + bad.string() + " --out " + (f.dir / "o.csv").string()) == 2);
  const auto nox = f.dir / "nox.csv";
  {
    std::ofstream out(nox);
    out << "t,y\n0,1\n";
  }
  CHECK(f.run("estimate --input " + nox.string() + " --out " + (f.dir / "o.csv").string()) == 2);
  CHECK(f.run("experiment --config " + (f.dir / "missing.cfg").string()) == 2);
}

TEST_CASE("cli: simulate determinism and row count") {
  CliFixture f;
  const auto a = f.dir / "a.csv";
  const auto b = f.dir / "b.csv";
  const std::string flags = "simulate --model log-ar1 --a 0.6 --tau 0.8 --mu 0 --n 1000 --seed 7 --out ";
  CHECK(f.run(flags + a.string()) == 0);
  CHECK(f.run(flags + b.string()) == 0);
  const std::string ca = f.slurp(a);
  CHECK(ca == f.slurp(b));
  // header plus 1000 data rows
  CHECK(std::count(ca.begin(), ca.end(), '\n') == 1001);
  CHECK(ca.rfind("t,x,sigma_sq\n", 0) == 0);
}

TEST_CASE("cli: simulate -> estimate round trip under budget, h printed, mass sane") {
  CliFixture f;
  const auto sim = f.dir / "sim.csv";
  const auto est = f.dir / "est.csv";
  const auto t0 = std::chrono::steady_clock::now();
  CHECK(f.run("simulate --model log-ar1 --a 0.6 --tau 0.8 --mu 0 --n 5000 --seed 3 --out " +
              sim.string()) == 0);
  std::string out;
  CHECK(f.run("estimate --input " + sim.string() + " --out " + est.string() +
              " --h-rule pi-log-n --grid-count 400", &out) == 0);
  const auto t1 = std::chrono::steady_clock::now();
  CHECK(std::chrono::duration<double>(t1 - t0).count() < 10.0);
  CHECK(out.find("h = 0.3688") != std::string::npos);  // pi / log 5000
  CHECK(out.find("dropped = 0") != std::string::npos);

  const auto csv = voldens::io::read_csv(est.string());
  CHECK(csv.columns == std::vector<std::string>{"x", "fhat"});
  CHECK(csv.rows.size() == 400);
}

TEST_CASE("cli: sigma-scale output integrates close to one") {
  CliFixture f;
  const auto sim = f.dir / "sim.csv";
  const auto est = f.dir / "est.csv";
  CHECK(f.run("simulate --model log-ar1 --a 0.6 --tau 0.8 --mu 0 --n 2000 --seed 5 --out " +
              sim.string()) == 0);
  CHECK(f.run("estimate --input " + sim.string() + " --out " + est.string() +
              " --grid-min -10 --grid-max 5 --grid-count 301 --scale sigma") == 0);
  const auto csv = voldens::io::read_csv(est.string());
  REQUIRE(csv.rows.size() == 301);
  double mass = 0.0;
  for (std::size_t i = 0; i + 1 < csv.rows.size(); ++i) {
    const double ds = csv.rows[i + 1][0] - csv.rows[i][0];
    mass += 0.5 * ds * (csv.rows[i][1] + csv.rows[i + 1][1]);
  }
  CHECK(std::abs(mass - 1.0) <= 0.05);
}

TEST_CASE("cli: bivariate estimate schema") {
  CliFixture f;
  const auto sim = f.dir / "sim.csv";
  const auto est = f.dir / "est2.csv";
  CHECK(f.run("simulate --model garch --alpha 0.1,0.1 --beta 0.8 --n 500 --seed 11 --out " +
              sim.string()) == 0);
  CHECK(f.run("estimate --input " + sim.string() + " --out " + est.string() +
              " --p 2 --h 0.5 --grid-min -6 --grid-max 3 --grid-count 31") == 0);
  const auto csv = voldens::io::read_csv(est.string());
  CHECK(csv.columns == std::vector<std::string>{"x", "y", "fhat"});
  CHECK(csv.rows.size() == 31 * 31);
}

TEST_CASE("cli: experiment produces the pinned schema") {
  CliFixture f;
  const auto cfg = f.dir / "mise.cfg";
  {
    std::ofstream out(cfg);
    out << "model = log-ar1\na = 0.6\ntau = 0.8\nmu = 0\nseed = 9\nburn_in = 200\n"
        << "sample_sizes = 80\nreplications = 3\nbandwidth = 0.5\n"
        << "grid_min = -5\ngrid_max = 5\ngrid_count = 81\np = 1\n"
        << "output = " << (f.dir / "mise").string() << "\n";
  }
  CHECK(f.run("experiment --config " + cfg.string()) == 0);
  const auto rows = voldens::io::read_csv((f.dir / "mise.csv").string());
  CHECK(rows.columns == std::vector<std::string>{"n", "replication", "h", "mise", "bias_sq",
                                                 "variance", "runtime_ms"});
  CHECK(rows.rows.size() == 3);
  const std::string summary = f.slurp(f.dir / "mise_summary.txt");
  CHECK(summary.rfind("# generated", 0) == 0);
  CHECK(summary.find("\"config\"") != std::string::npos);
  // config parse errors carry line numbers
  const auto broken = f.dir / "broken.cfg";
  {
    std::ofstream out(broken);
    out << "model = log-ar1\nnot a key value pair\n";
  }
  std::string err;
  CHECK(f.run("experiment --config " + broken.string(), &err) == 2);
  CHECK(err.find(":2") != std::string::npos);
}
