// End-to-end tests of the command-line tool: output formats (field CSV,
// spectrum/RPS JSON), the exit-code contract, cross-method agreement through
// the `diff` subcommand, and determinism.

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <catch2/catch_amalgamated.hpp>
#include <json.hpp>

using nlohmann::json;

namespace {

struct RunResult {
  int code;
  std::string out;
};

RunResult run(const std::string& args, const std::string& env = "") {
  std::string cmd = env + " " + CLI_PATH + " " + args + " 2>/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::string out;
  std::array<char, 4096> buf;
  size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) out.append(buf.data(), n);
  int status = pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string tmpfile_path(const std::string& stem) {
  return std::string("/tmp/ising_cli_test_") + stem;
}

const std::string kRect43 = "'{\"type\":\"rectangle\",\"width\":4,\"height\":3}'";

}  // namespace

TEST_CASE("field CSV format: header, coordinates, round-trip precision") {
  auto r = run("observable --domain " + kRect43 +
               " --kind up --source 3,0 --method contour --beta crit");
  REQUIRE(r.code == 0);
  std::istringstream ss(r.out);
  std::string line;
  REQUIRE(std::getline(ss, line));
  CHECK(line == "x2,y2,re,im");
  int rows = 0;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    int x, y;
    double re, im;
    REQUIRE(std::sscanf(line.c_str(), "%d,%d,%lf,%lf", &x, &y, &re, &im) == 4);
    // Edge coordinates: exactly one of (x, y) is odd, and never the source.
    CHECK((x + y) % 2 == 1);
    CHECK(!(x == 3 && y == 0));
    // 17 significant digits must round-trip: re-printing reproduces the token.
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", re);
    double re2 = std::strtod(buf, nullptr);
    CHECK(re2 == re);
    ++rows;
  }
  // 4x3 box: 9 horizontal + 8 vertical edges, minus the source edge.
  CHECK(rows == 16);
}

TEST_CASE("spectrum JSON: fields, descending eigenvalues, reciprocal pairing") {
  auto r = run("propagator --width 5 --beta 0.6");
  REQUIRE(r.code == 0);
  json j = json::parse(r.out);
  CHECK(j.at("n") == 4);
  CHECK(j.at("beta").get<double>() == Catch::Approx(0.6).margin(1e-15));
  CHECK(j.at("pairing_ok") == true);
  auto lam = j.at("lambdas").get<std::vector<double>>();
  REQUIRE(lam.size() == 8);
  for (size_t i = 1; i < lam.size(); ++i) CHECK(lam[i] < lam[i - 1]);
  for (size_t i = 0; i < 4; ++i)
    CHECK(lam[i] * lam[7 - i] == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("RPS JSON: run edges, matrix shape, antisymmetry, methods agree") {
  std::string dom = "'{\"type\":\"rectangle\",\"width\":5,\"height\":4}'";
  json jd, jk, jb;
  for (auto [method, out] : {std::pair<const char*, json*>{"direct", &jd},
                             {"kernel", &jk},
                             {"blocks", &jb}}) {
    auto r = run(std::string("rps --domain ") + dom + " --row 0 --method " +
                 method + " --beta crit");
    REQUIRE(r.code == 0);
    *out = json::parse(r.out);
    CHECK((*out).at("method") == method);
  }
  auto b = jd.at("b").get<std::vector<std::string>>();
  REQUIRE(b.size() == 4);
  CHECK(b[0] == "1,0");
  CHECK(b[3] == "7,0");
  auto md = jd.at("matrix").get<std::vector<std::vector<double>>>();
  REQUIRE(md.size() == 4);
  for (const auto& row : md) REQUIRE(row.size() == 4);
  double worst = 0;
  for (size_t i = 0; i < 4; ++i)
    for (size_t c = 0; c < 4; ++c) {
      worst = std::max(worst, std::abs(md[i][c] + md[c][i]));
      worst = std::max(
          worst, std::abs(md[i][c] - jk.at("matrix")[i][c].get<double>()));
      worst = std::max(
          worst, std::abs(md[i][c] - jb.at("matrix")[i][c].get<double>()));
    }
  CHECK(worst < 1e-9);
  CHECK(jd.at("cond").get<double>() > 1.0);
}

TEST_CASE("exit-code contract") {
  SECTION("usage errors give 2") {
    CHECK(run("propagator --width 1 --critical").code == 2);
    CHECK(run("propagator --width 4").code == 2);  // missing beta
    CHECK(run("observable --domain " + kRect43 +
              " --kind sideways --source 3,0 --beta crit")
              .code == 2);
    CHECK(run("observable --domain '{\"type\":\"faces\",\"faces\":[[1,1],[3,1]]}'"
              " --kind up --source 3,0 --method transfer --beta crit")
              .code == 2);
    CHECK(run("verify --suite no-such-suite").code == 2);
    CHECK(run("rps --domain " + kRect43 + " --row 1 --method blocks --beta crit")
              .code == 2);
    CHECK(run("no-such-command").code == 2);
  }
  SECTION("verification failure gives 1") {
    CHECK(run("verify --suite propagator --tol 1e-16 --report /dev/null").code == 1);
  }
  SECTION("success gives 0") {
    CHECK(run("verify --suite propagator --max-width 4").code == 0);
    CHECK(run("--help").code == 0);
  }
}

TEST_CASE("diff: the three observable methods agree below 1e-9") {
  std::string fa = tmpfile_path("contour.csv");
  std::string fb = tmpfile_path("rbvp.csv");
  std::string fc = tmpfile_path("transfer.csv");
  std::string common = "observable --domain " + kRect43 +
                       " --kind up --source 1,0 --beta 0.5 ";
  REQUIRE(run(common + "--method contour --out " + fa).code == 0);
  REQUIRE(run(common + "--method rbvp --out " + fb).code == 0);
  REQUIRE(run(common + "--method transfer --out " + fc).code == 0);
  CHECK(run("diff " + fa + " " + fb + " --tol 1e-9").code == 0);
  CHECK(run("diff " + fa + " " + fc + " --tol 1e-9").code == 0);
  // An impossible tolerance on distinct files must fail with exit 1.
  CHECK(run("diff " + fa + " " + fc + " --tol 1e-30").code == 1);
}

TEST_CASE("multipoint observable output is a single re,im scalar") {
  std::string dom = "'{\"type\":\"rectangle\",\"width\":5,\"height\":4}'";
  auto r = run("observable --domain " + dom +
               " --kind multi --sources '1,2:up;5,2:down' --beta 0.55");
  REQUIRE(r.code == 0);
  double re, im;
  REQUIRE(std::sscanf(r.out.c_str(), "%lf,%lf", &re, &im) == 2);
  CHECK(std::abs(re) < 1e-12);  // purely imaginary two-point value
  CHECK(im != 0.0);
}

TEST_CASE("verify report JSON structure") {
  std::string rep = tmpfile_path("report.json");
  auto r = run("verify --suite rps --max-width 4 --betas crit,0.7 --report " + rep);
  REQUIRE(r.code == 0);
  std::ifstream in(rep);
  REQUIRE(in.good());
  json j;
  in >> j;
  CHECK(j.at("pass") == true);
  CHECK(j.at("suite") == "rps");
  CHECK(j.at("betas").size() == 2);
  REQUIRE(j.at("checks").size() == 1);
  const auto& c = j.at("checks")[0];
  CHECK(c.at("name") == "rps");
  CHECK(c.at("pass") == true);
  CHECK(c.at("max_abs_err").get<double>() < c.at("tol").get<double>());
  CHECK(c.at("seconds").get<double>() >= 0.0);
}

TEST_CASE("determinism: identical output across runs and thread counts") {
  std::string cmd = "observable --domain " + kRect43 +
                    " --kind up --source 3,0 --method contour --beta 0.7";
  auto r1 = run(cmd, "ISING_THREADS=1");
  auto r4 = run(cmd, "ISING_THREADS=4");
  auto r4b = run(cmd, "ISING_THREADS=4");
  REQUIRE(r1.code == 0);
  CHECK(r1.out == r4.out);
  CHECK(r4.out == r4b.out);
  auto v1 = run("verify --suite correlations --report -", "ISING_THREADS=1");
  auto v4 = run("verify --suite correlations --report -", "ISING_THREADS=4");
  REQUIRE(v1.code == 0);
  // Timing fields differ; compare the numeric results only.
  json j1 = json::parse(v1.out), j4 = json::parse(v4.out);
  CHECK(j1.at("checks")[0].at("max_abs_err") == j4.at("checks")[0].at("max_abs_err"));
}
