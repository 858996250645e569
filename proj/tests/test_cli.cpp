#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "minhash/io.hpp"
#include "minhash/sparse.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string bin() {
  const char* b = std::getenv("MHASH_BIN");
  REQUIRE(b != nullptr);
  return b;
}

struct Sandbox {
  fs::path dir;
  Sandbox() {
    dir = fs::temp_directory_path() / ("mhash_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~Sandbox() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

int run(const std::string& args) {
  const int status = std::system((bin() + " " + args + " > /dev/null 2>&1").c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_toy(const std::string& path, bool binary) {
  std::ofstream out(path);
  if (binary)
    out << "1 2:1 4:1\n0 3:1 4:1\n1 1:1 3:1\n0 2:1 3:1\n1 1:1 2:1\n";
  else
    out << "1 2:0.7 4:0.9\n0 3:0.1 4:0.4\n1 1:0.1 3:0.2\n0 2:0.6 3:0.1\n"
           "1 1:0.8 2:0.5\n";
}

}  // namespace

TEST_CASE("hash reproduces the toy table and is byte-deterministic") {
  Sandbox sb;
  write_toy(sb.path("toy.svm"), true);
  const std::string cmd = "hash --input " + sb.path("toy.svm") +
                          " --variant bbit --L 1 --b 1 --inject-perm 2,3,1,4 "
                          "--out " + sb.path("t");
  REQUIRE(run(cmd) == 0);
  const auto S = minhash::read_dense(sb.path("t_S.mhdn"));
  Eigen::MatrixXd expect(5, 2);
  expect << 0, 1, 0, 1, 0, 1, 0, 1, 1, 0;
  CHECK((S - expect).cwiseAbs().maxCoeff() == 0.0);

  const std::string first = slurp(sb.path("t_S.mhdn"));
  REQUIRE(run(cmd) == 0);
  CHECK(first == slurp(sb.path("t_S.mhdn")));
}

TEST_CASE("usage and incompatibility exit codes") {
  Sandbox sb;
  write_toy(sb.path("toy.svm"), true);
  write_toy(sb.path("cont.svm"), false);
  CHECK(run("hash --input " + sb.path("toy.svm") + " --L 0 --out " +
            sb.path("x")) == 64);
  CHECK(run("hash --input " + sb.path("cont.svm") +
            " --variant bbit --L 2 --out " + sb.path("x")) == 2);
  CHECK(run("hash --input " + sb.path("missing.svm") + " --out " +
            sb.path("x")) == 65);
  CHECK(run("verify --target unbiasedness --R 10") == 64);
  CHECK(run("nonsense") == 64);
}

TEST_CASE("fit round trip") {
  Sandbox sb;
  write_toy(sb.path("toy.svm"), true);
  REQUIRE(run("hash --input " + sb.path("toy.svm") +
              " --variant random-sign --L 3 --seed 5 --out " + sb.path("h")) ==
          0);
  SUBCASE("ols json") {
    REQUIRE(run("fit --S " + sb.path("h_S.mhdn") + " --y " +
                sb.path("h_y.txt") + " --estimator ols --out " +
                sb.path("fit.json")) == 0);
    json fit;
    std::ifstream(sb.path("fit.json")) >> fit;
    CHECK(fit["estimator"] == "ols");
    CHECK(fit["b"].size() == 3);
  }
  SUBCASE("radius zero ridge returns zero coefficients") {
    REQUIRE(run("fit --S " + sb.path("h_S.mhdn") + " --y " +
                sb.path("h_y.txt") +
                " --estimator ridge --radius 0 --out " + sb.path("fit.json")) ==
            0);
    json fit;
    std::ifstream(sb.path("fit.json")) >> fit;
    for (const auto& v : fit["b"]) CHECK(v.get<double>() == 0.0);
  }
  SUBCASE("radius resolved from eta, beta-norm, q") {
    REQUIRE(run("fit --S " + sb.path("h_S.mhdn") + " --y " +
                sb.path("h_y.txt") +
                " --estimator ridge --eta 1 --beta-norm 2 --q 2 --p 4 --out " +
                sb.path("fit.json")) == 0);
    json fit;
    std::ifstream(sb.path("fit.json")) >> fit;
    const double expect = std::sqrt(2.0 * (2.0 - 0.5) * 2.0 * 4.0 / 3.0);
    CHECK(fit["radius"].get<double>() == doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("shape mismatch is a format error") {
    std::ofstream(sb.path("short.txt")) << "1\n0\n";
    CHECK(run("fit --S " + sb.path("h_S.mhdn") + " --y " +
              sb.path("short.txt")) == 65);
  }
}

TEST_CASE("simulate produces a deterministic CSV") {
  Sandbox sb;
  std::ofstream(sb.path("scen.txt"))
      << "p 40\nn 60\nq 4\nsigma 0.5\nrho 0\ninteraction_strength 0\n"
      << "design binary\ncoefficients brownian\nseed 11\n";
  const std::string cmd = "simulate --scenario " + sb.path("scen.txt") +
                          " --methods rs-ols --L-grid 8 --reps 1 --out " +
                          sb.path("out.csv");
  REQUIRE(run(cmd) == 0);
  const std::string first = slurp(sb.path("out.csv"));
  REQUIRE(run(cmd) == 0);
  CHECK(first == slurp(sb.path("out.csv")));
  // single method: the relative column is 1
  std::istringstream csv(first);
  std::string line;
  std::getline(csv, line);  // header
  REQUIRE(std::getline(csv, line));
  CHECK(line.substr(line.rfind(',') + 1) == "1");
}

TEST_CASE("verify runs and reports") {
  Sandbox sb;
  // p = q: unbiasedness is exact, must pass with exit 0
  REQUIRE(run("verify --target unbiasedness --oracle rs --n 10 --p 5 --q 5 "
              "--L 8 --R 2000 --seed 3 --out " + sb.path("rep.jsonl")) == 0);
  json rec;
  std::ifstream(sb.path("rep.jsonl")) >> rec;
  CHECK(rec["pass"] == true);
  CHECK(rec["target"] == "unbiasedness/random-sign");

  REQUIRE(run("verify --target approx-error --oracle rs --n 10 --p 12 --q 3 "
              "--L 16 --R 2000 --seed 4 --out " + sb.path("rep2.jsonl")) == 0);
  json rec2;
  std::ifstream(sb.path("rep2.jsonl")) >> rec2;
  CHECK(rec2["pass"] == true);
  CHECK(rec2["estimate"].get<double>() <= rec2["bound"].get<double>() +
                                              3 * rec2["se"].get<double>());
}

TEST_CASE("noiseless linear scenario is recovered almost exactly") {
  Sandbox sb;
  std::ofstream(sb.path("scen.txt"))
      << "p 50\nn 100\nq 5\nsigma 0\nrho 0\ninteraction_strength 0\n"
      << "design binary\ncoefficients exponential\nseed 21\n";
  REQUIRE(run("simulate --scenario " + sb.path("scen.txt") +
              " --methods rs-ols --L-grid 256 --reps 3 --out " +
              sb.path("out.csv")) == 0);
  std::istringstream csv(slurp(sb.path("out.csv")));
  std::string line;
  std::getline(csv, line);
  REQUIRE(std::getline(csv, line));
  // mean_mspe is the fourth column
  std::stringstream ss(line);
  std::string cell;
  for (int i = 0; i < 4; ++i) std::getline(ss, cell, ',');
  CHECK(std::stod(cell) < 0.05);
}

TEST_CASE("replay reruns bit-identically") {
  Sandbox sb;
  write_toy(sb.path("toy.svm"), true);
  REQUIRE(run("hash --input " + sb.path("toy.svm") +
              " --variant bbit-shuffled --L 4 --b 2 --seed 9 --out " +
              sb.path("h")) == 0);
  const std::string first = slurp(sb.path("h_S.mhdn"));
  REQUIRE(run("replay " + sb.path("h_manifest.json")) == 0);
  CHECK(first == slurp(sb.path("h_S.mhdn")));
}

TEST_CASE("MINHASH_SEED supplies the default seed") {
  Sandbox sb;
  write_toy(sb.path("toy.svm"), true);
  const std::string base = "hash --input " + sb.path("toy.svm") +
                           " --variant random-sign --L 4 --out ";
  const int env_status = std::system(
      ("MINHASH_SEED=42 " + bin() + " " + base + sb.path("env") +
       " > /dev/null 2>&1")
          .c_str());
  REQUIRE(WEXITSTATUS(env_status) == 0);
  REQUIRE(run(base + sb.path("flag") + " --seed 42") == 0);
  CHECK(slurp(sb.path("env_S.mhdn")) == slurp(sb.path("flag_S.mhdn")));
  REQUIRE(run(base + sb.path("other") + " --seed 43") == 0);
  CHECK(slurp(sb.path("env_S.mhdn")) != slurp(sb.path("other_S.mhdn")));
}

TEST_CASE("mhsm containers are accepted as hash input") {
  Sandbox sb;
  write_toy(sb.path("toy.svm"), true);
  const auto data = minhash::read_svmlight(sb.path("toy.svm"));
  minhash::write_sparse(sb.path("toy.mhsm"), data.X);
  REQUIRE(run("hash --input " + sb.path("toy.mhsm") +
              " --variant bbit-shuffled --L 2 --seed 1 --out " +
              sb.path("c")) == 0);
  const auto S = minhash::read_dense(sb.path("c_S.mhdn"));
  CHECK(S.rows() == 5);
  CHECK(S.cols() == 4);
}

TEST_CASE("report emits the closed-form bundle") {
  Sandbox sb;
  REQUIRE(run("report --n 10000 --p 10000 --q 100 --sigma 1 --beta-norm 1 "
              "--out " + sb.path("rep.json")) == 0);
  json rep;
  std::ifstream(sb.path("rep.json")) >> rep;
  CHECK(rep["L_star"].get<double>() == doctest::Approx(1410.67).epsilon(1e-4));
  CHECK(rep["optimal_b"].get<int>() == 8);  // sparsity 0.01
}
