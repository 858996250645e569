#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "minhash/simulate.hpp"

using namespace minhash;

namespace {

ScenarioConfig base_config() {
  ScenarioConfig cfg;
  cfg.n = 300;
  cfg.p = 80;
  cfg.q = 8;
  cfg.sigma = 0.5;
  cfg.seed = 42;
  return cfg;
}

bool same_matrix(const SparseMatrix& a, const SparseMatrix& b) {
  return a.n_rows == b.n_rows && a.n_cols == b.n_cols &&
         a.row_offsets == b.row_offsets && a.col_indices == b.col_indices &&
         a.values == b.values;
}

}  // namespace

TEST_CASE("design generation") {
  SUBCASE("iid binary density within 4 SE of q/p") {
    auto cfg = base_config();
    const auto X = gen_design(cfg);
    CHECK(X.is_binary());
    const double cells = static_cast<double>(cfg.n * cfg.p);
    const double prob = static_cast<double>(cfg.q) / cfg.p;
    const double freq = static_cast<double>(X.nnz()) / cells;
    const double se = std::sqrt(prob * (1 - prob) / cells);
    CHECK(std::abs(freq - prob) <= 4.0 * se);
  }
  SUBCASE("regeneration is bit-identical") {
    auto cfg = base_config();
    cfg.rho = 0.4;
    CHECK(same_matrix(gen_design(cfg), gen_design(cfg)));
  }
  SUBCASE("q = p with rho 0 gives the all-ones matrix") {
    ScenarioConfig cfg;
    cfg.n = 8;
    cfg.p = 5;
    cfg.q = 5;
    cfg.seed = 1;
    const auto X = gen_design(cfg);
    CHECK(X.nnz() == 40);
    CHECK(X.is_binary());
  }
  SUBCASE("correlation pass copies the left neighbour, cascading") {
    auto cfg = base_config();
    cfg.n = 150;
    cfg.design = DesignDist::gaussian;
    cfg.rho = 0.5;
    const auto Xc = gen_design(cfg);
    cfg.rho = 0.0;
    const auto X0 = gen_design(cfg);  // same design stream: the stage-1 draws
    std::int64_t copied = 0, eligible = 0;
    for (std::int64_t i = 0; i < cfg.n; ++i) {
      for (std::int64_t k = 0; k < cfg.p; ++k) {
        const double got = Xc.at(i, k);
        if (k == 0) {
          CHECK(got == X0.at(i, 0));
          continue;
        }
        const double left = Xc.at(i, k - 1);
        const double fresh = X0.at(i, k);
        CHECK((got == left || got == fresh));
        ++eligible;
        if (got == left && left != fresh) ++copied;
      }
    }
    // distinguishable copies fire at rate rho * P(left != fresh) which is
    // roughly 0.5 * 0.26 at this density; require a loose band around it
    const double rate = static_cast<double>(copied) / eligible;
    CHECK(rate > 0.07);
    CHECK(rate < 0.25);
  }
  SUBCASE("gaussian draws are raw; clip rescales the whole matrix") {
    auto cfg = base_config();
    cfg.design = DesignDist::gaussian;
    const auto raw = gen_design(cfg);
    CHECK(raw.max_abs() > 1.0);
    cfg.clip = true;
    const auto clipped = gen_design(cfg);
    CHECK(clipped.max_abs() <= 1.0);
    CHECK(clipped.nnz() == raw.nnz());
  }
}

TEST_CASE("coefficient generation") {
  auto cfg = base_config();
  const auto X = gen_design(cfg);
  SUBCASE("signal normalized to unit mean square") {
    for (auto kind : {CoefKind::exponential, CoefKind::brownian}) {
      cfg.coef = kind;
      const auto beta = gen_coefficients(cfg, X);
      CHECK(std::abs(X.multiply(beta).squaredNorm() / cfg.n - 1.0) < 1e-10);
    }
  }
  SUBCASE("exponential coefficients keep one sign") {
    cfg.coef = CoefKind::exponential;
    const auto beta = gen_coefficients(cfg, X);
    CHECK(beta.minCoeff() >= 0.0);
  }
  SUBCASE("brownian coefficients have iid standard normal increments") {
    cfg.coef = CoefKind::brownian;
    cfg.p = 3000;
    cfg.q = 30;
    cfg.n = 50;
    const auto Xl = gen_design(cfg);
    const auto beta = gen_coefficients(cfg, Xl);
    // undo the common scale via the first increment statistics
    Eigen::VectorXd inc(cfg.p - 1);
    for (std::int64_t k = 1; k < cfg.p; ++k) inc[k - 1] = beta[k] - beta[k - 1];
    const double scale = std::sqrt(inc.squaredNorm() / (cfg.p - 1));
    const double mean = inc.mean() / scale;
    const double se = 1.0 / std::sqrt(static_cast<double>(cfg.p - 1));
    CHECK(std::abs(mean) <= 4.0 * se);
  }
}

TEST_CASE("interaction signal") {
  auto cfg = base_config();
  const auto X = gen_design(cfg);
  SUBCASE("normalized to unit mean square") {
    const auto sig = gen_interaction(cfg, X);
    CHECK(std::abs(sig.g.squaredNorm() / cfg.n - 1.0) < 1e-10);
    CHECK(sig.block == (cfg.p + cfg.q - 1) / cfg.q);
  }
  SUBCASE("all-ones design gives a constant signal") {
    ScenarioConfig c2;
    c2.n = 6;
    c2.p = 12;
    c2.q = 12;
    c2.seed = 3;
    const auto ones = gen_design(c2);
    // block size 1 here; any block pair gives g' constant = 1
    const auto sig = gen_interaction(c2, ones);
    for (int i = 0; i < 6; ++i)
      CHECK(sig.g[i] == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("q = p uses single-column blocks") {
    ScenarioConfig c2;
    c2.n = 40;
    c2.p = 10;
    c2.q = 10;
    c2.seed = 9;
    c2.design = DesignDist::gaussian;
    const auto Xg = gen_design(c2);
    const auto sig = gen_interaction(c2, Xg);
    CHECK(sig.block == 1);
    for (std::int64_t i = 0; i < c2.n; ++i) {
      const double expect =
          sig.scale * Xg.at(i, sig.start1) * Xg.at(i, sig.start2);
      CHECK(sig.g[i] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("response generation") {
  Eigen::VectorXd f(10000);
  for (int i = 0; i < 10000; ++i) f[i] = std::sin(0.01 * i);
  SUBCASE("zero noise returns the signal") {
    const auto y = gen_response(f, 0.0, 1);
    CHECK((y - f).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("noise variance within 4 SE") {
    const double sigma = 0.7;
    const auto y = gen_response(f, sigma, 2);
    const Eigen::VectorXd eps = y - f;
    const double var = eps.squaredNorm() / eps.size();
    // var of the sample variance of N(0, s^2) is 2 s^4 / n
    const double se = std::sqrt(2.0 * std::pow(sigma, 4) / eps.size());
    CHECK(std::abs(var - sigma * sigma) <= 4.0 * se);
  }
  SUBCASE("logistic labels are balanced at zero signal") {
    const auto y = gen_response_logistic(Eigen::VectorXd::Zero(10000), 3);
    const double mean = y.mean();
    const double se = 0.5 / std::sqrt(10000.0);
    CHECK(std::abs(mean - 0.5) <= 4.0 * se);
    for (int i = 0; i < 10000; ++i) CHECK((y[i] == 0.0 || y[i] == 1.0));
  }
}

TEST_CASE("scenario files") {
  const auto path =
      (std::filesystem::temp_directory_path() / "mh_scenario.txt").string();
  {
    std::ofstream out(path);
    out << "# toy scenario\n"
        << "p 200\nn 100\nsigma 0.3\ninteraction_strength 2\nrho 0.9\n"
        << "q 20\ndesign gaussian\ncoefficients brownian\nseed 7\n";
  }
  const auto cfg = ScenarioConfig::from_file(path);
  CHECK(cfg.p == 200);
  CHECK(cfg.n == 100);
  CHECK(cfg.sigma == 0.3);
  CHECK(cfg.kappa_int == 2.0);
  CHECK(cfg.rho == 0.9);
  CHECK(cfg.q == 20);
  CHECK(cfg.design == DesignDist::gaussian);
  CHECK(cfg.coef == CoefKind::brownian);
  CHECK(cfg.seed == 7);
  {
    std::ofstream out(path);
    out << "p 10\nn 5\nq 2\nwhat 3\n";
  }
  CHECK_THROWS_AS(ScenarioConfig::from_file(path), format_error);
  std::remove(path.c_str());
}
