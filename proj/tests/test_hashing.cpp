#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "minhash/hashing.hpp"
#include "minhash/oracle.hpp"
#include "minhash/regress.hpp"
#include "minhash/rng.hpp"
#include "test_util.hpp"

using namespace minhash;

namespace {

HashConfig make_config(HashVariant variant, std::int64_t L, int b,
                       std::uint64_t seed,
                       PermutationMode mode = PermutationMode::fisher_yates) {
  HashConfig c;
  c.variant = variant;
  c.L = L;
  c.b = b;
  c.seed = seed;
  c.mode = mode;
  return c;
}

SparseMatrix random_binary(std::int64_t n, std::int64_t p, double density,
                           std::uint64_t seed, bool no_empty = true) {
  Rng rng(seed);
  SparseBuilder b;
  for (std::int64_t i = 0; i < n; ++i) {
    std::vector<std::int32_t> cols;
    for (std::int32_t k = 0; k < p; ++k)
      if (rng.next_double() < density) cols.push_back(k);
    if (no_empty && cols.empty())
      cols.push_back(static_cast<std::int32_t>(rng.next_below(p)));
    b.add_row(cols, std::vector<double>(cols.size(), 1.0));
  }
  return b.build(p);
}

}  // namespace

TEST_CASE("toy table, plain 1-bit") {
  const auto X = testutil::table1_matrix();
  const auto e = HashEnsemble::inject(
      make_config(HashVariant::bbit_plain, 1, 1, 0), 4, {testutil::toy_perm()});
  const auto out = min_hash(X, e);

  const int H_expect[5] = {2, 3, 3, 3, 1};  // 1-based
  const int M_expect[5] = {3, 1, 1, 1, 2};
  for (int i = 0; i < 5; ++i) {
    CHECK(out.H(i, 0) + 1 == H_expect[i]);
    CHECK(out.M(i, 0) == M_expect[i]);
  }

  const Eigen::MatrixXd S = expand_bbit(out, e);
  Eigen::MatrixXd expect(5, 2);
  expect << 0, 1, 0, 1, 0, 1, 0, 1, 1, 0;
  CHECK((S - expect).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("toy table, random signs") {
  const auto X = testutil::table2_matrix();
  const auto e = HashEnsemble::inject(
      make_config(HashVariant::random_sign, 1, 1, 0), 4,
      {testutil::toy_perm()}, {testutil::toy_signs()});
  const auto out = min_hash(X, e);
  const Eigen::MatrixXd S = random_sign_matrix(X, out, e);
  const double expect[5] = {-7, -1, -2, -1, 8};
  for (int i = 0; i < 5; ++i) CHECK(S(i, 0) == expect[i]);
}

TEST_CASE("single non-zero rows always hash to that column") {
  SparseBuilder b;
  for (std::int32_t i = 0; i < 6; ++i) b.add_row({i}, {1.0});
  const auto X = b.build(6);
  const auto e =
      HashEnsemble::build(make_config(HashVariant::random_sign, 8, 1, 42), 6);
  const auto out = min_hash(X, e);
  for (int i = 0; i < 6; ++i)
    for (int l = 0; l < 8; ++l) CHECK(out.H(i, l) == i);
}

TEST_CASE("exhaustive rank distribution over all 24 permutations") {
  // p = 4, q = 2: P(M = l) = (1/2, 1/3, 1/6, 0)
  SparseBuilder b;
  b.add_row({0, 1}, {1, 1});
  const auto X = b.build(4);
  std::int64_t counts[4] = {0, 0, 0, 0};
  for (const auto& perm : testutil::all_rank_arrays(4)) {
    const auto e = HashEnsemble::inject(
        make_config(HashVariant::random_sign, 1, 1, 0), 4, {perm});
    const auto out = min_hash(X, e);
    ++counts[out.M(0, 0) - 1];
  }
  CHECK(counts[0] == 12);
  CHECK(counts[1] == 8);
  CHECK(counts[2] == 4);
  CHECK(counts[3] == 0);
}

TEST_CASE("same seed gives identical ensembles") {
  const auto cfg = make_config(HashVariant::bbit_shuffled, 5, 2, 12345);
  const auto e1 = HashEnsemble::build(cfg, 30);
  const auto e2 = HashEnsemble::build(cfg, 30);
  for (int l = 0; l < 5; ++l) {
    CHECK(e1.permutation(l) == e2.permutation(l));
    CHECK(e1.shuffle_map(l) == e2.shuffle_map(l));
    for (int k = 0; k < 30; ++k) CHECK(e1.sign(l, k) == e2.sign(l, k));
  }
  SUBCASE("L = 1, p = 1 is the identity") {
    const auto e = HashEnsemble::build(
        make_config(HashVariant::random_sign, 1, 1, 9), 1);
    CHECK(e.rank(0, 0) == 1);
  }
}

TEST_CASE("H lands in the row support and M is its rank") {
  const auto X = random_binary(25, 40, 0.2, 3);
  const auto e =
      HashEnsemble::build(make_config(HashVariant::random_sign, 16, 1, 5), 40);
  const auto out = min_hash(X, e);
  for (std::int64_t i = 0; i < X.n_rows; ++i) {
    const auto cols = X.row_cols(i);
    for (std::int64_t l = 0; l < 16; ++l) {
      const auto h = out.H(i, l);
      CHECK(std::find(cols.begin(), cols.end(), h) != cols.end());
      CHECK(out.M(i, l) == e.rank(l, h));
      for (const auto k : cols) CHECK(e.rank(l, k) >= out.M(i, l));
    }
  }
}

TEST_CASE("b-bit blocks are one-hot per non-empty row") {
  SparseBuilder b;
  b.add_row({0, 4}, {1, 1});
  b.add_row({}, {});
  b.add_row({2, 3, 7}, {1, 1, 1});
  const auto X = b.build(9);
  const auto e =
      HashEnsemble::build(make_config(HashVariant::bbit_shuffled, 6, 2, 8), 9);
  const auto S = expand_bbit(min_hash(X, e), e);
  REQUIRE(S.cols() == 4 * 6);
  for (int l = 0; l < 6; ++l) {
    CHECK(S.block(0, 4 * l, 1, 4).sum() == 1.0);
    CHECK(S.block(1, 4 * l, 1, 4).sum() == 0.0);  // empty row: all-zero block
    CHECK(S.block(2, 4 * l, 1, 4).sum() == 1.0);
  }
}

TEST_CASE("injective shuffle keeps the full rank information") {
  // 2^b >= p with an injective map: each block row is the one-hot of M
  const auto X = random_binary(10, 7, 0.4, 21);
  std::vector<std::uint16_t> inj(7);
  for (int m = 0; m < 7; ++m) inj[m] = static_cast<std::uint16_t>(6 - m);
  const auto e = HashEnsemble::inject(
      make_config(HashVariant::bbit_shuffled, 3, 3, 77), 7, {}, {},
      {inj, inj, inj});
  const auto out = min_hash(X, e);
  const auto S = expand_bbit(out, e);
  for (std::int64_t i = 0; i < X.n_rows; ++i)
    for (int l = 0; l < 3; ++l)
      CHECK(S(i, 8 * l + inj[out.M(i, l) - 1]) == 1.0);
}

TEST_CASE("random-sign magnitudes copy the winning entry") {
  const auto X = testutil::table2_matrix();
  const auto e =
      HashEnsemble::build(make_config(HashVariant::random_sign, 12, 1, 4), 4);
  const auto out = min_hash(X, e);
  const auto S = random_sign_matrix(X, out, e);
  for (std::int64_t i = 0; i < X.n_rows; ++i)
    for (int l = 0; l < 12; ++l)
      CHECK(std::abs(S(i, l)) == std::abs(X.at(i, out.H(i, l))));

  SUBCASE("binary matrix with all-plus signs gives ones") {
    const auto Xb = testutil::table1_matrix();
    std::vector<std::vector<std::int8_t>> plus(
        3, std::vector<std::int8_t>(4, 1));
    const auto ep = HashEnsemble::inject(
        make_config(HashVariant::random_sign, 3, 1, 4), 4, {}, plus);
    const auto Sp = random_sign_matrix(Xb, min_hash(Xb, ep), ep);
    CHECK(Sp.minCoeff() == 1.0);
    CHECK(Sp.maxCoeff() == 1.0);
  }
}

TEST_CASE("second-min hashing") {
  SUBCASE("toy row 1 has second winner 4") {
    const auto X = testutil::table1_matrix();
    const auto e = HashEnsemble::inject(
        make_config(HashVariant::random_sign, 1, 1, 0), 4,
        {testutil::toy_perm()}, {testutil::toy_signs()});
    const auto out = min_hash(X, e);
    const auto second = second_min_hash(X, e, out);
    CHECK(second.H2(0, 0) + 1 == 4);
  }
  SUBCASE("singleton rows give zero") {
    SparseBuilder b;
    b.add_row({2}, {0.7});
    const auto X = b.build(5);
    const auto e = HashEnsemble::build(
        make_config(HashVariant::random_sign, 6, 1, 13), 5);
    const auto second = second_min_hash(X, e, min_hash(X, e));
    for (int l = 0; l < 6; ++l) {
      CHECK(second.H2(0, l) == -1);
      CHECK(second.S2(0, l) == 0.0);
    }
  }
  SUBCASE("reversing a two-element permutation swaps the winners") {
    SparseBuilder b;
    b.add_row({0, 1}, {0.5, -0.5});
    const auto X = b.build(2);
    const auto e1 = HashEnsemble::inject(
        make_config(HashVariant::random_sign, 1, 1, 0), 2, {{1, 2}},
        {{1, 1}});
    const auto e2 = HashEnsemble::inject(
        make_config(HashVariant::random_sign, 1, 1, 0), 2, {{2, 1}},
        {{1, 1}});
    const auto o1 = min_hash(X, e1);
    const auto o2 = min_hash(X, e2);
    CHECK(o1.H(0, 0) == second_min_hash(X, e2, o2).H2(0, 0));
    CHECK(o2.H(0, 0) == second_min_hash(X, e1, o1).H2(0, 0));
  }
}

TEST_CASE("rank pmf matches theory over many seeded ensembles") {
  // p = 4, q = 2, pmf (1/2, 1/3, 1/6, 0) within 4 standard errors per bin
  SparseBuilder b;
  b.add_row({1, 2}, {1, 1});
  const auto X = b.build(4);
  const std::int64_t R = 20000;
  std::int64_t counts[4] = {0, 0, 0, 0};
  for (std::int64_t r = 0; r < R; ++r) {
    const auto e = HashEnsemble::build(
        make_config(HashVariant::random_sign, 1, 1, 1000 + r), 4);
    ++counts[min_hash(X, e).M(0, 0) - 1];
  }
  const double probs[4] = {0.5, 1.0 / 3.0, 1.0 / 6.0, 0.0};
  for (int l = 0; l < 4; ++l) {
    const double freq = static_cast<double>(counts[l]) / R;
    const double se = std::sqrt(probs[l] * (1 - probs[l]) / R);
    CHECK(std::abs(freq - probs[l]) <= 4.0 * se + 1e-12);
  }
}

TEST_CASE("coupled signs reproduce the shuffled 1-bit column space") {
  // With Psi_kl = 2 shuffle_l(pi_l(k)) - 1 the random-sign column is an
  // affine recombination of the two 1-bit block columns, so OLS predictions
  // with an intercept agree.
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto X = random_binary(30, 16, 0.3, seed);
    const auto cfg_bit = make_config(HashVariant::bbit_shuffled, 8, 1, seed);
    const auto e_bit = HashEnsemble::build(cfg_bit, 16);

    std::vector<std::vector<std::uint32_t>> perms;
    std::vector<std::vector<std::int8_t>> signs;
    for (int l = 0; l < 8; ++l) {
      perms.push_back(e_bit.permutation(l));
      std::vector<std::int8_t> col(16);
      for (int k = 0; k < 16; ++k)
        col[k] = static_cast<std::int8_t>(
            2 * e_bit.shuffle(l, e_bit.rank(l, k)) - 1);
      signs.push_back(col);
    }
    const auto e_rs = HashEnsemble::inject(
        make_config(HashVariant::random_sign, 8, 1, seed), 16, perms, signs);

    const Eigen::MatrixXd S_bit = expand_bbit(min_hash(X, e_bit), e_bit);
    const Eigen::MatrixXd S_rs =
        random_sign_matrix(X, min_hash(X, e_rs), e_rs);

    Eigen::VectorXd y(30);
    Rng rng(seed * 99 + 1);
    for (int i = 0; i < 30; ++i) y[i] = rng.next_gaussian();

    const Eigen::VectorXd pred_bit = predict(fit_ols(S_bit, y), S_bit);
    const Eigen::VectorXd pred_rs = predict(fit_ols(S_rs, y), S_rs);
    CHECK((pred_bit - pred_rs).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("hashed-score mode") {
  const auto X = random_binary(20, 50, 0.15, 9);
  SUBCASE("b-bit expansion needs materialized ranks") {
    const auto e = HashEnsemble::build(
        make_config(HashVariant::bbit_shuffled, 4, 2, 3,
                    PermutationMode::hashed_scores),
        50);
    CHECK_THROWS_AS(expand_bbit(min_hash(X, e), e), incompat_error);
  }
  SUBCASE("materialized ranks agree with the raw-score winners") {
    auto cfg = make_config(HashVariant::bbit_shuffled, 4, 2, 3,
                           PermutationMode::hashed_scores);
    const auto e_raw = HashEnsemble::build(cfg, 50);
    cfg.materialize_ranks = true;
    const auto e_rank = HashEnsemble::build(cfg, 50);
    const auto o_raw = min_hash(X, e_raw);
    const auto o_rank = min_hash(X, e_rank);
    CHECK((o_raw.H - o_rank.H).cwiseAbs().maxCoeff() == 0);
    const auto S = expand_bbit(o_rank, e_rank);
    for (std::int64_t i = 0; i < X.n_rows; ++i)
      for (int l = 0; l < 4; ++l)
        CHECK(S.block(i, 4 * l, 1, 4).sum() == 1.0);
  }
  SUBCASE("random-sign agrees between modes when ranks are materialized") {
    auto cfg = make_config(HashVariant::random_sign, 6, 1, 21,
                           PermutationMode::hashed_scores);
    const auto e1 = HashEnsemble::build(cfg, 50);
    cfg.materialize_ranks = true;
    const auto e2 = HashEnsemble::build(cfg, 50);
    const auto S1 = random_sign_matrix(X, min_hash(X, e1), e1);
    const auto S2 = random_sign_matrix(X, min_hash(X, e2), e2);
    CHECK((S1 - S2).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("random projection") {
  SUBCASE("empty matrix maps to zero") {
    SparseBuilder b;
    b.add_row({}, {});
    b.add_row({}, {});
    const auto X = b.build(6);
    const auto S = random_projection(X, 5, 1);
    CHECK(S.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("matches the dense multiply oracle") {
    Rng rng(33);
    SparseBuilder b;
    for (int i = 0; i < 2; ++i) {
      std::vector<std::int32_t> cols;
      std::vector<double> vals;
      for (std::int32_t k = 0; k < 8; ++k)
        if (rng.next_double() < 0.5) {
          cols.push_back(k);
          vals.push_back(rng.next_gaussian());
        }
      b.add_row(cols, vals);
    }
    const auto X = b.build(8);
    const auto S = random_projection(X, 4, 77);
    // reconstruct A from the same per-column streams and multiply densely
    Eigen::MatrixXd A(8, 4);
    for (int l = 0; l < 4; ++l) {
      Rng col(derive_seed(77, Stream::projection, l));
      for (int k = 0; k < 8; ++k) A(k, l) = col.next_gaussian();
    }
    const Eigen::MatrixXd expect = X.dense() * A;
    CHECK((S - expect).cwiseAbs().maxCoeff() < 1e-12);
  }
}
