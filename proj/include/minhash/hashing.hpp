#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "minhash/io.hpp"
#include "minhash/rng.hpp"
#include "minhash/sparse.hpp"

namespace minhash {

enum class HashVariant { bbit_plain, bbit_shuffled, random_sign };
enum class PermutationMode { fisher_yates, hashed_scores };

const char* to_string(HashVariant v);
const char* to_string(PermutationMode m);

struct HashConfig {
  std::int64_t L = 1;  // number of permutations / blocks
  int b = 1;           // bits per block (b-bit variants)
  HashVariant variant = HashVariant::random_sign;
  PermutationMode mode = PermutationMode::fisher_yates;
  std::uint64_t seed = 0;
  // hashed_scores stores raw 64-bit scores instead of ranks; materializing
  // ranks (a per-permutation sort) restores everything rank-based, e.g. the
  // b-bit expansion
  bool materialize_ranks = false;

  void validate() const;
};

// All randomness of one compression: permutations (explicit rank arrays or
// keyed scores), random signs, and per-permutation shuffle maps. Sub-streams
// are derived per (seed, stream, index), so construction is deterministic and
// order-independent.
class HashEnsemble {
 public:
  static HashEnsemble build(const HashConfig& config, std::int64_t p);

  // test/CLI injection; any part left empty is generated from config.seed.
  // perms[l][k] is the 1-based rank of column k; shuffles[l][m-1] in [0, 2^b)
  // is the image of rank m.
  static HashEnsemble inject(
      const HashConfig& config, std::int64_t p,
      std::vector<std::vector<std::uint32_t>> perms,
      std::vector<std::vector<std::int8_t>> signs = {},
      std::vector<std::vector<std::uint16_t>> shuffles = {});

  std::int64_t p() const { return p_; }
  std::int64_t L() const { return config_.L; }
  const HashConfig& config() const { return config_; }
  bool has_ranks() const { return !perms_.empty(); }

  // 1-based rank of column k under permutation l
  std::uint32_t rank(std::int64_t l, std::int64_t k) const {
    return perms_[l][k];
  }
  std::uint64_t score(std::int64_t l, std::int64_t k) const {
    return mix64(perm_seeds_[l] ^ (0xd1342543de82ef95ULL * (k + 1)));
  }
  double sign(std::int64_t l, std::int64_t k) const {
    if (!signs_.empty()) return signs_[l][k];
    return (mix64(sign_seeds_[l] ^ (0xda942042e4dd58b5ULL * (k + 1))) & 1) ? 1.0
                                                                           : -1.0;
  }
  // shuffle map value of 1-based rank m, in [0, 2^b)
  std::uint16_t shuffle(std::int64_t l, std::int64_t m) const {
    return shuffles_[l][m - 1];
  }

  const std::vector<std::uint32_t>& permutation(std::int64_t l) const {
    return perms_[l];
  }
  const std::vector<std::uint16_t>& shuffle_map(std::int64_t l) const {
    return shuffles_[l];
  }

 private:
  HashConfig config_;
  std::int64_t p_ = 0;
  std::vector<std::vector<std::uint32_t>> perms_;
  std::vector<std::vector<std::int8_t>> signs_;
  std::vector<std::vector<std::uint16_t>> shuffles_;
  std::vector<std::uint64_t> perm_seeds_;
  std::vector<std::uint64_t> sign_seeds_;
};

// Per (row, permutation): H holds the winning original column (0-based, -1
// for empty rows); M holds its 1-based permuted rank when ranks are
// available, otherwise the raw score.
struct HashOutput {
  MatrixXi64 H;
  MatrixXi64 M;
  Eigen::Matrix<std::uint64_t, Eigen::Dynamic, Eigen::Dynamic> scores;
  bool has_ranks = true;

  std::int64_t rows() const { return H.rows(); }
  std::int64_t L() const { return H.cols(); }
};

HashOutput min_hash(const SparseMatrix& X, const HashEnsemble& e);

// n x 2^b L one-hot expansion; block l, column c is set iff phi(M_il)+1 = c
// with phi the residue map (plain) or the per-permutation shuffle map.
// Empty rows give an all-zero block.
Eigen::MatrixXd expand_bbit(const HashOutput& out, const HashEnsemble& e);

// n x L with entries Psi_{H_il, l} X_{i, H_il}; empty rows give 0
Eigen::MatrixXd random_sign_matrix(const SparseMatrix& X, const HashOutput& out,
                                   const HashEnsemble& e);

struct SecondMinOutput {
  MatrixXi64 H2;        // second-smallest-rank column, -1 when none
  Eigen::MatrixXd S2;   // Psi_{H2,l} X_{i,H2}, 0 when none
};

SecondMinOutput second_min_hash(const SparseMatrix& X, const HashEnsemble& e,
                                const HashOutput& out);

// S = X A with A iid standard normal, one sub-stream per column
Eigen::MatrixXd random_projection(const SparseMatrix& X, std::int64_t L,
                                  std::uint64_t seed);

// compressed matrix for a config: random-sign or b-bit expansion as required
Eigen::MatrixXd compress(const SparseMatrix& X, const HashEnsemble& e);

}  // namespace minhash
