#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "minhash/hashing.hpp"
#include "minhash/sparse.hpp"

namespace minhash {

// P(min permuted rank over a q-subset = l), l = 1..p. Computed by the
// multiplicative recurrence P(1) = q/p, P(l+1) = P(l) (p-l-q+1)/(p-l);
// never through factorials.
std::vector<double> min_rank_pmf(std::int64_t p, std::int64_t q);

// Per-rank weight vector; at(rank) is 0 beyond the stored length for the
// truncated kinds.
struct WeightVector {
  enum class Kind { main_effects, taylor_full, taylor_truncated, geometric };
  Kind kind = Kind::main_effects;
  std::vector<double> w;  // w[l-1] is the weight of rank l
  double a = 0.0;         // scaling exponent (Taylor kinds)
  double m = 0.0;         // truncation level
  double sq_norm = 0.0;

  double at(std::int64_t rank) const {
    return rank >= 1 && rank <= static_cast<std::int64_t>(w.size())
               ? w[rank - 1]
               : 0.0;
  }
};

// Minimum-norm weights satisfying the unbiasedness constraint
// sum_l w_l P(rank = l) = 1: w_l = P(l) / sum P(l')^2.
WeightVector rank_weights_main(std::int64_t p, std::int64_t q);

// Weights targeting the scaling kappa(delta) = delta^-a, via the Taylor
// coefficients of kappa about 1 (untruncated; w_l = p a(a+1)...(a+l-2)/(l-1)!).
// max_rank caps the precomputed table.
WeightVector taylor_weights_full(double a, std::int64_t p,
                                 std::int64_t max_rank = 0);

// Truncated variant targeting (delta_min/delta)^a; the truncation level is
// log(L)/(2 delta_min) for a = 1/2 and log(2(2a-1)L)/(2 delta_min) otherwise.
WeightVector taylor_weights_truncated(double a, std::int64_t p, std::int64_t L,
                                      double delta_min);

// Truncated geometric weights for the unscaled unequal-sparsity target:
// w_l = p (1-db)^{l-1} db(2-db) / (1-(1-db)^{2m}) for l <= m.
WeightVector geometric_weights(std::int64_t p, double delta_bar, std::int64_t m);

// truncation level for the geometric weights:
// round(min{(p |beta|^2 n / (L |X beta|^2 V))^{1/3}, 1/(2 db)}), at least 1
std::int64_t geometric_truncation_level(std::int64_t p, std::int64_t L,
                                        double beta_sq_norm, double signal_ms,
                                        double v_delta, double delta_bar);

// Main-effects oracle coefficients. Random-sign: length L with
// b*_l = (q/L) sum_k beta_k Psi_kl w_{pi_l(k)}. Shuffled b-bit: length 2^b L
// using the centered indicator (1{shuffle(pi_l(k))+1=c} - nu)/(1 - nu) with
// nu = 2^-b. Requires equal row sparsity q in the matrix it is paired with.
Eigen::VectorXd oracle_b_main(const Eigen::VectorXd& beta,
                              const HashEnsemble& e, std::int64_t q,
                              const WeightVector& w);

// Realization of the geometric representation of a permutation: draw uniform
// columns with replacement; g(k) is the first time k appears. g(k) ~
// Geo(1/p), the ranks of g form a uniform permutation, and the minimum of g
// over any fixed q-set is Geo(q/p) with an independent argmin.
struct FirstHitStream {
  std::vector<std::int64_t> g;     // first-hit times, >= 1
  std::vector<std::uint32_t> rank;  // 1-based ranks of g (empty unless asked)
};

FirstHitStream first_hit_stream(std::int64_t p, std::uint64_t seed,
                                bool want_ranks = false);

using SignMatrix =
    Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic>;  // p x L

SignMatrix random_signs(std::int64_t p, std::int64_t L, std::uint64_t seed);

// Scaled-signal oracle over first-hit streams: b*_l = (1/L) sum_k beta_k
// Psi_kl w_{g_l(k)}, paired with the random-sign S from the induced
// permutations so S b* targets kappa(delta_i) x_i^T beta.
struct ScaledOracle {
  Eigen::VectorXd b_star;  // length L
  Eigen::MatrixXd S;       // n x L
};

ScaledOracle oracle_b_scaled(const SparseMatrix& X, const Eigen::VectorXd& beta,
                             const WeightVector& w,
                             const std::vector<FirstHitStream>& streams,
                             const SignMatrix& signs);

// Interaction model: f*_i = sum_k X_ik theta1_k
//                         + sum_{k,k1} X_ik 1{X_ik1 = 0} Theta2_{k,k1}.
struct InteractionModel {
  struct Triple {
    std::int32_t k;
    std::int32_t k1;
    double value;
  };
  std::int64_t p = 0;
  Eigen::VectorXd theta1;       // length p
  std::vector<Triple> theta2;   // off-diagonal entries of Theta2

  void validate() const;
};

Eigen::VectorXd interaction_signal(const SparseMatrix& X,
                                   const InteractionModel& model);

// l(Theta*) = |theta1|_2 + sqrt(2 (2-q/p) q sum_k (sum_k1 |Theta_k,k1|)^2)
double interaction_norm(const InteractionModel& model, std::int64_t q);

struct InteractionWeights {
  WeightVector w1;          // main-effects weights
  std::vector<double> w2;   // w2[l-1]; w2[0] unused (rank 1 has no smaller rank)
};

// Second-row weights W2_l = r_l / sum_{l'>=2} (l'-1) r_{l'}^2 with
// r_l = C(p-l, q-1)/C(p-1, q), by ratio recurrence. Needs p >= 3, q <= p-1.
InteractionWeights interaction_weights(std::int64_t p, std::int64_t q);

// b*_l = (q/L) sum_k Psi_kl theta1_k W1_{pi_l(k)}
//      + (pq/L) sum_k Psi_kl sum_k1 Theta_{k,k1} 1{pi_l(k1) < pi_l(k)}
//        W2_{pi_l(k)}
Eigen::VectorXd oracle_b_interaction(const InteractionModel& model,
                                     const HashEnsemble& e, std::int64_t q,
                                     const InteractionWeights& iw);

}  // namespace minhash
