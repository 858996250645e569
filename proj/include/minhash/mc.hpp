#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "json.hpp"
#include "minhash/oracle.hpp"
#include "minhash/sparse.hpp"

namespace minhash {

// One Monte Carlo verification: an estimate with its standard error against
// a closed-form bound. Mean checks pass within 4 SE two-sided; bound checks
// pass one-sided with 3 SE slack.
struct McRecord {
  std::string target;
  nlohmann::json params;
  double estimate = 0.0;
  double se = 0.0;
  double bound = 0.0;
  bool pass = false;

  nlohmann::json to_json() const;
};

struct McOptions {
  std::int64_t R = 20000;
  std::uint64_t seed = 0;
  int threads = 0;  // <= 0: hardware default
  double eta = 1.0;

  void validate() const;  // R >= 1000
};

// --- main-effects oracles (equal row sparsity; variant random_sign or
//     bbit_shuffled with the given b) ---

McRecord mc_unbiasedness_main(const SparseMatrix& X, const Eigen::VectorXd& beta,
                              HashVariant variant, int b, std::int64_t L,
                              const McOptions& opt);

McRecord mc_approx_error_main(const SparseMatrix& X, const Eigen::VectorXd& beta,
                              HashVariant variant, int b, std::int64_t L,
                              const McOptions& opt);

// mean of |b*|^2 against its expectation bound, two-sided (tightness; exact
// at p = q)
McRecord mc_norm_tightness(const SparseMatrix& X, const Eigen::VectorXd& beta,
                           std::int64_t L, const McOptions& opt);

McRecord mc_concentration_main(const SparseMatrix& X,
                               const Eigen::VectorXd& beta, std::int64_t L,
                               const McOptions& opt);

// --- interaction oracle (random-sign) ---

McRecord mc_unbiasedness_interaction(const SparseMatrix& X,
                                     const InteractionModel& model,
                                     std::int64_t L, const McOptions& opt);

McRecord mc_approx_error_interaction(const SparseMatrix& X,
                                     const InteractionModel& model,
                                     std::int64_t L, const McOptions& opt);

McRecord mc_concentration_interaction(const SparseMatrix& X,
                                      const InteractionModel& model,
                                      std::int64_t L, const McOptions& opt);

// --- scaled-signal oracles over first-hit streams ---

// untruncated Taylor weights; componentwise mean of S b* against
// kappa(delta_i) x_i' beta with kappa(d) = d^-a
McRecord mc_unbiasedness_scaled(const SparseMatrix& X,
                                const Eigen::VectorXd& beta, double a,
                                std::int64_t L, const McOptions& opt);

// truncated weights targeting (delta_min/delta_i)^a x_i' beta; every row's
// mean squared error must sit below the closed-form bound
McRecord mc_row_error_scaled(const SparseMatrix& X, const Eigen::VectorXd& beta,
                             double a, std::int64_t L, const McOptions& opt);

// geometric weights, unscaled target; aggregate (1/n)|S b* - X beta|^2
McRecord mc_error_unscaled(const SparseMatrix& X, const Eigen::VectorXd& beta,
                           std::int64_t L, const McOptions& opt);

// per-row bound constant of the untruncated Taylor oracle:
// p/L sum_l c_{l-1}^2 (1-1/p)^{l-1}
double taylor_full_error_bound(double a, std::int64_t p, std::int64_t L,
                               double beta_sq_norm);

// --- deterministic test instances ---

// binary matrix with exactly q non-zeros per row
SparseMatrix mc_binary_instance(std::int64_t n, std::int64_t p, std::int64_t q,
                                std::uint64_t seed);
// binary matrix with per-row counts uniform on [q_lo, q_hi]
SparseMatrix mc_ragged_instance(std::int64_t n, std::int64_t p,
                                std::int64_t q_lo, std::int64_t q_hi,
                                std::uint64_t seed);
// standard normal vector scaled to unit norm
Eigen::VectorXd mc_unit_beta(std::int64_t p, std::uint64_t seed);

}  // namespace minhash
