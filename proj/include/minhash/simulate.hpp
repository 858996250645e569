#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "minhash/oracle.hpp"
#include "minhash/sparse.hpp"

namespace minhash {

enum class DesignDist { binary, gaussian, exponential };
enum class CoefKind { exponential, brownian };

const char* to_string(DesignDist d);
const char* to_string(CoefKind c);

struct ScenarioConfig {
  std::int64_t n = 0;
  std::int64_t p = 0;
  std::int64_t q = 0;
  double rho = 0.0;
  double sigma = 1.0;
  double kappa_int = 0.0;  // interaction strength
  DesignDist design = DesignDist::binary;
  CoefKind coef = CoefKind::brownian;
  std::uint64_t seed = 0;
  bool clip = false;  // divide the matrix by max |value| after generation

  void validate() const;
  // flat key-value text file: p, n, q, sigma, interaction_strength, rho,
  // design, coefficients, seed
  static ScenarioConfig from_file(const std::string& path);
};

// Entries non-zero with probability q/p (value 1 / standard normal /
// standard exponential), then the correlation pass: for k = 2..p each entry
// is replaced by its left neighbour with probability rho.
SparseMatrix gen_design(const ScenarioConfig& cfg);

// beta scaled so |X beta|^2 / n = 1; redraws when X beta vanishes
Eigen::VectorXd gen_coefficients(const ScenarioConfig& cfg,
                                 const SparseMatrix& X);

struct InteractionSignal {
  Eigen::VectorXd g;  // unit mean square
  std::int64_t start1 = 0;
  std::int64_t start2 = 0;
  std::int64_t block = 0;
  double scale = 1.0;
};

// g'_i = (sum_{k in I1} X_ik)(sum_{k in I2} X_ik) over two uniformly placed
// blocks of ceil(p/q) consecutive columns, rescaled to unit mean square
InteractionSignal gen_interaction(const ScenarioConfig& cfg,
                                  const SparseMatrix& X);

Eigen::VectorXd gen_response(const Eigen::VectorXd& f_star, double sigma,
                             std::uint64_t seed);
Eigen::VectorXd gen_response_logistic(const Eigen::VectorXd& f_star,
                                      std::uint64_t seed);

// Exact reparametrization of a binary product-block signal kappa * g in the
// zero-indicator interaction form: theta_k += kappa c |I2| on I1 and
// Theta_{k1,k2} = -kappa c on I1 x I2 off the diagonal, where c is the
// normalization scale of g. Requires a binary design.
InteractionModel product_block_model(const Eigen::VectorXd& beta, double kappa,
                                     const InteractionSignal& sig,
                                     std::int64_t p);

}  // namespace minhash
