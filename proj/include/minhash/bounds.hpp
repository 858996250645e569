#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "json.hpp"

namespace minhash::bounds {

// expected approximation error (1/n) E|S b* - X beta|^2, random-sign variant
double approx_main_rs(std::int64_t p, std::int64_t q, std::int64_t L,
                      double beta_sq_norm);

// shuffled b-bit variant; col_weighted = (1/n) sum_k |X_k|^2 beta_k^2
double approx_main_bbit(std::int64_t p, std::int64_t q, std::int64_t L, int b,
                        double beta_sq_norm, double col_weighted);

// per-row error for the (delta_min/delta)^a scaled target
double approx_scaled(double a, std::int64_t L, std::int64_t q_min,
                     double delta_min, double beta_sq_norm);

struct UnscaledApprox {
  double bound = 0.0;
  double regime_threshold = 0.0;  // L at which the case split changes
  bool small_L_regime = true;
};

// unscaled unequal-sparsity bound; signal_ms = |X beta|^2 / n
UnscaledApprox approx_unscaled(std::int64_t p, std::int64_t L, double delta_bar,
                               double v_delta, double beta_sq_norm,
                               double signal_ms);

// interaction approximation error via l(Theta*)
double approx_interaction(std::int64_t p, std::int64_t q, std::int64_t L,
                          double ell);

// statistically optimal compressed dimension sqrt((2-q/p) q n) |beta| / sigma
double l_star(std::int64_t p, std::int64_t q, std::int64_t n, double beta_norm,
              double sigma);

double ols_mspe(std::int64_t p, std::int64_t q, std::int64_t n, std::int64_t L,
                double sigma, double beta_norm, double gamma_sq);

// tail probability that |b*|^2 exceeds (1+eta) times its expectation bound
double rho_main(std::int64_t p, std::int64_t q, std::int64_t L, double eta);
double rho_interaction(std::int64_t p, std::int64_t q, std::int64_t L,
                       double eta);

// centered_signal_sq = |X beta - mean(X beta) 1 + gamma|^2
double ridge_mspe(std::int64_t p, std::int64_t q, std::int64_t n,
                  std::int64_t L, double sigma, double eta, double beta_norm,
                  double centered_signal_sq, double gamma_sq);

double p_tilde(const Eigen::VectorXd& probs);

double logistic_excess(std::int64_t p, std::int64_t q, std::int64_t n,
                       std::int64_t L, double eta, double beta_norm,
                       double p_tilde_value);

double inter_ols_mspe(std::int64_t p, std::int64_t q, std::int64_t n,
                      std::int64_t L, double sigma, double ell,
                      double gamma_sq);
double inter_ridge_mspe(std::int64_t p, std::int64_t q, std::int64_t n,
                        std::int64_t L, double sigma, double eta, double ell,
                        double centered_signal_sq, double gamma_sq);
double inter_logistic_excess(std::int64_t p, std::int64_t q, std::int64_t n,
                             std::int64_t L, double eta, double ell,
                             double p_tilde_value);

// constraint radii of the norm-constrained estimators
double ridge_radius_main(std::int64_t p, std::int64_t q, std::int64_t L,
                         double eta, double beta_norm);
double ridge_radius_interaction(std::int64_t p, std::int64_t q, std::int64_t L,
                                double eta, double ell);

// integer argmin over b in [1, b_max] of the per-bit approximation-error
// factor b/(2^b - 1) (1 + (2^b - 2)(2 - s) s) under a fixed L*b budget
int optimal_bits(double sparsity, int b_max = 24);

// closed-form report bundle for the CLI
struct BoundReport {
  std::int64_t n = 0, p = 0, q = 0, L = 0;
  int b = 1;
  double sigma = 0.0, eta = 0.0, beta_norm = 0.0, ell = 0.0;
  double delta_bar = 0.0, v_delta = 0.0;

  double approx_bound = 0.0;
  double L_star = 0.0;
  double rho = 0.0;
  double rho2 = 0.0;
  double mspe_ols = 0.0;
  double mspe_ridge = 0.0;
  int optimal_b = 1;
  bool sup_norm_warning = false;  // inputs exceed the |X|_inf <= 1 regime

  nlohmann::json to_json() const;
};

}  // namespace minhash::bounds
