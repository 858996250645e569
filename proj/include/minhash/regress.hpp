#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "minhash/hashing.hpp"
#include "minhash/sparse.hpp"

namespace minhash {

struct FitResult {
  double alpha = 0.0;  // intercept; unused when has_intercept is false
  Eigen::VectorXd b;
  std::string estimator;
  double radius = std::numeric_limits<double>::infinity();
  bool has_intercept = true;
  bool constraint_active = false;

  // solver diagnostics
  std::int64_t iterations = 0;
  double lambda = 0.0;  // final multiplier (ridge)
  double objective = 0.0;
  std::int64_t rank = -1;

  nlohmann::json to_json() const;
};

Eigen::VectorXd predict(const FitResult& fit, const Eigen::MatrixXd& S);

// Least squares of y on [1 | S]; centering plus a rank-revealing complete
// orthogonal decomposition, so the wide/rank-deficient case returns the
// minimum-norm solution.
FitResult fit_ols(const Eigen::MatrixXd& S, const Eigen::VectorXd& y);

// min |y - alpha 1 - S b|^2 subject to |b| <= radius. Solved in the dual:
// b(lambda) = (Sc' Sc + lambda I)^-1 Sc' yc evaluated through one symmetric
// eigendecomposition of the smaller Gram side, then lambda bracketed by
// doubling and bisected until | |b(lambda)| - radius | <= 1e-8 radius.
FitResult fit_ridge_constrained(const Eigen::MatrixXd& S,
                                const Eigen::VectorXd& y, double radius);

// (1/n) sum [-y_i s_i'b + log(1 + exp(s_i'b))] subject to |b| <= radius,
// by projected gradient with Armijo backtracking (c = 1e-4, shrink 1/2);
// stops when the objective decrease drops below 1e-10 or after 1e4 steps.
// No intercept by default, matching the classification model.
FitResult fit_logistic_constrained(const Eigen::MatrixXd& S,
                                   const Eigen::VectorXd& y, double radius,
                                   bool intercept = false,
                                   const Eigen::VectorXd* b0 = nullptr);

double logistic_loss(const Eigen::MatrixXd& S, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& b);

// realized denoising error |f* - pred|^2 / n
double mspe(const Eigen::VectorXd& prediction, const Eigen::VectorXd& f_star);

// logistic-loss gap between the fitted linear predictor S b and the true
// predictor f_lin, weighted by the true success probabilities
double excess_risk_logistic(const Eigen::VectorXd& b_hat,
                            const Eigen::MatrixXd& S,
                            const Eigen::VectorXd& f_star_linpred,
                            const Eigen::VectorXd& p_vec);

using FitProc = std::function<FitResult(const Eigen::MatrixXd& S)>;

// B independently hashed compressions, one fit each, predictions averaged
Eigen::VectorXd aggregate_predict(const SparseMatrix& X, HashConfig config,
                                  std::int64_t B, const FitProc& fit,
                                  const std::vector<std::uint64_t>& seeds,
                                  int threads = 1);

// diff_i = sum_l (S_il - S2_il) 1{H_il = k} b_l, the exact change in
// prediction from zeroing column k and re-hashing with the same ensemble
struct ImportanceResult {
  Eigen::VectorXd diff;
  double norm = 0.0;
};

ImportanceResult variable_importance(const FitResult& fit, const MatrixXi64& H,
                                     const Eigen::MatrixXd& S,
                                     const Eigen::MatrixXd& S2, std::int64_t k);

// importance norms for every variable in one pass
std::vector<double> importance_norms(const FitResult& fit, const MatrixXi64& H,
                                     const Eigen::MatrixXd& S,
                                     const Eigen::MatrixXd& S2, std::int64_t p);

// max-abs normal-equation residual of Sc'(yc - Sc b) - lambda b, relative
double kkt_residual(const Eigen::MatrixXd& S, const Eigen::VectorXd& y,
                    const FitResult& fit);

}  // namespace minhash
