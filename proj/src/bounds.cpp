#include "minhash/bounds.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace minhash::bounds {

namespace {

double delta_of(std::int64_t p, std::int64_t q) {
  return static_cast<double>(q) / static_cast<double>(p);
}

}  // namespace

double approx_main_rs(std::int64_t p, std::int64_t q, std::int64_t L,
                      double beta_sq_norm) {
  return (2.0 - delta_of(p, q)) * static_cast<double>(q) * beta_sq_norm /
         static_cast<double>(L);
}

double approx_main_bbit(std::int64_t p, std::int64_t q, std::int64_t L, int b,
                        double beta_sq_norm, double col_weighted) {
  const double d = delta_of(p, q);
  const double C = std::pow(2.0, b);
  const double lead =
      (2.0 - d) * static_cast<double>(q) / (C * static_cast<double>(L) * (1.0 - 1.0 / C));
  return lead * (beta_sq_norm + (C - 2.0) * (2.0 - d) * col_weighted);
}

double approx_scaled(double a, std::int64_t L, std::int64_t q_min,
                     double delta_min, double beta_sq_norm) {
  const double lead =
      static_cast<double>(q_min) * beta_sq_norm / static_cast<double>(L);
  if (a == 0.5)
    return lead * std::log(4.0 * std::log(static_cast<double>(L)) / delta_min);
  const double t = 2.0 * a - 1.0;
  return lead / t * std::pow(std::log(2.0 * t * static_cast<double>(L)), t);
}

UnscaledApprox approx_unscaled(std::int64_t p, std::int64_t L, double delta_bar,
                               double v_delta, double beta_sq_norm,
                               double signal_ms) {
  UnscaledApprox out;
  const double pd = static_cast<double>(p);
  const double Ld = static_cast<double>(L);
  if (v_delta <= 0.0 || signal_ms <= 0.0) {
    out.regime_threshold = std::numeric_limits<double>::infinity();
  } else {
    out.regime_threshold = pd * std::pow(2.0 * delta_bar, 3.0) * beta_sq_norm /
                           (signal_ms * v_delta);
  }
  out.small_L_regime = Ld <= out.regime_threshold;
  if (out.small_L_regime) {
    out.bound = 6.0 * pd * delta_bar * beta_sq_norm / Ld;
  } else {
    out.bound = 3.0 * std::pow(pd * beta_sq_norm / Ld, 2.0 / 3.0) *
                std::cbrt(signal_ms * v_delta);
  }
  return out;
}

double approx_interaction(std::int64_t p, std::int64_t q, std::int64_t L,
                          double ell) {
  return (2.0 - delta_of(p, q)) * static_cast<double>(q) * ell * ell /
         static_cast<double>(L);
}

double l_star(std::int64_t p, std::int64_t q, std::int64_t n, double beta_norm,
              double sigma) {
  if (sigma <= 0.0) throw std::invalid_argument("l_star: sigma > 0");
  return std::sqrt((2.0 - delta_of(p, q)) * static_cast<double>(q) *
                   static_cast<double>(n)) *
         beta_norm / sigma;
}

double ols_mspe(std::int64_t p, std::int64_t q, std::int64_t n, std::int64_t L,
                double sigma, double beta_norm, double gamma_sq) {
  const double ls = l_star(p, q, n, beta_norm, sigma);
  const double ratio =
      std::max(static_cast<double>(L) / ls, ls / static_cast<double>(L));
  return 2.0 * std::sqrt(2.0 - delta_of(p, q)) * ratio * sigma *
             std::sqrt(static_cast<double>(q) / static_cast<double>(n)) *
             beta_norm +
         gamma_sq / static_cast<double>(n) +
         sigma * sigma / static_cast<double>(n);
}

double rho_main(std::int64_t p, std::int64_t q, std::int64_t L, double eta) {
  const double d = delta_of(p, q);
  return std::exp(-static_cast<double>(L) * eta * eta /
                  (2.0 * (2.0 - d) * (3.0 + 2.0 * eta) * static_cast<double>(q)));
}

double rho_interaction(std::int64_t p, std::int64_t q, std::int64_t L,
                       double eta) {
  const double d = delta_of(p, q);
  const double qd = static_cast<double>(q);
  return rho_main(p, q, L, eta) +
         std::exp(-static_cast<double>(L) * eta * eta /
                  (4.0 * (2.0 - d) * (2.0 - d) * (3.0 + 2.0 * eta) * qd * qd));
}

double ridge_mspe(std::int64_t p, std::int64_t q, std::int64_t n,
                  std::int64_t L, double sigma, double eta, double beta_norm,
                  double centered_signal_sq, double gamma_sq) {
  const double d = delta_of(p, q);
  const double ls = l_star(p, q, n, beta_norm, sigma);
  const double nd = static_cast<double>(n);
  return std::sqrt((2.0 - d) * static_cast<double>(q)) * beta_norm *
             (2.0 * sigma * std::sqrt(1.0 + eta) + ls / static_cast<double>(L)) /
             std::sqrt(nd) +
         rho_main(p, q, L, eta) * centered_signal_sq / nd + gamma_sq / nd +
         sigma * sigma / nd;
}

double p_tilde(const Eigen::VectorXd& probs) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0 || probs[i] >= 1.0)
      throw std::invalid_argument("p_tilde: probabilities must lie in (0,1)");
    acc += probs[i] * (1.0 - probs[i]);
  }
  return acc / static_cast<double>(probs.size());
}

double logistic_excess(std::int64_t p, std::int64_t q, std::int64_t n,
                       std::int64_t L, double eta, double beta_norm,
                       double p_tilde_value) {
  const double d = delta_of(p, q);
  // L* enters as L*/(4L) = sqrt((2-d) q n) |beta| / (4 L sigma); the sigma=1
  // convention of the classification model is used by passing sigma = 1
  const double ls = std::sqrt((2.0 - d) * static_cast<double>(q) *
                              static_cast<double>(n)) *
                    beta_norm;
  return std::sqrt((2.0 - d) * static_cast<double>(q)) * beta_norm *
             (std::sqrt((1.0 + eta) * p_tilde_value) +
              ls / (4.0 * static_cast<double>(L))) /
             std::sqrt(static_cast<double>(n)) +
         std::log(2.0) * rho_main(p, q, L, eta);
}

double inter_ols_mspe(std::int64_t p, std::int64_t q, std::int64_t n,
                      std::int64_t L, double sigma, double ell,
                      double gamma_sq) {
  return ols_mspe(p, q, n, L, sigma, ell, gamma_sq);
}

double inter_ridge_mspe(std::int64_t p, std::int64_t q, std::int64_t n,
                        std::int64_t L, double sigma, double eta, double ell,
                        double centered_signal_sq, double gamma_sq) {
  const double d = delta_of(p, q);
  const double ls = l_star(p, q, n, ell, sigma);
  const double nd = static_cast<double>(n);
  return std::sqrt((2.0 - d) * static_cast<double>(q)) * ell *
             (2.0 * sigma * std::sqrt(1.0 + eta) +
              std::sqrt(2.0) * ls / static_cast<double>(L)) /
             std::sqrt(nd) +
         rho_interaction(p, q, L, eta) * centered_signal_sq / nd +
         gamma_sq / nd + sigma * sigma / nd;
}

double inter_logistic_excess(std::int64_t p, std::int64_t q, std::int64_t n,
                             std::int64_t L, double eta, double ell,
                             double p_tilde_value) {
  const double d = delta_of(p, q);
  const double ls = std::sqrt((2.0 - d) * static_cast<double>(q) *
                              static_cast<double>(n)) *
                    ell;
  return std::sqrt((2.0 - d) * static_cast<double>(q)) * ell *
             (std::sqrt((1.0 + eta) * p_tilde_value) +
              std::sqrt(2.0) * ls / (4.0 * static_cast<double>(L))) /
             std::sqrt(static_cast<double>(n)) +
         std::log(2.0) * rho_interaction(p, q, L, eta);
}

double ridge_radius_main(std::int64_t p, std::int64_t q, std::int64_t L,
                         double eta, double beta_norm) {
  return std::sqrt((1.0 + eta) * (2.0 - delta_of(p, q)) *
                   static_cast<double>(q) * beta_norm * beta_norm /
                   static_cast<double>(L));
}

double ridge_radius_interaction(std::int64_t p, std::int64_t q, std::int64_t L,
                                double eta, double ell) {
  return std::sqrt((1.0 + eta) * 2.0 * (2.0 - delta_of(p, q)) *
                   static_cast<double>(q) * ell * ell /
                   static_cast<double>(L));
}

int optimal_bits(double sparsity, int b_max) {
  if (sparsity <= 0.0 || sparsity >= 1.0)
    throw std::invalid_argument("optimal_bits: sparsity in (0,1)");
  int best = 1;
  double best_val = std::numeric_limits<double>::infinity();
  for (int b = 1; b <= b_max; ++b) {
    const double C = std::pow(2.0, b);
    const double val = static_cast<double>(b) / (C - 1.0) *
                       (1.0 + (C - 2.0) * (2.0 - sparsity) * sparsity);
    if (val < best_val) {
      best_val = val;
      best = b;
    }
  }
  return best;
}

nlohmann::json BoundReport::to_json() const {
  return nlohmann::json{{"n", n},
                        {"p", p},
                        {"q", q},
                        {"L", L},
                        {"b", b},
                        {"sigma", sigma},
                        {"eta", eta},
                        {"beta_norm", beta_norm},
                        {"ell", ell},
                        {"delta_bar", delta_bar},
                        {"v_delta", v_delta},
                        {"approx_bound", approx_bound},
                        {"L_star", L_star},
                        {"rho", rho},
                        {"rho2", rho2},
                        {"mspe_ols", mspe_ols},
                        {"mspe_ridge", mspe_ridge},
                        {"optimal_b", optimal_b},
                        {"sup_norm_warning", sup_norm_warning}};
}

}  // namespace minhash::bounds
