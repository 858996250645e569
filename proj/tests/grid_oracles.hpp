#pragma once

// Independent grid-search oracles for the constrained solvers: a two-stage
// spherical grid for the ridge constraint sphere and a two-stage polar grid
// for the logistic disc.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "minhash/regress.hpp"

namespace testutil {

inline double ridge_objective(const Eigen::MatrixXd& S,
                              const Eigen::VectorXd& y, double alpha,
                              const Eigen::VectorXd& b) {
  return (y - Eigen::VectorXd::Constant(y.size(), alpha) - S * b).squaredNorm();
}

// minimum of |y - alpha 1 - S b|^2 over |b| = radius in R^3, intercept
// profiled out exactly
inline double sphere_grid_oracle(const Eigen::MatrixXd& S,
                                 const Eigen::VectorXd& y, double radius) {
  auto eval = [&](double theta, double phi) {
    Eigen::VectorXd b(3);
    b << radius * std::sin(theta) * std::cos(phi),
        radius * std::sin(theta) * std::sin(phi), radius * std::cos(theta);
    const double alpha = (y - S * b).mean();
    return ridge_objective(S, y, alpha, b);
  };
  double best = 1e300, best_t = 0.0, best_p = 0.0;
  const int N1 = 200;
  for (int it = 0; it <= N1; ++it)
    for (int ip = 0; ip < 2 * N1; ++ip) {
      const double t = M_PI * it / N1;
      const double ph = M_PI * ip / N1;
      const double v = eval(t, ph);
      if (v < best) {
        best = v;
        best_t = t;
        best_p = ph;
      }
    }
  const double h = M_PI / N1;
  for (int it = -60; it <= 60; ++it)
    for (int ip = -60; ip <= 60; ++ip)
      best = std::min(best,
                      eval(best_t + it * h / 50.0, best_p + ip * h / 50.0));
  return best;
}

// minimum logistic loss over |b| <= radius in R^2
inline double disc_grid_oracle(const Eigen::MatrixXd& S,
                               const Eigen::VectorXd& y, double radius) {
  auto eval = [&](double r, double phi) {
    Eigen::VectorXd b(2);
    b << r * std::cos(phi), r * std::sin(phi);
    return minhash::logistic_loss(S, y, b);
  };
  double best = 1e300, best_r = 0.0, best_p = 0.0;
  const int NR = 160, NP = 640;
  for (int ir = 0; ir <= NR; ++ir)
    for (int ip = 0; ip < NP; ++ip) {
      const double r = radius * ir / NR;
      const double ph = 2.0 * M_PI * ip / NP;
      const double v = eval(r, ph);
      if (v < best) {
        best = v;
        best_r = r;
        best_p = ph;
      }
    }
  for (int ir = -80; ir <= 80; ++ir)
    for (int ip = -80; ip <= 80; ++ip) {
      const double r =
          std::clamp(best_r + radius * ir / (NR * 60.0), 0.0, radius);
      best = std::min(best, eval(r, best_p + 2.0 * M_PI * ip / (NP * 60.0)));
    }
  return best;
}

}  // namespace testutil
