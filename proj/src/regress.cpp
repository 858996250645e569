#include "minhash/regress.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <cassert>
#include <cmath>

namespace minhash {

nlohmann::json FitResult::to_json() const {
  nlohmann::json j{{"estimator", estimator},
                   {"alpha", alpha},
                   {"b", std::vector<double>(b.data(), b.data() + b.size())},
                   {"radius", std::isfinite(radius) ? radius : -1.0},
                   {"has_intercept", has_intercept},
                   {"constraint_active", constraint_active},
                   {"iterations", iterations},
                   {"lambda", lambda},
                   {"objective", objective}};
  if (rank >= 0) j["rank"] = rank;
  return j;
}

Eigen::VectorXd predict(const FitResult& fit, const Eigen::MatrixXd& S) {
  Eigen::VectorXd out = S * fit.b;
  if (fit.has_intercept) out.array() += fit.alpha;
  return out;
}

FitResult fit_ols(const Eigen::MatrixXd& S, const Eigen::VectorXd& y) {
  if (S.rows() != y.size())
    throw std::invalid_argument("fit_ols: row count mismatch");
  const double ybar = y.mean();
  const Eigen::RowVectorXd sbar = S.colwise().mean();
  const Eigen::MatrixXd Sc = S.rowwise() - sbar;
  const Eigen::VectorXd yc = y.array() - ybar;

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Sc);
  FitResult fit;
  fit.estimator = "ols";
  fit.b = cod.solve(yc);
  fit.alpha = ybar - sbar.dot(fit.b);
  fit.rank = cod.rank();
  fit.objective = (y - predict(fit, S)).squaredNorm();
  return fit;
}

namespace {

// |b(lambda)|^2 and b(lambda) through the spectral form. With the
// eigendecomposition of G = Sc'Sc (columns side) the coordinates are
// u = V'Sc'yc and b = V diag(1/(d+lambda)) u; with K = Sc Sc' (rows side)
// c = Q'yc and |b|^2 = sum d c^2/(d+lambda)^2.
struct RidgeSpectrum {
  bool gram_side;          // true: eigen of Sc'Sc, false: eigen of Sc Sc'
  Eigen::MatrixXd vecs;
  Eigen::VectorXd vals;    // clamped at 0
  Eigen::VectorXd coords;  // u or c as above

  double sq_norm(double lambda) const {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < vals.size(); ++j) {
      const double den = vals[j] + lambda;
      if (den <= 0.0) continue;
      const double t = coords[j] / den;
      acc += gram_side ? t * t : vals[j] * t * t;
    }
    return acc;
  }

  // pseudo-inverse limit lambda -> 0+ (drops the null space)
  double sq_norm_minimum_lambda() const {
    const double tol = vals.size() ? vals.maxCoeff() * 1e-12 : 0.0;
    double acc = 0.0;
    for (Eigen::Index j = 0; j < vals.size(); ++j) {
      if (vals[j] <= tol) continue;
      const double t = coords[j] / vals[j];
      acc += gram_side ? t * t : vals[j] * t * t;
    }
    return acc;
  }
};

RidgeSpectrum ridge_spectrum(const Eigen::MatrixXd& Sc,
                             const Eigen::VectorXd& yc) {
  RidgeSpectrum sp;
  sp.gram_side = Sc.cols() <= Sc.rows();
  const Eigen::MatrixXd G =
      sp.gram_side ? Eigen::MatrixXd(Sc.transpose() * Sc)
                   : Eigen::MatrixXd(Sc * Sc.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  sp.vecs = es.eigenvectors();
  sp.vals = es.eigenvalues().cwiseMax(0.0);
  sp.coords = sp.gram_side
                  ? Eigen::VectorXd(sp.vecs.transpose() * (Sc.transpose() * yc))
                  : Eigen::VectorXd(sp.vecs.transpose() * yc);
  return sp;
}

Eigen::VectorXd ridge_solution(const RidgeSpectrum& sp,
                               const Eigen::MatrixXd& Sc, double lambda,
                               bool pseudo) {
  Eigen::VectorXd t(sp.vals.size());
  const double tol =
      pseudo && sp.vals.size() ? sp.vals.maxCoeff() * 1e-12 : -1.0;
  for (Eigen::Index j = 0; j < sp.vals.size(); ++j) {
    const double den = sp.vals[j] + lambda;
    t[j] = (pseudo && sp.vals[j] <= tol) || den <= 0.0 ? 0.0
                                                       : sp.coords[j] / den;
  }
  if (sp.gram_side) return sp.vecs * t;
  return Sc.transpose() * (sp.vecs * t);
}

}  // namespace

FitResult fit_ridge_constrained(const Eigen::MatrixXd& S,
                                const Eigen::VectorXd& y, double radius) {
  if (S.rows() != y.size())
    throw std::invalid_argument("fit_ridge_constrained: row count mismatch");
  if (radius < 0.0)
    throw std::invalid_argument("fit_ridge_constrained: radius >= 0");

  FitResult fit;
  fit.estimator = "ridge";
  fit.radius = radius;
  const double ybar = y.mean();

  if (radius == 0.0) {
    fit.b = Eigen::VectorXd::Zero(S.cols());
    fit.alpha = ybar;
    fit.constraint_active = true;
    fit.objective = (y.array() - ybar).matrix().squaredNorm();
    return fit;
  }

  const Eigen::RowVectorXd sbar = S.colwise().mean();
  const Eigen::MatrixXd Sc = S.rowwise() - sbar;
  const Eigen::VectorXd yc = y.array() - ybar;
  const RidgeSpectrum sp = ridge_spectrum(Sc, yc);

  if (sp.sq_norm_minimum_lambda() <= radius * radius) {
    // inactive constraint: minimum-norm least squares
    fit.b = ridge_solution(sp, Sc, 0.0, /*pseudo=*/true);
    fit.alpha = ybar - sbar.dot(fit.b);
    fit.objective = (y - predict(fit, S)).squaredNorm();
    return fit;
  }
  fit.constraint_active = true;

  // bracket then bisect on |b(lambda)| = radius, decreasing in lambda
  const double gnorm = (Sc.transpose() * yc).norm();
  double hi = std::max(gnorm / radius, 1e-300);
  std::int64_t iters = 0;
  while (std::sqrt(sp.sq_norm(hi)) > radius) {
    hi *= 2.0;
    ++iters;
  }
  double lo = hi;
  while (std::sqrt(sp.sq_norm(lo)) < radius && lo > 1e-300) {
    lo /= 2.0;
    ++iters;
  }
  for (; iters < 20000; ++iters) {
    const double mid = 0.5 * (lo + hi);
    const double norm = std::sqrt(sp.sq_norm(mid));
    if (std::abs(norm - radius) <= 1e-8 * radius) {
      lo = hi = mid;
      break;
    }
    (norm > radius ? lo : hi) = mid;
    if (hi - lo <= 1e-16 * hi) break;
  }
  fit.lambda = 0.5 * (lo + hi);
  fit.iterations = iters;
  fit.b = ridge_solution(sp, Sc, fit.lambda, /*pseudo=*/false);
  fit.alpha = ybar - sbar.dot(fit.b);
  fit.objective = (y - predict(fit, S)).squaredNorm();
  return fit;
}

namespace {

double softplus(double u) {
  return u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
}

double sigmoid(double u) {
  return u >= 0.0 ? 1.0 / (1.0 + std::exp(-u))
                  : std::exp(u) / (1.0 + std::exp(u));
}

}  // namespace

double logistic_loss(const Eigen::MatrixXd& S, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& b) {
  const Eigen::VectorXd u = S * b;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i)
    acc += -y[i] * u[i] + softplus(u[i]);
  return acc / static_cast<double>(u.size());
}

FitResult fit_logistic_constrained(const Eigen::MatrixXd& S,
                                   const Eigen::VectorXd& y, double radius,
                                   bool intercept,
                                   const Eigen::VectorXd* b0) {
  const auto n = S.rows();
  if (n != y.size())
    throw std::invalid_argument("fit_logistic_constrained: row mismatch");
  for (Eigen::Index i = 0; i < n; ++i)
    if (y[i] != 0.0 && y[i] != 1.0)
      throw std::invalid_argument("fit_logistic_constrained: labels in {0,1}");
  if (radius < 0.0)
    throw std::invalid_argument("fit_logistic_constrained: radius >= 0");

  // optional unconstrained intercept as an extra coordinate
  Eigen::MatrixXd Z;
  if (intercept) {
    Z.resize(n, S.cols() + 1);
    Z.col(0).setOnes();
    Z.rightCols(S.cols()) = S;
  } else {
    Z = S;
  }
  const Eigen::Index dim = Z.cols();

  auto project = [&](Eigen::VectorXd v) {
    const Eigen::Index off = intercept ? 1 : 0;
    const double norm = v.tail(dim - off).norm();
    if (norm > radius)
      v.tail(dim - off) *= radius == 0.0 ? 0.0 : radius / norm;
    return v;
  };
  auto loss = [&](const Eigen::VectorXd& v) { return logistic_loss(Z, y, v); };

  Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);
  if (b0) {
    if (b0->size() != dim)
      throw std::invalid_argument("fit_logistic_constrained: b0 length");
    b = project(*b0);
  }

  double obj = loss(b);
  double step = 1.0;
  std::int64_t iter = 0;
  const std::int64_t max_iter = 10000;
  const double armijo = 1e-4;

  for (; iter < max_iter; ++iter) {
    Eigen::VectorXd mu(n);
    const Eigen::VectorXd u = Z * b;
    for (Eigen::Index i = 0; i < n; ++i) mu[i] = sigmoid(u[i]) - y[i];
    const Eigen::VectorXd grad = Z.transpose() * mu / static_cast<double>(n);

    double t = step * 2.0;  // allow the step to grow back
    Eigen::VectorXd cand;
    double cand_obj = obj;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      cand = project(b - t * grad);
      cand_obj = loss(cand);
      if (cand_obj <= obj + armijo * grad.dot(cand - b)) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
    assert(cand_obj <= obj + 1e-12);  // accepted steps never increase the loss
    step = t;
    const double decrease = obj - cand_obj;
    b = cand;
    obj = cand_obj;
    if (decrease < 1e-10) break;
  }

  FitResult fit;
  fit.estimator = "logistic";
  fit.radius = radius;
  fit.has_intercept = intercept;
  fit.iterations = iter;
  fit.objective = obj;
  if (intercept) {
    fit.alpha = b[0];
    fit.b = b.tail(dim - 1);
  } else {
    fit.b = b;
  }
  fit.constraint_active = fit.b.norm() >= radius * (1.0 - 1e-10);
  return fit;
}

double mspe(const Eigen::VectorXd& prediction, const Eigen::VectorXd& f_star) {
  if (prediction.size() != f_star.size())
    throw std::invalid_argument("mspe: length mismatch");
  return (f_star - prediction).squaredNorm() /
         static_cast<double>(f_star.size());
}

double excess_risk_logistic(const Eigen::VectorXd& b_hat,
                            const Eigen::MatrixXd& S,
                            const Eigen::VectorXd& f_star_linpred,
                            const Eigen::VectorXd& p_vec) {
  const auto n = S.rows();
  if (f_star_linpred.size() != n || p_vec.size() != n)
    throw std::invalid_argument("excess_risk_logistic: length mismatch");
  for (Eigen::Index i = 0; i < n; ++i)
    if (p_vec[i] <= 0.0 || p_vec[i] >= 1.0)
      throw std::invalid_argument(
          "excess_risk_logistic: probabilities must lie in (0,1)");
  const Eigen::VectorXd u = S * b_hat;
  double risk_hat = 0.0, risk_star = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    risk_hat += -p_vec[i] * u[i] + softplus(u[i]);
    risk_star += -p_vec[i] * f_star_linpred[i] + softplus(f_star_linpred[i]);
  }
  return (risk_hat - risk_star) / static_cast<double>(n);
}

Eigen::VectorXd aggregate_predict(const SparseMatrix& X, HashConfig config,
                                  std::int64_t B, const FitProc& fit,
                                  const std::vector<std::uint64_t>& seeds,
                                  int threads) {
  if (B < 1) throw std::invalid_argument("aggregate_predict: B >= 1");
  if (seeds.size() != static_cast<std::size_t>(B))
    throw std::invalid_argument("aggregate_predict: need one seed per replicate");

  std::vector<Eigen::VectorXd> preds(static_cast<std::size_t>(B));
  auto one = [&](std::int64_t r) {
    HashConfig c = config;
    c.seed = seeds[static_cast<std::size_t>(r)];
    const HashEnsemble e = HashEnsemble::build(c, X.n_cols);
    const Eigen::MatrixXd S = compress(X, e);
    preds[static_cast<std::size_t>(r)] = predict(fit(S), S);
  };
  if (threads <= 1) {
    for (std::int64_t r = 0; r < B; ++r) one(r);
  } else {
    run_blocks<int>(B, 1, threads, [&](std::int64_t begin, std::int64_t end) {
      for (std::int64_t r = begin; r < end; ++r) one(r);
      return 0;
    });
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(X.n_rows);
  for (const auto& v : preds) out += v;  // fixed fold order
  return out / static_cast<double>(B);
}

ImportanceResult variable_importance(const FitResult& fit, const MatrixXi64& H,
                                     const Eigen::MatrixXd& S,
                                     const Eigen::MatrixXd& S2,
                                     std::int64_t k) {
  if (H.rows() != S.rows() || H.cols() != S.cols() || S2.rows() != S.rows() ||
      S2.cols() != S.cols())
    throw std::invalid_argument("variable_importance: shape mismatch");
  if (fit.b.size() != S.cols())
    throw std::invalid_argument("variable_importance: coefficient length");
  ImportanceResult res;
  res.diff = Eigen::VectorXd::Zero(S.rows());
  for (Eigen::Index i = 0; i < S.rows(); ++i) {
    double acc = 0.0;
    for (Eigen::Index l = 0; l < S.cols(); ++l)
      if (H(i, l) == k) acc += (S(i, l) - S2(i, l)) * fit.b[l];
    res.diff[i] = acc;
  }
  res.norm = res.diff.norm();
  return res;
}

std::vector<double> importance_norms(const FitResult& fit, const MatrixXi64& H,
                                     const Eigen::MatrixXd& S,
                                     const Eigen::MatrixXd& S2,
                                     std::int64_t p) {
  std::vector<double> sq(static_cast<std::size_t>(p), 0.0);
  std::vector<double> row_acc(static_cast<std::size_t>(p), 0.0);
  std::vector<std::int64_t> touched;
  for (Eigen::Index i = 0; i < S.rows(); ++i) {
    touched.clear();
    for (Eigen::Index l = 0; l < S.cols(); ++l) {
      const std::int64_t k = H(i, l);
      if (k < 0) continue;
      if (row_acc[k] == 0.0) touched.push_back(k);
      row_acc[k] += (S(i, l) - S2(i, l)) * fit.b[l];
    }
    for (const auto k : touched) {
      sq[k] += row_acc[k] * row_acc[k];
      row_acc[k] = 0.0;
    }
  }
  for (auto& v : sq) v = std::sqrt(v);
  return sq;
}

double kkt_residual(const Eigen::MatrixXd& S, const Eigen::VectorXd& y,
                    const FitResult& fit) {
  const Eigen::RowVectorXd sbar = S.colwise().mean();
  const Eigen::MatrixXd Sc = S.rowwise() - sbar;
  const Eigen::VectorXd yc = y.array() - y.mean();
  const Eigen::VectorXd lhs = Sc.transpose() * (yc - Sc * fit.b);
  const Eigen::VectorXd rhs = fit.lambda * fit.b;
  const double scale = std::max(1.0, lhs.norm());
  return (lhs - rhs).norm() / scale;
}

}  // namespace minhash
