#include "minhash/mc.hpp"

#include <cmath>

#include "minhash/bounds.hpp"
#include "minhash/rng.hpp"

namespace minhash {

nlohmann::json McRecord::to_json() const {
  return nlohmann::json{{"target", target},   {"params", params},
                        {"estimate", estimate}, {"se", se},
                        {"bound", bound},     {"pass", pass}};
}

void McOptions::validate() const {
  if (R < 1000) throw usage_error("R >= 1000 required for stable SEs");
}

namespace {

constexpr std::int64_t kBlock = 64;

struct Moments {
  Eigen::VectorXd sum;
  Eigen::VectorXd sumsq;
};

// deterministic mean/variance accumulation: per-block partial sums computed
// sequentially, folded in block order
template <class SampleFn>
Moments vector_moments(std::int64_t R, Eigen::Index dim, int threads,
                       SampleFn sample) {
  auto blocks = run_blocks<Moments>(
      R, kBlock, threads, [&](std::int64_t begin, std::int64_t end) {
        Moments m{Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Zero(dim)};
        for (std::int64_t r = begin; r < end; ++r) {
          const Eigen::VectorXd v = sample(r);
          m.sum += v;
          m.sumsq += v.cwiseProduct(v);
        }
        return m;
      });
  Moments total{Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Zero(dim)};
  for (const auto& m : blocks) {
    total.sum += m.sum;
    total.sumsq += m.sumsq;
  }
  return total;
}

Eigen::VectorXd se_of_mean(const Moments& m, std::int64_t R) {
  const double Rd = static_cast<double>(R);
  Eigen::VectorXd var =
      (m.sumsq - m.sum.cwiseProduct(m.sum) / Rd) / (Rd - 1.0);
  return var.cwiseMax(0.0).cwiseSqrt() / std::sqrt(Rd);
}

// worst-component two-sided mean check at 4 SE
McRecord mean_check(const std::string& target_name, const Moments& m,
                    const Eigen::VectorXd& target, std::int64_t R,
                    nlohmann::json params) {
  const Eigen::VectorXd mean = m.sum / static_cast<double>(R);
  const Eigen::VectorXd se = se_of_mean(m, R);
  McRecord rec;
  rec.target = target_name;
  rec.params = std::move(params);
  rec.pass = true;
  double worst_margin = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    const double dev = std::abs(mean[i] - target[i]);
    const double allowance = 4.0 * se[i];
    if (dev > allowance) rec.pass = false;
    if (dev - allowance > worst_margin) {
      worst_margin = dev - allowance;
      rec.estimate = dev;
      rec.se = se[i];
      rec.bound = allowance;
    }
  }
  return rec;
}

// one-sided bound check at 3 SE slack
McRecord bound_check(const std::string& target_name, const Moments& m,
                     double bound, std::int64_t R, nlohmann::json params) {
  const double mean = m.sum[0] / static_cast<double>(R);
  const double se = se_of_mean(m, R)[0];
  McRecord rec;
  rec.target = target_name;
  rec.params = std::move(params);
  rec.estimate = mean;
  rec.se = se;
  rec.bound = bound;
  rec.pass = mean <= bound + 3.0 * se;
  return rec;
}

std::int64_t equal_sparsity_or_throw(const SparseMatrix& X) {
  const SparsityProfile prof = sparsity_profile(X);
  if (!prof.equal_sparsity())
    throw std::invalid_argument(
        "rows have unequal sparsity; pad_equal_sparsity the matrix or use "
        "the scaled oracles");
  if (prof.q_min < 1)
    throw std::invalid_argument("empty rows not allowed here");
  return prof.q_max;
}

nlohmann::json base_params(const SparseMatrix& X, std::int64_t q,
                           std::int64_t L, const McOptions& opt) {
  return nlohmann::json{{"n", X.n_rows}, {"p", X.n_cols}, {"q", q},
                        {"L", L},        {"R", opt.R},    {"seed", opt.seed}};
}

HashEnsemble rep_ensemble(HashVariant variant, int b, std::int64_t L,
                          std::int64_t p, std::uint64_t seed, std::int64_t r) {
  HashConfig cfg;
  cfg.L = L;
  cfg.b = b;
  cfg.variant = variant;
  cfg.mode = PermutationMode::fisher_yates;
  cfg.seed = derive_seed(seed, Stream::mc, static_cast<std::uint64_t>(r));
  return HashEnsemble::build(cfg, p);
}

}  // namespace

McRecord mc_unbiasedness_main(const SparseMatrix& X, const Eigen::VectorXd& beta,
                              HashVariant variant, int b, std::int64_t L,
                              const McOptions& opt) {
  opt.validate();
  const std::int64_t q = equal_sparsity_or_throw(X);
  const WeightVector w = rank_weights_main(X.n_cols, q);
  const Eigen::VectorXd target = X.multiply(beta);

  const Moments m =
      vector_moments(opt.R, X.n_rows, opt.threads, [&](std::int64_t r) {
        const HashEnsemble e =
            rep_ensemble(variant, b, L, X.n_cols, opt.seed, r);
        const Eigen::VectorXd bs = oracle_b_main(beta, e, q, w);
        return Eigen::VectorXd(compress(X, e) * bs);
      });

  auto params = base_params(X, q, L, opt);
  params["variant"] = to_string(variant);
  params["b"] = b;
  return mean_check("unbiasedness/" + std::string(to_string(variant)), m,
                    target, opt.R, std::move(params));
}

McRecord mc_approx_error_main(const SparseMatrix& X, const Eigen::VectorXd& beta,
                              HashVariant variant, int b, std::int64_t L,
                              const McOptions& opt) {
  opt.validate();
  const std::int64_t q = equal_sparsity_or_throw(X);
  const WeightVector w = rank_weights_main(X.n_cols, q);
  const Eigen::VectorXd target = X.multiply(beta);
  const double n = static_cast<double>(X.n_rows);

  const Moments m =
      vector_moments(opt.R, 1, opt.threads, [&](std::int64_t r) {
        const HashEnsemble e =
            rep_ensemble(variant, b, L, X.n_cols, opt.seed, r);
        const Eigen::VectorXd bs = oracle_b_main(beta, e, q, w);
        const double err = (compress(X, e) * bs - target).squaredNorm() / n;
        return Eigen::VectorXd::Constant(1, err);
      });

  double bound;
  if (variant == HashVariant::random_sign) {
    bound = bounds::approx_main_rs(X.n_cols, q, L, beta.squaredNorm());
  } else {
    const Eigen::VectorXd colsq = X.col_sq_norms();
    double col_weighted = 0.0;
    for (std::int64_t k = 0; k < X.n_cols; ++k)
      col_weighted += colsq[k] * beta[k] * beta[k];
    bound = bounds::approx_main_bbit(X.n_cols, q, L, b, beta.squaredNorm(),
                                     col_weighted / n);
  }
  auto params = base_params(X, q, L, opt);
  params["variant"] = to_string(variant);
  params["b"] = b;
  return bound_check("approx_error/" + std::string(to_string(variant)), m,
                     bound, opt.R, std::move(params));
}

McRecord mc_norm_tightness(const SparseMatrix& X, const Eigen::VectorXd& beta,
                           std::int64_t L, const McOptions& opt) {
  opt.validate();
  const std::int64_t q = equal_sparsity_or_throw(X);
  const WeightVector w = rank_weights_main(X.n_cols, q);
  const Moments m =
      vector_moments(opt.R, 1, opt.threads, [&](std::int64_t r) {
        const HashEnsemble e =
            rep_ensemble(HashVariant::random_sign, 1, L, X.n_cols, opt.seed, r);
        const Eigen::VectorXd bs = oracle_b_main(beta, e, q, w);
        return Eigen::VectorXd::Constant(1, bs.squaredNorm());
      });
  const double bound =
      bounds::approx_main_rs(X.n_cols, q, L, beta.squaredNorm());
  const Eigen::VectorXd target = Eigen::VectorXd::Constant(1, bound);
  McRecord rec = mean_check("norm_tightness", m, target, opt.R,
                            base_params(X, q, L, opt));
  rec.bound = bound;
  return rec;
}

McRecord mc_concentration_main(const SparseMatrix& X,
                               const Eigen::VectorXd& beta, std::int64_t L,
                               const McOptions& opt) {
  opt.validate();
  const std::int64_t q = equal_sparsity_or_throw(X);
  const WeightVector w = rank_weights_main(X.n_cols, q);
  const double threshold = (1.0 + opt.eta) *
                           bounds::approx_main_rs(X.n_cols, q, L,
                                                  beta.squaredNorm());
  const Moments m =
      vector_moments(opt.R, 1, opt.threads, [&](std::int64_t r) {
        const HashEnsemble e =
            rep_ensemble(HashVariant::random_sign, 1, L, X.n_cols, opt.seed, r);
        const Eigen::VectorXd bs = oracle_b_main(beta, e, q, w);
        return Eigen::VectorXd::Constant(
            1, bs.squaredNorm() >= threshold ? 1.0 : 0.0);
      });

  const double freq = m.sum[0] / static_cast<double>(opt.R);
  const double se =
      std::sqrt(freq * (1.0 - freq) / static_cast<double>(opt.R));
  McRecord rec;
  rec.target = "concentration/main";
  rec.params = base_params(X, q, L, opt);
  rec.params["eta"] = opt.eta;
  rec.estimate = freq;
  rec.se = se;
  rec.bound = bounds::rho_main(X.n_cols, q, L, opt.eta);
  rec.pass = freq <= rec.bound + 3.0 * se;
  return rec;
}

McRecord mc_unbiasedness_interaction(const SparseMatrix& X,
                                     const InteractionModel& model,
                                     std::int64_t L, const McOptions& opt) {
  opt.validate();
  const std::int64_t q = equal_sparsity_or_throw(X);
  const InteractionWeights iw = interaction_weights(X.n_cols, q);
  const Eigen::VectorXd target = interaction_signal(X, model);

  const Moments m =
      vector_moments(opt.R, X.n_rows, opt.threads, [&](std::int64_t r) {
        const HashEnsemble e = rep_ensemble(HashVariant::random_sign, 1, L,
                                            X.n_cols, opt.seed, r);
        const Eigen::VectorXd bs = oracle_b_interaction(model, e, q, iw);
        return Eigen::VectorXd(compress(X, e) * bs);
      });
  return mean_check("unbiasedness/interaction", m, target, opt.R,
                    base_params(X, q, L, opt));
}

McRecord mc_approx_error_interaction(const SparseMatrix& X,
                                     const InteractionModel& model,
                                     std::int64_t L, const McOptions& opt) {
  opt.validate();
  const std::int64_t q = equal_sparsity_or_throw(X);
  const InteractionWeights iw = interaction_weights(X.n_cols, q);
  const Eigen::VectorXd target = interaction_signal(X, model);
  const double n = static_cast<double>(X.n_rows);

  const Moments m =
      vector_moments(opt.R, 1, opt.threads, [&](std::int64_t r) {
        const HashEnsemble e = rep_ensemble(HashVariant::random_sign, 1, L,
                                            X.n_cols, opt.seed, r);
        const Eigen::VectorXd bs = oracle_b_interaction(model, e, q, iw);
        const double err = (compress(X, e) * bs - target).squaredNorm() / n;
        return Eigen::VectorXd::Constant(1, err);
      });
  const double ell = interaction_norm(model, q);
  const double bound = bounds::approx_interaction(X.n_cols, q, L, ell);
  auto params = base_params(X, q, L, opt);
  params["ell"] = ell;
  return bound_check("approx_error/interaction", m, bound, opt.R,
                     std::move(params));
}

McRecord mc_concentration_interaction(const SparseMatrix& X,
                                      const InteractionModel& model,
                                      std::int64_t L, const McOptions& opt) {
  opt.validate();
  const std::int64_t q = equal_sparsity_or_throw(X);
  const InteractionWeights iw = interaction_weights(X.n_cols, q);
  const double ell = interaction_norm(model, q);
  const double threshold =
      (1.0 + opt.eta) * bounds::approx_interaction(X.n_cols, q, L, ell);

  const Moments m =
      vector_moments(opt.R, 1, opt.threads, [&](std::int64_t r) {
        const HashEnsemble e = rep_ensemble(HashVariant::random_sign, 1, L,
                                            X.n_cols, opt.seed, r);
        const Eigen::VectorXd bs = oracle_b_interaction(model, e, q, iw);
        return Eigen::VectorXd::Constant(
            1, bs.squaredNorm() >= threshold ? 1.0 : 0.0);
      });
  const double freq = m.sum[0] / static_cast<double>(opt.R);
  const double se =
      std::sqrt(freq * (1.0 - freq) / static_cast<double>(opt.R));
  McRecord rec;
  rec.target = "concentration/interaction";
  rec.params = base_params(X, q, L, opt);
  rec.params["eta"] = opt.eta;
  rec.params["ell"] = ell;
  rec.estimate = freq;
  rec.se = se;
  rec.bound = bounds::rho_interaction(X.n_cols, q, L, opt.eta);
  rec.pass = freq <= rec.bound + 3.0 * se;
  return rec;
}

namespace {

struct ScaledSetup {
  SparsityProfile profile;
  Eigen::VectorXd base_signal;  // X beta
};

ScaledSetup scaled_setup(const SparseMatrix& X, const Eigen::VectorXd& beta) {
  ScaledSetup s;
  s.profile = sparsity_profile(X);
  if (s.profile.q_min < 1)
    throw std::invalid_argument("scaled oracles: empty rows break Geo(delta)");
  s.base_signal = X.multiply(beta);
  return s;
}

template <class PerRep>
Moments scaled_moments(const SparseMatrix& X, const Eigen::VectorXd& beta,
                       const WeightVector& w, std::int64_t L,
                       const McOptions& opt, Eigen::Index dim, PerRep value) {
  return vector_moments(opt.R, dim, opt.threads, [&](std::int64_t r) {
    std::vector<FirstHitStream> streams;
    streams.reserve(static_cast<std::size_t>(L));
    for (std::int64_t l = 0; l < L; ++l)
      streams.push_back(first_hit_stream(
          X.n_cols, derive_seed(opt.seed, Stream::first_hit,
                                static_cast<std::uint64_t>(r) *
                                        static_cast<std::uint64_t>(L) +
                                    static_cast<std::uint64_t>(l))));
    const SignMatrix psi = random_signs(
        X.n_cols, L, derive_seed(opt.seed, Stream::mc,
                                 static_cast<std::uint64_t>(r)));
    const ScaledOracle oracle = oracle_b_scaled(X, beta, w, streams, psi);
    return value(oracle);
  });
}

}  // namespace

double taylor_full_error_bound(double a, std::int64_t p, std::int64_t L,
                               double beta_sq_norm) {
  const double r = 1.0 - 1.0 / static_cast<double>(p);
  double coef = 1.0;  // a(a+1)...(a+l-1)/l! at l = 0
  double acc = 0.0;
  double pw = 1.0;
  for (std::int64_t l = 0; l < 10000000; ++l) {
    const double term = coef * coef * pw;
    acc += term;
    if (term < 1e-16 * acc && l > 8) break;
    coef *= (a + static_cast<double>(l)) / static_cast<double>(l + 1);
    pw *= r;
  }
  return static_cast<double>(p) * beta_sq_norm * acc / static_cast<double>(L);
}

McRecord mc_unbiasedness_scaled(const SparseMatrix& X,
                                const Eigen::VectorXd& beta, double a,
                                std::int64_t L, const McOptions& opt) {
  opt.validate();
  const ScaledSetup setup = scaled_setup(X, beta);
  if (setup.profile.q_max >= X.n_cols)
    throw std::invalid_argument(
        "scaled oracle: max delta_i must stay below the convergence radius");
  const WeightVector w = taylor_weights_full(a, X.n_cols);

  Eigen::VectorXd target(X.n_rows);
  for (std::int64_t i = 0; i < X.n_rows; ++i)
    target[i] = std::pow(setup.profile.delta_per_row[i], -a) *
                setup.base_signal[i];

  const Moments m = scaled_moments(
      X, beta, w, L, opt, X.n_rows,
      [&](const ScaledOracle& o) { return Eigen::VectorXd(o.S * o.b_star); });
  auto params = base_params(X, setup.profile.q_min, L, opt);
  params["a"] = a;
  return mean_check("unbiasedness/scaled", m, target, opt.R, std::move(params));
}

McRecord mc_row_error_scaled(const SparseMatrix& X, const Eigen::VectorXd& beta,
                             double a, std::int64_t L, const McOptions& opt) {
  opt.validate();
  const ScaledSetup setup = scaled_setup(X, beta);
  const double delta_min =
      static_cast<double>(setup.profile.q_min) / static_cast<double>(X.n_cols);
  const WeightVector w =
      taylor_weights_truncated(a, X.n_cols, L, delta_min);

  Eigen::VectorXd target(X.n_rows);
  for (std::int64_t i = 0; i < X.n_rows; ++i)
    target[i] = std::pow(delta_min / setup.profile.delta_per_row[i], a) *
                setup.base_signal[i];

  const Moments m =
      scaled_moments(X, beta, w, L, opt, X.n_rows, [&](const ScaledOracle& o) {
        const Eigen::VectorXd d = o.S * o.b_star - target;
        return Eigen::VectorXd(d.cwiseProduct(d));
      });

  const double bound = bounds::approx_scaled(a, L, setup.profile.q_min,
                                             delta_min, beta.squaredNorm());
  const Eigen::VectorXd mean = m.sum / static_cast<double>(opt.R);
  const Eigen::VectorXd se = se_of_mean(m, opt.R);

  McRecord rec;
  rec.target = "row_error/scaled";
  rec.params = base_params(X, setup.profile.q_min, L, opt);
  rec.params["a"] = a;
  rec.params["delta_min"] = delta_min;
  rec.bound = bound;
  rec.pass = true;
  double worst = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    if (mean[i] > bound + 3.0 * se[i]) rec.pass = false;
    if (mean[i] - 3.0 * se[i] > worst) {
      worst = mean[i] - 3.0 * se[i];
      rec.estimate = mean[i];
      rec.se = se[i];
    }
  }
  return rec;
}

McRecord mc_error_unscaled(const SparseMatrix& X, const Eigen::VectorXd& beta,
                           std::int64_t L, const McOptions& opt) {
  opt.validate();
  const ScaledSetup setup = scaled_setup(X, beta);
  const SparsityProfile prof = sparsity_profile(X, &setup.base_signal);
  const double signal_ms =
      setup.base_signal.squaredNorm() / static_cast<double>(X.n_rows);
  const std::int64_t m_level = geometric_truncation_level(
      X.n_cols, L, beta.squaredNorm(), signal_ms, prof.v_delta, prof.delta_bar);
  const WeightVector w = geometric_weights(X.n_cols, prof.delta_bar, m_level);
  const double n = static_cast<double>(X.n_rows);

  const Moments m =
      scaled_moments(X, beta, w, L, opt, 1, [&](const ScaledOracle& o) {
        const double err =
            (o.S * o.b_star - setup.base_signal).squaredNorm() / n;
        return Eigen::VectorXd::Constant(1, err);
      });

  const bounds::UnscaledApprox ua = bounds::approx_unscaled(
      X.n_cols, L, prof.delta_bar, prof.v_delta, beta.squaredNorm(), signal_ms);
  auto params = base_params(X, prof.q_min, L, opt);
  params["m"] = m_level;
  params["v_delta"] = prof.v_delta;
  params["small_L_regime"] = ua.small_L_regime;
  params["regime_threshold"] = ua.regime_threshold;
  return bound_check("approx_error/unscaled", m, ua.bound, opt.R,
                     std::move(params));
}

SparseMatrix mc_binary_instance(std::int64_t n, std::int64_t p, std::int64_t q,
                                std::uint64_t seed) {
  if (q < 1 || q > p) throw std::invalid_argument("mc_binary_instance: q");
  SparseBuilder b;
  std::vector<std::int32_t> pool(static_cast<std::size_t>(p));
  for (std::int64_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, Stream::instance, static_cast<std::uint64_t>(i)));
    std::iota(pool.begin(), pool.end(), 0);
    // partial Fisher-Yates: first q entries are a uniform q-subset
    for (std::int64_t j = 0; j < q; ++j) {
      const auto k = j + static_cast<std::int64_t>(rng.next_below(
                             static_cast<std::uint64_t>(p - j)));
      std::swap(pool[j], pool[k]);
    }
    std::vector<std::int32_t> cols(pool.begin(), pool.begin() + q);
    std::sort(cols.begin(), cols.end());
    b.add_row(std::move(cols), std::vector<double>(static_cast<std::size_t>(q), 1.0));
  }
  return b.build(p);
}

SparseMatrix mc_ragged_instance(std::int64_t n, std::int64_t p,
                                std::int64_t q_lo, std::int64_t q_hi,
                                std::uint64_t seed) {
  if (q_lo < 1 || q_hi < q_lo || q_hi > p)
    throw std::invalid_argument("mc_ragged_instance: bad q range");
  SparseBuilder b;
  std::vector<std::int32_t> pool(static_cast<std::size_t>(p));
  for (std::int64_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, Stream::instance, static_cast<std::uint64_t>(i)));
    const auto q = q_lo + static_cast<std::int64_t>(rng.next_below(
                              static_cast<std::uint64_t>(q_hi - q_lo + 1)));
    std::iota(pool.begin(), pool.end(), 0);
    for (std::int64_t j = 0; j < q; ++j) {
      const auto k = j + static_cast<std::int64_t>(rng.next_below(
                             static_cast<std::uint64_t>(p - j)));
      std::swap(pool[j], pool[k]);
    }
    std::vector<std::int32_t> cols(pool.begin(), pool.begin() + q);
    std::sort(cols.begin(), cols.end());
    b.add_row(std::move(cols), std::vector<double>(static_cast<std::size_t>(q), 1.0));
  }
  return b.build(p);
}

Eigen::VectorXd mc_unit_beta(std::int64_t p, std::uint64_t seed) {
  Rng rng(derive_seed(seed, Stream::coefficients, 0));
  Eigen::VectorXd beta(p);
  for (std::int64_t k = 0; k < p; ++k) beta[k] = rng.next_gaussian();
  return beta / beta.norm();
}

}  // namespace minhash
