#include "minhash/oracle.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>

namespace minhash {

std::vector<double> min_rank_pmf(std::int64_t p, std::int64_t q) {
  if (q < 1 || q > p)
    throw std::invalid_argument("min_rank_pmf: need 1 <= q <= p");
  std::vector<double> pmf(static_cast<std::size_t>(p), 0.0);
  double cur = static_cast<double>(q) / static_cast<double>(p);
  const std::int64_t last = p - q + 1;
  for (std::int64_t l = 1; l <= last; ++l) {
    pmf[l - 1] = cur;
    if (l < last)
      cur *= static_cast<double>(p - l - q + 1) / static_cast<double>(p - l);
  }
  assert(std::abs(std::accumulate(pmf.begin(), pmf.end(), 0.0) - 1.0) < 1e-12);
  return pmf;
}

WeightVector rank_weights_main(std::int64_t p, std::int64_t q) {
  const auto pmf = min_rank_pmf(p, q);
  double denom = 0.0;
  for (const double v : pmf) denom += v * v;
  WeightVector w;
  w.kind = WeightVector::Kind::main_effects;
  w.w.resize(pmf.size());
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    w.w[i] = pmf[i] / denom;
    w.sq_norm += w.w[i] * w.w[i];
  }
  return w;
}

WeightVector taylor_weights_full(double a, std::int64_t p,
                                 std::int64_t max_rank) {
  if (a < 0.0 || a > 1.0)
    throw std::invalid_argument("scaling exponent a must lie in [0, 1]");
  if (p < 2)
    throw std::invalid_argument(
        "Taylor weights: 1/sqrt(p) must be below the convergence radius (p "
        ">= 2)");
  if (max_rank <= 0)
    max_rank = 64 + static_cast<std::int64_t>(
                        64.0 * static_cast<double>(p) *
                        std::log(static_cast<double>(std::max<std::int64_t>(p, 2))));
  WeightVector w;
  w.kind = WeightVector::Kind::taylor_full;
  w.a = a;
  w.w.resize(static_cast<std::size_t>(max_rank));
  // |kappa^(l)(1)/l!| = a(a+1)...(a+l-1)/l!; signs cancel so weights are >= 0
  double coef = 1.0;
  for (std::int64_t l = 1; l <= max_rank; ++l) {
    w.w[l - 1] = static_cast<double>(p) * coef;
    w.sq_norm += w.w[l - 1] * w.w[l - 1];
    coef *= (a + static_cast<double>(l) - 1.0) / static_cast<double>(l);
  }
  return w;
}

WeightVector taylor_weights_truncated(double a, std::int64_t p, std::int64_t L,
                                      double delta_min) {
  if (a < 0.5 || a > 1.0)
    throw std::invalid_argument("scaling exponent a must lie in [1/2, 1]");
  if (L < 10)
    throw std::invalid_argument("truncated Taylor weights need L >= 10");
  if (a == 0.5 && delta_min > 0.5)
    throw std::invalid_argument("a = 1/2 needs delta_min <= 1/2");
  if (a > 0.5 && static_cast<double>(L) <= 2.0 / (2.0 * a - 1.0))
    throw std::invalid_argument("a > 1/2 needs L > 2/(2a-1)");
  if (delta_min <= 0.0)
    throw std::invalid_argument("delta_min must be positive");

  const double m =
      a == 0.5 ? std::log(static_cast<double>(L)) / (2.0 * delta_min)
               : std::log(2.0 * (2.0 * a - 1.0) * static_cast<double>(L)) /
                     (2.0 * delta_min);
  const auto m_floor = static_cast<std::int64_t>(std::floor(m));
  const auto m_ceil = static_cast<std::int64_t>(std::ceil(m));

  WeightVector w;
  w.kind = WeightVector::Kind::taylor_truncated;
  w.a = a;
  w.m = m;
  w.w.resize(static_cast<std::size_t>(m_ceil) + 1, 0.0);
  const double scale = static_cast<double>(p) * std::pow(delta_min, a);
  double coef = 1.0;  // a(a+1)...(a+l-1)/l! at l = 0
  for (std::int64_t l = 0; l <= m_ceil; ++l) {
    double gate = 0.0;
    if (l <= m_floor)
      gate = 1.0;
    else if (l == m_ceil)
      gate = m - static_cast<double>(m_floor);
    w.w[l] = scale * coef * gate;
    w.sq_norm += w.w[l] * w.w[l];
    coef *= (a + static_cast<double>(l)) / static_cast<double>(l + 1);
    assert(l < 2 || coef <= a * std::exp(a) *
                                std::pow(static_cast<double>(l + 1), a - 1.0) +
                            1e-12);
  }
  return w;
}

WeightVector geometric_weights(std::int64_t p, double delta_bar,
                               std::int64_t m) {
  if (m < 1) throw std::invalid_argument("geometric weights: m >= 1");
  if (delta_bar <= 0.0 || delta_bar > 1.0)
    throw std::invalid_argument("geometric weights: delta_bar in (0, 1]");
  WeightVector w;
  w.kind = WeightVector::Kind::geometric;
  w.m = static_cast<double>(m);
  const double r = 1.0 - delta_bar;
  const double norm = delta_bar * (2.0 - delta_bar) /
                      (1.0 - std::pow(r, 2.0 * static_cast<double>(m)));
  w.w.resize(static_cast<std::size_t>(m));
  double pw = 1.0;
  for (std::int64_t l = 1; l <= m; ++l) {
    w.w[l - 1] = static_cast<double>(p) * pw * norm;
    w.sq_norm += w.w[l - 1] * w.w[l - 1];
    pw *= r;
  }
  return w;
}

std::int64_t geometric_truncation_level(std::int64_t p, std::int64_t L,
                                        double beta_sq_norm, double signal_ms,
                                        double v_delta, double delta_bar) {
  const double cap = 1.0 / (2.0 * delta_bar);
  double m;
  if (v_delta <= 0.0 || signal_ms <= 0.0) {
    m = cap;  // degenerate spread forces the 1/(2 delta_bar) branch
  } else {
    const double cand =
        std::cbrt(static_cast<double>(p) * beta_sq_norm /
                  (static_cast<double>(L) * signal_ms * v_delta));
    m = std::min(cand, cap);
  }
  return std::max<std::int64_t>(1, std::llround(m));
}

Eigen::VectorXd oracle_b_main(const Eigen::VectorXd& beta,
                              const HashEnsemble& e, std::int64_t q,
                              const WeightVector& w) {
  const std::int64_t p = e.p();
  if (beta.size() != p)
    throw std::invalid_argument("oracle_b_main: beta length != p");
  if (!e.has_ranks())
    throw incompat_error("oracle_b_main: ensemble without materialized ranks");
  const auto& cfg = e.config();
  if (cfg.variant == HashVariant::bbit_plain)
    throw incompat_error(
        "oracle_b_main: plain residue maps have value-dependent collisions; "
        "use the shuffled b-bit or random-sign variant");

  const std::int64_t L = cfg.L;
  const double qL = static_cast<double>(q) / static_cast<double>(L);

  if (cfg.variant == HashVariant::random_sign) {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(L);
    for (std::int64_t l = 0; l < L; ++l) {
      double acc = 0.0;
      for (std::int64_t k = 0; k < p; ++k) {
        if (beta[k] == 0.0) continue;
        acc += beta[k] * e.sign(l, k) * w.at(e.rank(l, k));
      }
      b[l] = qL * acc;
    }
    return b;
  }

  // shuffled b-bit: centered one-hot indicators with nu = 2^-b
  const std::int64_t C = std::int64_t(1) << cfg.b;
  const double nu = 1.0 / static_cast<double>(C);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(C * L);
  for (std::int64_t l = 0; l < L; ++l) {
    double total = 0.0;
    std::vector<double> per_col(static_cast<std::size_t>(C), 0.0);
    for (std::int64_t k = 0; k < p; ++k) {
      if (beta[k] == 0.0) continue;
      const std::uint32_t rank = e.rank(l, k);
      const double bw = beta[k] * w.at(rank);
      per_col[e.shuffle(l, rank)] += bw;
      total += bw;
    }
    for (std::int64_t c = 0; c < C; ++c)
      b[l * C + c] = qL * (per_col[c] - nu * total) / (1.0 - nu);
  }
  return b;
}

FirstHitStream first_hit_stream(std::int64_t p, std::uint64_t seed,
                                bool want_ranks) {
  if (p < 1) throw std::invalid_argument("first_hit_stream: p >= 1");
  FirstHitStream s;
  s.g.assign(static_cast<std::size_t>(p), 0);
  Rng rng(seed);
  const auto cap = static_cast<std::int64_t>(
      64.0 * static_cast<double>(p) *
          std::log(static_cast<double>(std::max<std::int64_t>(p, 2))) +
      64.0);
  std::int64_t found = 0;
  for (std::int64_t t = 1; t <= cap && found < p; ++t) {
    const auto u = static_cast<std::size_t>(
        rng.next_below(static_cast<std::uint64_t>(p)));
    if (s.g[u] == 0) {
      s.g[u] = t;
      ++found;
    }
  }
  if (found < p) throw std::runtime_error("first-hit stream cap exceeded");

  if (want_ranks) {
    std::vector<std::uint32_t> order(static_cast<std::size_t>(p));
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
      return s.g[a] < s.g[b];
    });
    s.rank.resize(static_cast<std::size_t>(p));
    for (std::int64_t r = 0; r < p; ++r)
      s.rank[order[r]] = static_cast<std::uint32_t>(r + 1);
  }
  return s;
}

SignMatrix random_signs(std::int64_t p, std::int64_t L, std::uint64_t seed) {
  SignMatrix psi(p, L);
  for (std::int64_t l = 0; l < L; ++l) {
    Rng rng(derive_seed(seed, Stream::signs, static_cast<std::uint64_t>(l)));
    for (std::int64_t k = 0; k < p; ++k)
      psi(k, l) = (rng.next_u64() & 1) ? 1 : -1;
  }
  return psi;
}

ScaledOracle oracle_b_scaled(const SparseMatrix& X, const Eigen::VectorXd& beta,
                             const WeightVector& w,
                             const std::vector<FirstHitStream>& streams,
                             const SignMatrix& signs) {
  const std::int64_t p = X.n_cols;
  const auto L = static_cast<std::int64_t>(streams.size());
  if (beta.size() != p)
    throw std::invalid_argument("oracle_b_scaled: beta length != p");
  if (signs.rows() != p || signs.cols() != L)
    throw std::invalid_argument("oracle_b_scaled: signs shape");

  ScaledOracle out;
  out.b_star = Eigen::VectorXd::Zero(L);
  out.S = Eigen::MatrixXd::Zero(X.n_rows, L);
  for (std::int64_t l = 0; l < L; ++l) {
    const auto& g = streams[l].g;
    if (static_cast<std::int64_t>(g.size()) != p)
      throw std::invalid_argument("oracle_b_scaled: stream built for other p");
    double acc = 0.0;
    for (std::int64_t k = 0; k < p; ++k) {
      if (beta[k] == 0.0) continue;
      acc += beta[k] * static_cast<double>(signs(k, l)) * w.at(g[k]);
    }
    out.b_star[l] = acc / static_cast<double>(L);

    for (std::int64_t i = 0; i < X.n_rows; ++i) {
      const auto cols = X.row_cols(i);
      if (cols.empty()) continue;
      std::int64_t arg = -1;
      std::int64_t best = 0;
      for (const auto k : cols) {
        if (arg < 0 || g[k] < best) {
          best = g[k];
          arg = k;
        }
      }
      const auto vals = X.row_vals(i);
      const auto it = std::lower_bound(cols.begin(), cols.end(),
                                       static_cast<std::int32_t>(arg));
      out.S(i, l) =
          static_cast<double>(signs(arg, l)) * vals[it - cols.begin()];
    }
  }
  return out;
}

void InteractionModel::validate() const {
  if (theta1.size() != p)
    throw std::invalid_argument("interaction model: theta1 length != p");
  for (const auto& t : theta2) {
    if (t.k < 0 || t.k >= p || t.k1 < 0 || t.k1 >= p)
      throw std::invalid_argument("interaction model: index out of range");
    if (t.k == t.k1)
      throw std::invalid_argument(
          "interaction model: diagonal of Theta must be zero");
  }
}

Eigen::VectorXd interaction_signal(const SparseMatrix& X,
                                   const InteractionModel& model) {
  model.validate();
  if (X.n_cols != model.p)
    throw std::invalid_argument("interaction_signal: dimension mismatch");
  Eigen::VectorXd f = X.multiply(model.theta1);
  for (const auto& t : model.theta2) {
    for (std::int64_t i = 0; i < X.n_rows; ++i) {
      if (X.at(i, t.k1) != 0.0) continue;
      const double x = X.at(i, t.k);
      if (x != 0.0) f[i] += x * t.value;
    }
  }
  return f;
}

double interaction_norm(const InteractionModel& model, std::int64_t q) {
  model.validate();
  // inner triple sum collapses to sum_k (sum_k1 |Theta_k,k1|)^2
  std::vector<double> row_abs(static_cast<std::size_t>(model.p), 0.0);
  for (const auto& t : model.theta2) row_abs[t.k] += std::abs(t.value);
  double sum_sq = 0.0;
  for (const double r : row_abs) sum_sq += r * r;
  const double delta =
      static_cast<double>(q) / static_cast<double>(model.p);
  return model.theta1.norm() +
         std::sqrt(2.0 * (2.0 - delta) * static_cast<double>(q) * sum_sq);
}

InteractionWeights interaction_weights(std::int64_t p, std::int64_t q) {
  if (p < 3) throw std::invalid_argument("interaction weights: p >= 3");
  if (q < 1 || q > p - 1)
    throw std::invalid_argument(
        "interaction weights: need q <= p-1 (an inactive index must exist)");

  // r_l = C(p-l, q-1)/C(p-1, q); r_1 = q/(p-q), same ratio recurrence as the
  // rank pmf, zero beyond l = p-q+1
  std::vector<double> r(static_cast<std::size_t>(p), 0.0);
  double cur = static_cast<double>(q) / static_cast<double>(p - q);
  const std::int64_t last = p - q + 1;
  for (std::int64_t l = 1; l <= last; ++l) {
    r[l - 1] = cur;
    if (l < last)
      cur *= static_cast<double>(p - l - q + 1) / static_cast<double>(p - l);
  }
  double denom = 0.0;
  for (std::int64_t l = 2; l <= p; ++l)
    denom += static_cast<double>(l - 1) * r[l - 1] * r[l - 1];

  InteractionWeights iw;
  iw.w1 = rank_weights_main(p, q);
  iw.w2.assign(static_cast<std::size_t>(p), 0.0);
  for (std::int64_t l = 2; l <= p; ++l) iw.w2[l - 1] = r[l - 1] / denom;
  return iw;
}

Eigen::VectorXd oracle_b_interaction(const InteractionModel& model,
                                     const HashEnsemble& e, std::int64_t q,
                                     const InteractionWeights& iw) {
  model.validate();
  if (e.p() != model.p)
    throw std::invalid_argument("oracle_b_interaction: dimension mismatch");
  if (!e.has_ranks())
    throw incompat_error("oracle_b_interaction: ensemble without ranks");
  if (e.config().variant != HashVariant::random_sign)
    throw incompat_error("oracle_b_interaction: random-sign ensembles only");

  const std::int64_t p = model.p;
  const std::int64_t L = e.L();
  const double pq_L = static_cast<double>(p) * static_cast<double>(q) /
                      static_cast<double>(L);
  const double q_L = static_cast<double>(q) / static_cast<double>(L);

  Eigen::VectorXd b = Eigen::VectorXd::Zero(L);
  for (std::int64_t l = 0; l < L; ++l) {
    double acc = 0.0;
    for (std::int64_t k = 0; k < p; ++k) {
      if (model.theta1[k] == 0.0) continue;
      acc += q_L * model.theta1[k] * e.sign(l, k) * iw.w1.at(e.rank(l, k));
    }
    for (const auto& t : model.theta2) {
      const std::uint32_t rk = e.rank(l, t.k);
      if (e.rank(l, t.k1) < rk)
        acc += pq_L * e.sign(l, t.k) * t.value * iw.w2[rk - 1];
    }
    b[l] = acc;
  }
  return b;
}

}  // namespace minhash
