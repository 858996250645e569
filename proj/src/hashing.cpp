#include "minhash/hashing.hpp"

#include <algorithm>
#include <iostream>
#include <numeric>

namespace minhash {

const char* to_string(HashVariant v) {
  switch (v) {
    case HashVariant::bbit_plain:
      return "bbit";
    case HashVariant::bbit_shuffled:
      return "bbit-shuffled";
    case HashVariant::random_sign:
      return "random-sign";
  }
  return "?";
}

const char* to_string(PermutationMode m) {
  return m == PermutationMode::fisher_yates ? "fisher-yates" : "hashed-scores";
}

void HashConfig::validate() const {
  if (L < 1) throw usage_error("L >= 1 required");
  if (b < 1 || b > 16) throw usage_error("1 <= b <= 16 required");
}

namespace {

bool uses_bbit(const HashConfig& c) {
  return c.variant == HashVariant::bbit_plain ||
         c.variant == HashVariant::bbit_shuffled;
}

std::vector<std::uint32_t> random_rank_array(std::int64_t p, std::uint64_t seed) {
  // Fisher-Yates order, then invert so perm[k] is the 1-based rank of k
  std::vector<std::uint32_t> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), 0u);
  Rng rng(seed);
  for (std::int64_t i = p - 1; i > 0; --i) {
    const auto j = static_cast<std::int64_t>(
        rng.next_below(static_cast<std::uint64_t>(i + 1)));
    std::swap(order[i], order[j]);
  }
  std::vector<std::uint32_t> rank(static_cast<std::size_t>(p));
  for (std::int64_t r = 0; r < p; ++r)
    rank[order[r]] = static_cast<std::uint32_t>(r + 1);
  return rank;
}

void check_rank_array(const std::vector<std::uint32_t>& perm, std::int64_t p) {
  if (perm.size() != static_cast<std::size_t>(p))
    throw std::invalid_argument("injected permutation: wrong length");
  std::vector<bool> seen(static_cast<std::size_t>(p), false);
  for (const auto r : perm) {
    if (r < 1 || r > p || seen[r - 1])
      throw std::invalid_argument("injected permutation: not a bijection");
    seen[r - 1] = true;
  }
}

}  // namespace

HashEnsemble HashEnsemble::build(const HashConfig& config, std::int64_t p) {
  config.validate();
  if (p < 1) throw std::invalid_argument("build_ensemble: p >= 1");
  if (uses_bbit(config) && (std::int64_t(1) << config.b) > p)
    std::cerr << "warning: 2^b > p; shuffle map remains valid but blocks are "
                 "wider than the rank range\n";

  HashEnsemble e;
  e.config_ = config;
  e.p_ = p;
  e.perm_seeds_.resize(static_cast<std::size_t>(config.L));
  e.sign_seeds_.resize(static_cast<std::size_t>(config.L));
  for (std::int64_t l = 0; l < config.L; ++l) {
    e.perm_seeds_[l] = derive_seed(config.seed, Stream::permutation,
                                   static_cast<std::uint64_t>(l));
    e.sign_seeds_[l] =
        derive_seed(config.seed, Stream::signs, static_cast<std::uint64_t>(l));
  }

  const bool want_ranks = config.mode == PermutationMode::fisher_yates ||
                          config.materialize_ranks;
  if (want_ranks) {
    e.perms_.resize(static_cast<std::size_t>(config.L));
    for (std::int64_t l = 0; l < config.L; ++l) {
      if (config.mode == PermutationMode::fisher_yates) {
        e.perms_[l] = random_rank_array(p, e.perm_seeds_[l]);
      } else {
        // rank materialization: sort keyed scores, ties to the smaller column
        std::vector<std::uint32_t> cols(static_cast<std::size_t>(p));
        std::iota(cols.begin(), cols.end(), 0u);
        std::stable_sort(cols.begin(), cols.end(),
                         [&](std::uint32_t a, std::uint32_t b) {
                           return e.score(l, a) < e.score(l, b);
                         });
        e.perms_[l].resize(static_cast<std::size_t>(p));
        for (std::int64_t r = 0; r < p; ++r)
          e.perms_[l][cols[r]] = static_cast<std::uint32_t>(r + 1);
      }
    }
  }

  if (config.mode == PermutationMode::fisher_yates) {
    e.signs_.resize(static_cast<std::size_t>(config.L));
    for (std::int64_t l = 0; l < config.L; ++l) {
      Rng rng(e.sign_seeds_[l]);
      e.signs_[l].resize(static_cast<std::size_t>(p));
      for (std::int64_t k = 0; k < p; ++k)
        e.signs_[l][k] = (rng.next_u64() & 1) ? 1 : -1;
    }
  }

  if (config.variant == HashVariant::bbit_shuffled) {
    const auto width = static_cast<std::uint64_t>(1) << config.b;
    e.shuffles_.resize(static_cast<std::size_t>(config.L));
    for (std::int64_t l = 0; l < config.L; ++l) {
      Rng rng(derive_seed(config.seed, Stream::shuffle,
                          static_cast<std::uint64_t>(l)));
      e.shuffles_[l].resize(static_cast<std::size_t>(p));
      for (std::int64_t m = 0; m < p; ++m)
        e.shuffles_[l][m] = static_cast<std::uint16_t>(rng.next_below(width));
    }
  }
  return e;
}

HashEnsemble HashEnsemble::inject(
    const HashConfig& config, std::int64_t p,
    std::vector<std::vector<std::uint32_t>> perms,
    std::vector<std::vector<std::int8_t>> signs,
    std::vector<std::vector<std::uint16_t>> shuffles) {
  HashEnsemble e = build(config, p);
  if (!perms.empty()) {
    if (perms.size() != static_cast<std::size_t>(config.L))
      throw std::invalid_argument("inject: need one permutation per block");
    for (const auto& perm : perms) check_rank_array(perm, p);
    e.perms_ = std::move(perms);
  }
  if (!signs.empty()) {
    if (signs.size() != static_cast<std::size_t>(config.L))
      throw std::invalid_argument("inject: need one sign column per block");
    for (const auto& col : signs) {
      if (col.size() != static_cast<std::size_t>(p))
        throw std::invalid_argument("inject: sign column length");
      for (const auto s : col)
        if (s != 1 && s != -1)
          throw std::invalid_argument("inject: signs must be +-1");
    }
    e.signs_ = std::move(signs);
  }
  if (!shuffles.empty()) {
    if (shuffles.size() != static_cast<std::size_t>(config.L))
      throw std::invalid_argument("inject: need one shuffle map per block");
    const auto width = static_cast<std::uint64_t>(1) << config.b;
    for (const auto& map : shuffles) {
      if (map.size() != static_cast<std::size_t>(p))
        throw std::invalid_argument("inject: shuffle map length");
      for (const auto v : map)
        if (v >= width)
          throw std::invalid_argument("inject: shuffle value out of range");
    }
    e.shuffles_ = std::move(shuffles);
  }
  return e;
}

HashOutput min_hash(const SparseMatrix& X, const HashEnsemble& e) {
  if (X.n_cols != e.p())
    throw std::invalid_argument("min_hash: ensemble built for different p");
  const std::int64_t n = X.n_rows;
  const std::int64_t L = e.L();
  HashOutput out;
  out.has_ranks = e.has_ranks();
  out.H.setConstant(n, L, -1);
  if (out.has_ranks) {
    out.M.setZero(n, L);
  } else {
    out.scores.setZero(n, L);
  }

  for (std::int64_t l = 0; l < L; ++l) {
    for (std::int64_t i = 0; i < n; ++i) {
      const auto cols = X.row_cols(i);
      if (cols.empty()) continue;
      if (out.has_ranks) {
        std::uint32_t best = 0;
        std::int64_t arg = -1;
        for (const auto k : cols) {
          const std::uint32_t r = e.rank(l, k);
          if (arg < 0 || r < best) {
            best = r;
            arg = k;
          }
        }
        out.H(i, l) = arg;
        out.M(i, l) = best;
      } else {
        std::uint64_t best = 0;
        std::int64_t arg = -1;
        for (const auto k : cols) {
          const std::uint64_t s = e.score(l, k);
          if (arg < 0 || s < best) {  // ties go to the smaller column index
            best = s;
            arg = k;
          }
        }
        out.H(i, l) = arg;
        out.scores(i, l) = best;
      }
    }
  }
  return out;
}

Eigen::MatrixXd expand_bbit(const HashOutput& out, const HashEnsemble& e) {
  const auto& cfg = e.config();
  if (cfg.variant == HashVariant::random_sign)
    throw incompat_error("expand_bbit: ensemble is random-sign");
  if (!out.has_ranks)
    throw incompat_error(
        "b-bit expansion needs permuted ranks; hashed-score mode stores raw "
        "scores (set materialize_ranks)");
  const std::int64_t n = out.rows();
  const std::int64_t L = out.L();
  const std::int64_t C = std::int64_t(1) << cfg.b;
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, C * L);
  for (std::int64_t l = 0; l < L; ++l) {
    for (std::int64_t i = 0; i < n; ++i) {
      if (out.H(i, l) < 0) continue;  // empty row: all-zero block
      const std::int64_t m = out.M(i, l);
      const std::int64_t c = cfg.variant == HashVariant::bbit_shuffled
                                 ? e.shuffle(l, m)
                                 : m % C;
      S(i, l * C + c) = 1.0;
    }
  }
  return S;
}

Eigen::MatrixXd random_sign_matrix(const SparseMatrix& X, const HashOutput& out,
                                   const HashEnsemble& e) {
  const std::int64_t n = out.rows();
  const std::int64_t L = out.L();
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, L);
  for (std::int64_t i = 0; i < n; ++i) {
    const auto cols = X.row_cols(i);
    const auto vals = X.row_vals(i);
    for (std::int64_t l = 0; l < L; ++l) {
      const std::int64_t h = out.H(i, l);
      if (h < 0) continue;
      const auto it = std::lower_bound(cols.begin(), cols.end(),
                                       static_cast<std::int32_t>(h));
      S(i, l) = e.sign(l, h) * vals[it - cols.begin()];
    }
  }
  return S;
}

SecondMinOutput second_min_hash(const SparseMatrix& X, const HashEnsemble& e,
                                const HashOutput& out) {
  const std::int64_t n = out.rows();
  const std::int64_t L = out.L();
  SecondMinOutput res;
  res.H2.setConstant(n, L, -1);
  res.S2 = Eigen::MatrixXd::Zero(n, L);

  const bool ranks = out.has_ranks;
  for (std::int64_t i = 0; i < n; ++i) {
    const auto cols = X.row_cols(i);
    const auto vals = X.row_vals(i);
    if (cols.size() < 2) continue;  // S2 stays 0
    for (std::int64_t l = 0; l < L; ++l) {
      std::int64_t arg1 = -1, arg2 = -1;
      std::uint64_t key1 = 0, key2 = 0;
      for (std::size_t j = 0; j < cols.size(); ++j) {
        const std::int64_t k = cols[j];
        const std::uint64_t key = ranks ? e.rank(l, k) : e.score(l, k);
        if (arg1 < 0 || key < key1) {
          key2 = key1;
          arg2 = arg1;
          key1 = key;
          arg1 = k;
        } else if (arg2 < 0 || key < key2) {
          key2 = key;
          arg2 = k;
        }
      }
      res.H2(i, l) = arg2;
      const auto it = std::lower_bound(cols.begin(), cols.end(),
                                       static_cast<std::int32_t>(arg2));
      res.S2(i, l) = e.sign(l, arg2) * vals[it - cols.begin()];
    }
  }
  return res;
}

Eigen::MatrixXd random_projection(const SparseMatrix& X, std::int64_t L,
                                  std::uint64_t seed) {
  if (L < 1) throw usage_error("random_projection: L >= 1");
  const std::int64_t n = X.n_rows;
  Eigen::MatrixXd out(n, L);
  std::vector<double> a(static_cast<std::size_t>(X.n_cols));
  for (std::int64_t l = 0; l < L; ++l) {
    Rng rng(derive_seed(seed, Stream::projection, static_cast<std::uint64_t>(l)));
    for (auto& v : a) v = rng.next_gaussian();
    for (std::int64_t i = 0; i < n; ++i) {
      const auto cols = X.row_cols(i);
      const auto vals = X.row_vals(i);
      double acc = 0.0;
      for (std::size_t j = 0; j < cols.size(); ++j) acc += vals[j] * a[cols[j]];
      out(i, l) = acc;
    }
  }
  return out;
}

Eigen::MatrixXd compress(const SparseMatrix& X, const HashEnsemble& e) {
  const HashOutput out = min_hash(X, e);
  if (e.config().variant == HashVariant::random_sign)
    return random_sign_matrix(X, out, e);
  return expand_bbit(out, e);
}

}  // namespace minhash
