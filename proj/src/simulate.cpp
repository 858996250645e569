#include "minhash/simulate.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "minhash/rng.hpp"

namespace minhash {

const char* to_string(DesignDist d) {
  switch (d) {
    case DesignDist::binary:
      return "binary";
    case DesignDist::gaussian:
      return "gaussian";
    case DesignDist::exponential:
      return "exponential";
  }
  return "?";
}

const char* to_string(CoefKind c) {
  return c == CoefKind::exponential ? "exponential" : "brownian";
}

void ScenarioConfig::validate() const {
  if (n < 1 || p < 1) throw usage_error("scenario: n, p >= 1");
  if (q < 1 || q > p) throw usage_error("scenario: 1 <= q <= p");
  if (rho < 0.0 || rho >= 1.0) throw usage_error("scenario: rho in [0, 1)");
  if (sigma < 0.0) throw usage_error("scenario: sigma >= 0");
}

ScenarioConfig ScenarioConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw format_error("cannot open " + path);
  ScenarioConfig cfg;
  std::string line;
  std::int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream ss(line);
    std::string key, value;
    if (!(ss >> key)) continue;
    if (!(ss >> value))
      throw format_error(path + ":" + std::to_string(lineno) +
                         ": missing value for '" + key + "'");
    try {
      if (key == "n")
        cfg.n = std::stoll(value);
      else if (key == "p")
        cfg.p = std::stoll(value);
      else if (key == "q")
        cfg.q = std::stoll(value);
      else if (key == "rho")
        cfg.rho = std::stod(value);
      else if (key == "sigma")
        cfg.sigma = std::stod(value);
      else if (key == "interaction_strength")
        cfg.kappa_int = std::stod(value);
      else if (key == "seed")
        cfg.seed = std::stoull(value);
      else if (key == "design") {
        if (value == "binary")
          cfg.design = DesignDist::binary;
        else if (value == "gaussian")
          cfg.design = DesignDist::gaussian;
        else if (value == "exponential")
          cfg.design = DesignDist::exponential;
        else
          throw format_error(path + ": unknown design '" + value + "'");
      } else if (key == "coefficients") {
        if (value == "exponential")
          cfg.coef = CoefKind::exponential;
        else if (value == "brownian")
          cfg.coef = CoefKind::brownian;
        else
          throw format_error(path + ": unknown coefficients '" + value + "'");
      } else {
        throw format_error(path + ":" + std::to_string(lineno) +
                           ": unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw format_error(path + ":" + std::to_string(lineno) +
                         ": malformed value '" + value + "'");
    }
  }
  cfg.validate();
  return cfg;
}

SparseMatrix gen_design(const ScenarioConfig& cfg) {
  cfg.validate();
  const double prob =
      static_cast<double>(cfg.q) / static_cast<double>(cfg.p);

  std::vector<std::vector<std::int32_t>> cols(cfg.n);
  std::vector<std::vector<double>> vals(cfg.n);
  std::vector<double> row(static_cast<std::size_t>(cfg.p));
  double max_abs = 0.0;

  for (std::int64_t i = 0; i < cfg.n; ++i) {
    std::fill(row.begin(), row.end(), 0.0);
    Rng draw(derive_seed(cfg.seed, Stream::design, static_cast<std::uint64_t>(i)));
    for (std::int64_t k = 0; k < cfg.p; ++k) {
      if (draw.next_double() >= prob) continue;
      double v = 1.0;
      if (cfg.design == DesignDist::gaussian) {
        do {
          v = draw.next_gaussian();
        } while (v == 0.0);
      } else if (cfg.design == DesignDist::exponential) {
        do {
          v = draw.next_exponential();
        } while (v == 0.0);
      }
      row[k] = v;
    }
    // correlation pass; copies cascade left to right
    Rng copy(derive_seed(cfg.seed, Stream::correlate,
                         static_cast<std::uint64_t>(i)));
    for (std::int64_t k = 1; k < cfg.p; ++k)
      if (copy.next_double() < cfg.rho) row[k] = row[k - 1];

    for (std::int64_t k = 0; k < cfg.p; ++k) {
      if (row[k] == 0.0) continue;
      cols[i].push_back(static_cast<std::int32_t>(k));
      vals[i].push_back(row[k]);
      max_abs = std::max(max_abs, std::abs(row[k]));
    }
  }

  if (cfg.clip && max_abs > 1.0)
    for (auto& v : vals)
      for (auto& x : v) x /= max_abs;

  SparseBuilder b;
  for (std::int64_t i = 0; i < cfg.n; ++i)
    b.add_row(std::move(cols[i]), std::move(vals[i]));
  return b.build(cfg.p);
}

Eigen::VectorXd gen_coefficients(const ScenarioConfig& cfg,
                                 const SparseMatrix& X) {
  for (int attempt = 0; attempt < 10; ++attempt) {
    Rng rng(derive_seed(cfg.seed, Stream::coefficients,
                        static_cast<std::uint64_t>(attempt)));
    Eigen::VectorXd beta(X.n_cols);
    if (cfg.coef == CoefKind::exponential) {
      for (std::int64_t k = 0; k < X.n_cols; ++k)
        beta[k] = rng.next_exponential();
    } else {
      double acc = 0.0;
      for (std::int64_t k = 0; k < X.n_cols; ++k) {
        acc += rng.next_gaussian();
        beta[k] = acc;
      }
    }
    const double ss = X.multiply(beta).squaredNorm();
    if (ss > 0.0) {
      beta *= std::sqrt(static_cast<double>(X.n_rows) / ss);
      return beta;
    }
  }
  throw std::runtime_error("gen_coefficients: X beta vanished in 10 redraws");
}

InteractionSignal gen_interaction(const ScenarioConfig& cfg,
                                  const SparseMatrix& X) {
  const std::int64_t block = (cfg.p + cfg.q - 1) / cfg.q;  // ceil(p/q)
  if (cfg.p - block < 1)
    throw std::invalid_argument("gen_interaction: need p - ceil(p/q) >= 1");

  for (int attempt = 0; attempt < 10; ++attempt) {
    Rng rng(derive_seed(cfg.seed, Stream::blocks,
                        static_cast<std::uint64_t>(attempt)));
    const auto start1 = static_cast<std::int64_t>(
        rng.next_below(static_cast<std::uint64_t>(cfg.p - block)));
    const auto start2 = static_cast<std::int64_t>(
        rng.next_below(static_cast<std::uint64_t>(cfg.p - block)));

    Eigen::VectorXd g(X.n_rows);
    for (std::int64_t i = 0; i < X.n_rows; ++i) {
      const auto cols = X.row_cols(i);
      const auto vals = X.row_vals(i);
      double s1 = 0.0, s2 = 0.0;
      for (std::size_t j = 0; j < cols.size(); ++j) {
        if (cols[j] >= start1 && cols[j] < start1 + block) s1 += vals[j];
        if (cols[j] >= start2 && cols[j] < start2 + block) s2 += vals[j];
      }
      g[i] = s1 * s2;
    }
    const double ss = g.squaredNorm();
    if (ss > 0.0) {
      InteractionSignal out;
      out.scale = std::sqrt(static_cast<double>(X.n_rows) / ss);
      out.g = g * out.scale;
      out.start1 = start1;
      out.start2 = start2;
      out.block = block;
      return out;
    }
  }
  throw std::runtime_error("gen_interaction: signal vanished in 10 redraws");
}

Eigen::VectorXd gen_response(const Eigen::VectorXd& f_star, double sigma,
                             std::uint64_t seed) {
  if (sigma < 0.0) throw std::invalid_argument("gen_response: sigma >= 0");
  Rng rng(derive_seed(seed, Stream::noise, 0));
  Eigen::VectorXd y(f_star.size());
  for (Eigen::Index i = 0; i < y.size(); ++i)
    y[i] = f_star[i] + sigma * rng.next_gaussian();
  return y;
}

Eigen::VectorXd gen_response_logistic(const Eigen::VectorXd& f_star,
                                      std::uint64_t seed) {
  Rng rng(derive_seed(seed, Stream::labels, 0));
  Eigen::VectorXd y(f_star.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double pi = 1.0 / (1.0 + std::exp(-f_star[i]));
    y[i] = rng.next_bernoulli(pi) ? 1.0 : 0.0;
  }
  return y;
}

InteractionModel product_block_model(const Eigen::VectorXd& beta, double kappa,
                                     const InteractionSignal& sig,
                                     std::int64_t p) {
  InteractionModel m;
  m.p = p;
  m.theta1 = beta;
  const double c = kappa * sig.scale;
  for (std::int64_t k = sig.start1; k < sig.start1 + sig.block; ++k)
    m.theta1[k] += c * static_cast<double>(sig.block);
  for (std::int64_t k1 = sig.start1; k1 < sig.start1 + sig.block; ++k1)
    for (std::int64_t k2 = sig.start2; k2 < sig.start2 + sig.block; ++k2)
      if (k1 != k2)
        m.theta2.push_back({static_cast<std::int32_t>(k1),
                            static_cast<std::int32_t>(k2), -c});
  return m;
}

}  // namespace minhash
