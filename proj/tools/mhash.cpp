// mhash: min-wise hashing compression, regression on the compressed data,
// scenario sweeps, and Monte Carlo verification of the accuracy bounds.
//
// Exit codes: 0 success, 1 verification failure, 2 data/variant
// incompatibility, 64 usage, 65 input format.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "minhash/bounds.hpp"
#include "minhash/common.hpp"
#include "minhash/hashing.hpp"
#include "minhash/io.hpp"
#include "minhash/mc.hpp"
#include "minhash/oracle.hpp"
#include "minhash/regress.hpp"
#include "minhash/rng.hpp"
#include "minhash/simulate.hpp"
#include "minhash/sparse.hpp"

using namespace minhash;
using nlohmann::json;

namespace {

int run_argv(std::vector<std::string> args);  // forward, for replay

std::uint64_t env_default_seed() {
  if (const char* s = std::getenv("MINHASH_SEED")) {
    try {
      return std::stoull(s);
    } catch (...) {
      throw usage_error("MINHASH_SEED is not a valid integer");
    }
  }
  return 0;
}

void write_manifest(const std::string& path, const std::string& command,
                    const std::vector<std::string>& argv, const json& config,
                    std::uint64_t seed,
                    const std::vector<std::string>& artifacts,
                    double wall_clock_sec) {
  json m{{"version", kVersion},          {"command", command},
         {"argv", argv},                 {"config", config},
         {"seed", seed},                 {"artifacts", artifacts},
         {"wall_clock_sec", wall_clock_sec}};
  std::ofstream out(path);
  if (!out) throw format_error("cannot write " + path);
  out << m.dump(2) << '\n';
}

HashVariant parse_variant(const std::string& s) {
  if (s == "bbit") return HashVariant::bbit_plain;
  if (s == "bbit-shuffled") return HashVariant::bbit_shuffled;
  if (s == "random-sign") return HashVariant::random_sign;
  throw usage_error("unknown variant '" + s + "'");
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

SparseMatrix load_design(const std::string& path, bool rescale,
                         Eigen::VectorXd* labels) {
  if (path.size() > 5 && path.substr(path.size() - 5) == ".mhsm") {
    if (labels) labels->resize(0);
    return read_sparse(path);
  }
  auto data = read_svmlight(path, rescale);
  if (data.scale != 1.0)
    std::cerr << "rescaled values by 1/" << data.scale << "\n";
  if (labels) *labels = data.y;
  return std::move(data.X);
}

struct Timer {
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
  }
};

// ---------------------------------------------------------------- hash ----

void write_csv_matrix(const std::string& path, const Eigen::MatrixXd& m) {
  if (m.size() > 1000000)
    throw usage_error("CSV export is for debug sizes (<= 1e6 entries)");
  std::ofstream csv(path);
  if (!csv) throw format_error("cannot write " + path);
  csv.precision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      csv << (j ? "," : "") << m(i, j);
    csv << '\n';
  }
}

int cmd_hash(const std::vector<std::string>& argv, const std::string& input,
             const std::string& variant_name, std::int64_t L, int b,
             std::uint64_t seed, const std::string& mode_name,
             bool materialize, bool rescale, const std::string& inject_perm,
             const std::string& inject_signs, bool emit_hm, bool emit_second,
             bool csv, const std::string& out) {
  Timer timer;
  HashConfig cfg;
  cfg.variant = parse_variant(variant_name);
  cfg.L = L;
  cfg.b = b;
  cfg.seed = seed;
  cfg.mode = mode_name == "hashed" ? PermutationMode::hashed_scores
                                   : PermutationMode::fisher_yates;
  cfg.materialize_ranks = materialize;
  cfg.validate();

  Eigen::VectorXd y;
  const SparseMatrix X = load_design(input, rescale, &y);
  const bool bbit = cfg.variant != HashVariant::random_sign;
  if (bbit && !X.is_binary())
    throw incompat_error(
        "b-bit variants need a binary design; use random-sign for "
        "continuous values");

  HashEnsemble e = [&] {
    if (inject_perm.empty()) return HashEnsemble::build(cfg, X.n_cols);
    if (cfg.L != 1)
      throw usage_error("permutation injection requires L = 1");
    std::vector<std::uint32_t> perm;
    for (const auto& tok : split_csv(inject_perm))
      perm.push_back(static_cast<std::uint32_t>(std::stoul(tok)));
    std::vector<std::vector<std::int8_t>> signs;
    if (!inject_signs.empty()) {
      std::vector<std::int8_t> col;
      for (const auto& tok : split_csv(inject_signs))
        col.push_back(static_cast<std::int8_t>(std::stoi(tok)));
      signs.push_back(std::move(col));
    }
    return HashEnsemble::inject(cfg, X.n_cols, {perm}, signs);
  }();

  const HashOutput hashed = min_hash(X, e);
  const Eigen::MatrixXd S = cfg.variant == HashVariant::random_sign
                                ? random_sign_matrix(X, hashed, e)
                                : expand_bbit(hashed, e);

  std::vector<std::string> artifacts;
  const std::string s_path = out + "_S.mhdn";
  write_dense(s_path, S);
  artifacts.push_back(s_path);
  if (y.size() > 0) {
    const std::string y_path = out + "_y.txt";
    write_vector_text(y_path, y);
    artifacts.push_back(y_path);
  }
  if (emit_hm) {
    write_dense_i64(out + "_H.mhin", hashed.H);
    artifacts.push_back(out + "_H.mhin");
    if (hashed.has_ranks) {
      write_dense_i64(out + "_M.mhin", hashed.M);
      artifacts.push_back(out + "_M.mhin");
    }
  }
  if (emit_second) {
    if (cfg.variant != HashVariant::random_sign)
      throw incompat_error("second-min output applies to random-sign only");
    const auto second = second_min_hash(X, e, hashed);
    write_dense(out + "_S2.mhdn", second.S2);
    artifacts.push_back(out + "_S2.mhdn");
    write_dense_i64(out + "_H2.mhin", second.H2);
    artifacts.push_back(out + "_H2.mhin");
    if (!emit_hm) {
      write_dense_i64(out + "_H.mhin", hashed.H);
      artifacts.push_back(out + "_H.mhin");
    }
  }

  if (csv) {
    write_csv_matrix(out + "_S.csv", S);
    artifacts.push_back(out + "_S.csv");
    if (emit_hm) {
      write_csv_matrix(out + "_H.csv", hashed.H.cast<double>());
      artifacts.push_back(out + "_H.csv");
      if (hashed.has_ranks) {
        write_csv_matrix(out + "_M.csv", hashed.M.cast<double>());
        artifacts.push_back(out + "_M.csv");
      }
    }
  }

  const double density =
      S.size() == 0
          ? 0.0
          : static_cast<double>((S.array() != 0.0).count()) / S.size();
  std::cout << "S: " << S.rows() << " x " << S.cols() << ", density "
            << density << "\n";

  json config{{"input", input},
              {"variant", variant_name},
              {"L", L},
              {"b", b},
              {"mode", mode_name},
              {"rescale", rescale},
              {"emit_hm", emit_hm},
              {"emit_second", emit_second},
              {"csv", csv},
              {"inject_perm", inject_perm},
              {"inject_signs", inject_signs},
              {"materialize_ranks", materialize},
              {"out", out}};
  write_manifest(out + "_manifest.json", "hash", argv, config, seed, artifacts,
                 timer.seconds());
  return 0;
}

// ----------------------------------------------------------------- fit ----

int cmd_fit(const std::vector<std::string>& argv, const std::string& s_path,
            const std::string& y_path, const std::string& estimator,
            double radius, double eta, double beta_norm, std::int64_t q,
            std::int64_t p, std::int64_t L_override, bool interaction,
            bool intercept, const std::string& f_star_path,
            const std::string& importance_csv, const std::string& h_path,
            const std::string& s2_path, const std::string& out) {
  Timer timer;
  const Eigen::MatrixXd S = read_dense(s_path);
  const Eigen::VectorXd y = read_vector_text(y_path);
  if (S.rows() != y.size())
    throw format_error("response length " + std::to_string(y.size()) +
                       " does not match " + std::to_string(S.rows()) +
                       " rows of S");

  double resolved_radius = radius;
  if (estimator != "ols" && resolved_radius < 0.0) {
    if (beta_norm < 0.0 || q <= 0 || p <= 0)
      throw usage_error(
          "constrained estimators need --radius or all of --eta --beta-norm "
          "--q --p");
    const std::int64_t L = L_override > 0 ? L_override : S.cols();
    resolved_radius =
        interaction ? bounds::ridge_radius_interaction(p, q, L, eta, beta_norm)
                    : bounds::ridge_radius_main(p, q, L, eta, beta_norm);
  }

  FitResult fit;
  if (estimator == "ols") {
    fit = fit_ols(S, y);
  } else if (estimator == "ridge") {
    fit = fit_ridge_constrained(S, y, resolved_radius);
  } else if (estimator == "logistic") {
    fit = fit_logistic_constrained(S, y, resolved_radius, intercept);
  } else {
    throw usage_error("unknown estimator '" + estimator + "'");
  }

  json result = fit.to_json();
  if (!f_star_path.empty()) {
    const Eigen::VectorXd f = read_vector_text(f_star_path);
    if (f.size() != S.rows()) throw format_error("f-star length mismatch");
    result["train_mspe"] = mspe(predict(fit, S), f);
  }

  std::vector<std::string> artifacts;
  if (!out.empty()) {
    std::ofstream o(out);
    if (!o) throw format_error("cannot write " + out);
    o << result.dump(2) << '\n';
    artifacts.push_back(out);
  } else {
    std::cout << result.dump(2) << '\n';
  }

  if (!importance_csv.empty()) {
    if (h_path.empty() || s2_path.empty())
      throw usage_error("--importance needs --H and --S2");
    const MatrixXi64 H = read_dense_i64(h_path);
    const Eigen::MatrixXd S2 = read_dense(s2_path);
    std::int64_t max_var = 0;
    for (Eigen::Index i = 0; i < H.rows(); ++i)
      for (Eigen::Index l = 0; l < H.cols(); ++l)
        max_var = std::max(max_var, H(i, l) + 1);
    const auto norms = importance_norms(fit, H, S, S2, max_var);
    std::vector<std::int64_t> order(norms.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
      return norms[a] > norms[b];
    });
    std::vector<std::int64_t> rank_of(norms.size());
    for (std::size_t r = 0; r < order.size(); ++r)
      rank_of[order[r]] = static_cast<std::int64_t>(r) + 1;
    std::ofstream csv(importance_csv);
    if (!csv) throw format_error("cannot write " + importance_csv);
    csv << "k,norm,rank\n";
    csv.precision(17);
    for (std::size_t k = 0; k < norms.size(); ++k)
      csv << (k + 1) << ',' << norms[k] << ',' << rank_of[k] << '\n';
    artifacts.push_back(importance_csv);
  }

  json config{{"S", s_path},
              {"y", y_path},
              {"estimator", estimator},
              {"radius", resolved_radius},
              {"eta", eta},
              {"beta_norm", beta_norm},
              {"q", q},
              {"p", p},
              {"interaction", interaction},
              {"intercept", intercept}};
  const std::string manifest = (out.empty() ? s_path : out) + ".manifest.json";
  write_manifest(manifest, "fit", argv, config, 0, artifacts, timer.seconds());
  return 0;
}

// ------------------------------------------------------------ simulate ----

struct Method {
  std::string name;  // e.g. rs-ridge
  HashVariant variant = HashVariant::random_sign;
  bool projection = false;
  bool ridge = false;
};

Method parse_method(const std::string& name) {
  const auto dash = name.find('-');
  if (dash == std::string::npos)
    throw usage_error("method must look like rs-ols or bbit-ridge");
  const std::string front = name.substr(0, dash);
  const std::string back = name.substr(dash + 1);
  Method m;
  m.name = name;
  if (front == "rs")
    m.variant = HashVariant::random_sign;
  else if (front == "bbit")
    m.variant = HashVariant::bbit_plain;
  else if (front == "bbitshuf")
    m.variant = HashVariant::bbit_shuffled;
  else if (front == "rp")
    m.projection = true;
  else
    throw usage_error("unknown method '" + name + "'");
  if (back == "ridge")
    m.ridge = true;
  else if (back != "ols")
    throw usage_error("unknown estimator in method '" + name + "'");
  return m;
}

SparseMatrix binarized(const SparseMatrix& X) {
  SparseMatrix B = X;
  for (auto& v : B.values) v = 1.0;
  return B;
}

int cmd_simulate(const std::vector<std::string>& argv,
                 const std::string& scenario_path,
                 const std::string& methods_csv, const std::string& l_grid_csv,
                 std::int64_t B, std::int64_t reps, int b, double eta,
                 std::uint64_t seed_override, bool seed_given, bool clip,
                 int threads, const std::string& export_prefix,
                 const std::string& out) {
  Timer timer;
  ScenarioConfig scen = ScenarioConfig::from_file(scenario_path);
  if (seed_given) scen.seed = seed_override;
  if (clip) scen.clip = true;
  if (B < 1 || reps < 1) throw usage_error("B >= 1 and reps >= 1");

  std::vector<Method> methods;
  for (const auto& name : split_csv(methods_csv))
    methods.push_back(parse_method(name));
  if (methods.empty()) throw usage_error("no methods given");
  std::vector<std::int64_t> l_grid;
  for (const auto& tok : split_csv(l_grid_csv))
    l_grid.push_back(std::stoll(tok));
  if (l_grid.empty()) throw usage_error("empty L grid");

  const SparseMatrix X = gen_design(scen);
  const Eigen::VectorXd beta = gen_coefficients(scen, X);
  Eigen::VectorXd f = X.multiply(beta);
  InteractionSignal sig;
  if (scen.kappa_int != 0.0) {
    sig = gen_interaction(scen, X);
    f += scen.kappa_int * sig.g;
  }
  const SparseMatrix Xbin = X.is_binary() ? X : binarized(X);
  const SparsityProfile prof = sparsity_profile(X);
  const std::int64_t q_eff = prof.q_max;
  if (X.max_abs() > 1.0)
    std::cerr << "warning: |X|_inf > 1; closed-form radii assume entries in "
                 "[-1, 1]\n";

  std::vector<std::string> artifacts{out};
  if (!export_prefix.empty()) {
    const Eigen::VectorXd y0 =
        gen_response(f, scen.sigma, derive_seed(scen.seed, Stream::mc, 0));
    write_svmlight(export_prefix + ".svm", X, y0);
    write_vector_text(export_prefix + "_fstar.txt", f);
    artifacts.push_back(export_prefix + ".svm");
    artifacts.push_back(export_prefix + "_fstar.txt");
  }

  // norm driving the ridge radius: |beta| for the linear part, widened via
  // the interaction decomposition when it applies exactly (binary designs)
  double radius_norm = beta.norm();
  bool interaction_radius = false;
  if (scen.kappa_int != 0.0 && X.is_binary()) {
    const InteractionModel model =
        product_block_model(beta, scen.kappa_int, sig, X.n_cols);
    radius_norm = interaction_norm(model, q_eff);
    interaction_radius = true;
  }

  struct RowResult {
    std::string method;
    std::int64_t L;
    double mean, se;
  };
  std::vector<RowResult> rows;

  for (const auto& method : methods) {
    for (const auto L : l_grid) {
      double sum = 0.0, sumsq = 0.0;
      for (std::int64_t r = 0; r < reps; ++r) {
        const std::uint64_t rep_seed =
            derive_seed(scen.seed, Stream::mc, static_cast<std::uint64_t>(r));
        const Eigen::VectorXd y = gen_response(f, scen.sigma, rep_seed);

        const double radius =
            interaction_radius
                ? bounds::ridge_radius_interaction(X.n_cols, q_eff, L, eta,
                                                   radius_norm)
                : bounds::ridge_radius_main(X.n_cols, q_eff, L, eta,
                                            radius_norm);
        const FitProc fitter = [&](const Eigen::MatrixXd& S) {
          return method.ridge ? fit_ridge_constrained(S, y, radius)
                              : fit_ols(S, y);
        };

        Eigen::VectorXd pred;
        if (method.projection) {
          pred = Eigen::VectorXd::Zero(X.n_rows);
          for (std::int64_t j = 0; j < B; ++j) {
            const Eigen::MatrixXd S = random_projection(
                X, L,
                derive_seed(rep_seed, Stream::aggregate,
                            static_cast<std::uint64_t>(j)));
            pred += predict(fitter(S), S);
          }
          pred /= static_cast<double>(B);
        } else {
          const SparseMatrix& design =
              method.variant == HashVariant::random_sign ? X : Xbin;
          HashConfig cfg;
          cfg.variant = method.variant;
          cfg.L = L;
          cfg.b = b;
          std::vector<std::uint64_t> seeds;
          for (std::int64_t j = 0; j < B; ++j)
            seeds.push_back(derive_seed(rep_seed, Stream::aggregate,
                                        static_cast<std::uint64_t>(j)));
          pred = aggregate_predict(design, cfg, B, fitter, seeds, threads);
        }
        const double err = mspe(pred, f);
        sum += err;
        sumsq += err * err;
      }
      const double mean = sum / static_cast<double>(reps);
      const double se =
          reps > 1
              ? std::sqrt(std::max(
                    0.0, (sumsq - sum * sum / static_cast<double>(reps)) /
                             static_cast<double>(reps - 1) /
                             static_cast<double>(reps)))
              : 0.0;
      rows.push_back({method.name, L, mean, se});
      std::cerr << method.name << " L=" << L << " mspe=" << mean << "\n";
    }
  }

  double best = rows.front().mean;
  for (const auto& r : rows) best = std::min(best, r.mean);

  std::ofstream csv(out);
  if (!csv) throw format_error("cannot write " + out);
  csv << "scenario,method,L,mean_mspe,se,relative_mspe\n";
  csv.precision(17);
  for (const auto& r : rows)
    csv << scenario_path << ',' << r.method << ',' << r.L << ',' << r.mean
        << ',' << r.se << ',' << (best > 0.0 ? r.mean / best : 1.0) << '\n';

  json config{{"scenario", scenario_path},
              {"methods", methods_csv},
              {"L_grid", l_grid_csv},
              {"B", B},
              {"reps", reps},
              {"b", b},
              {"eta", eta},
              {"clip", clip},
              {"threads", threads},
              {"export", export_prefix},
              {"out", out}};
  write_manifest(out + ".manifest.json", "simulate", argv, config, scen.seed,
                 artifacts, timer.seconds());
  return 0;
}

// -------------------------------------------------------------- verify ----

int cmd_verify(const std::vector<std::string>& argv, const std::string& target,
               const std::string& oracle, std::int64_t n, std::int64_t p,
               std::int64_t q, std::int64_t q_hi, std::int64_t L, int b,
               double a, double eta, std::int64_t R, std::uint64_t seed,
               int threads, const std::string& out) {
  Timer timer;
  if (R < 1000) throw usage_error("R >= 1000 required");
  McOptions opt;
  opt.R = R;
  opt.seed = seed;
  opt.threads = threads;
  opt.eta = eta;

  std::vector<McRecord> records;
  const bool scaled = oracle.rfind("scaled", 0) == 0;
  if (scaled) {
    const SparseMatrix X = q_hi > q ? mc_ragged_instance(n, p, q, q_hi, seed)
                                    : mc_binary_instance(n, p, q, seed);
    const Eigen::VectorXd beta = mc_unit_beta(p, seed + 1);
    if (oracle == "scaled-full") {
      if (target != "unbiasedness")
        throw usage_error("scaled-full verifies target=unbiasedness");
      records.push_back(mc_unbiasedness_scaled(X, beta, a, L, opt));
    } else if (oracle == "scaled-truncated") {
      if (target != "approx-error")
        throw usage_error("scaled-truncated verifies target=approx-error");
      records.push_back(mc_row_error_scaled(X, beta, a, L, opt));
    } else if (oracle == "scaled-geometric") {
      if (target != "approx-error")
        throw usage_error("scaled-geometric verifies target=approx-error");
      records.push_back(mc_error_unscaled(X, beta, L, opt));
    } else {
      throw usage_error("unknown oracle '" + oracle + "'");
    }
  } else {
    const SparseMatrix X = mc_binary_instance(n, p, q, seed);
    const Eigen::VectorXd beta = mc_unit_beta(p, seed + 1);
    if (oracle == "interaction") {
      InteractionModel model;
      model.p = p;
      model.theta1 = Eigen::VectorXd::Zero(p);
      model.theta1[0] = 0.8;
      model.theta1[std::min<std::int64_t>(3, p - 1)] = -0.5;
      model.theta2.push_back({0, 1, 1.0});
      model.theta2.push_back({1, 2, -0.7});
      model.theta2.push_back({2, 0, 0.4});
      if (target == "unbiasedness")
        records.push_back(mc_unbiasedness_interaction(X, model, L, opt));
      else if (target == "approx-error")
        records.push_back(mc_approx_error_interaction(X, model, L, opt));
      else if (target == "concentration")
        records.push_back(mc_concentration_interaction(X, model, L, opt));
      else
        throw usage_error("unknown target '" + target + "'");
    } else if (oracle == "rs" || oracle == "bbit") {
      const HashVariant variant = oracle == "bbit" ? HashVariant::bbit_shuffled
                                                   : HashVariant::random_sign;
      if (target == "unbiasedness")
        records.push_back(mc_unbiasedness_main(X, beta, variant, b, L, opt));
      else if (target == "approx-error")
        records.push_back(mc_approx_error_main(X, beta, variant, b, L, opt));
      else if (target == "tightness")
        records.push_back(mc_norm_tightness(X, beta, L, opt));
      else if (target == "concentration")
        records.push_back(mc_concentration_main(X, beta, L, opt));
      else
        throw usage_error("unknown target '" + target + "'");
    } else {
      throw usage_error("unknown oracle '" + oracle + "'");
    }
  }

  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!out.empty()) {
    file.open(out);
    if (!file) throw format_error("cannot write " + out);
    os = &file;
  }
  bool all_pass = true;
  for (const auto& rec : records) {
    *os << rec.to_json().dump() << '\n';
    all_pass = all_pass && rec.pass;
  }

  json config{{"target", target}, {"oracle", oracle}, {"n", n},
              {"p", p},           {"q", q},           {"q_hi", q_hi},
              {"L", L},           {"b", b},           {"a", a},
              {"eta", eta},       {"R", R},           {"threads", threads}};
  const std::string manifest =
      (out.empty() ? "verify" : out) + ".manifest.json";
  write_manifest(manifest, "verify", argv, config, seed,
                 out.empty() ? std::vector<std::string>{}
                             : std::vector<std::string>{out},
                 timer.seconds());
  return all_pass ? 0 : 1;
}

// -------------------------------------------------------------- report ----

int cmd_report(const std::vector<std::string>& argv, std::int64_t n,
               std::int64_t p, std::int64_t q, std::int64_t L, int b,
               double sigma, double eta, double beta_norm, double ell,
               double max_abs, const std::string& out) {
  Timer timer;
  bounds::BoundReport rep;
  rep.n = n;
  rep.p = p;
  rep.q = q;
  rep.L = L;
  rep.b = b;
  rep.sigma = sigma;
  rep.eta = eta;
  rep.beta_norm = beta_norm;
  rep.ell = ell;
  rep.delta_bar = static_cast<double>(q) / static_cast<double>(p);
  rep.approx_bound = bounds::approx_main_rs(p, q, L, beta_norm * beta_norm);
  rep.L_star = bounds::l_star(p, q, n, beta_norm, sigma);
  rep.rho = bounds::rho_main(p, q, L, eta);
  rep.rho2 = bounds::rho_interaction(p, q, L, eta);
  rep.mspe_ols = bounds::ols_mspe(p, q, n, L, sigma, beta_norm, 0.0);
  rep.mspe_ridge = bounds::ridge_mspe(p, q, n, L, sigma, eta, beta_norm,
                                      static_cast<double>(n), 0.0);
  rep.optimal_b = bounds::optimal_bits(rep.delta_bar);
  rep.sup_norm_warning = max_abs > 1.0;
  if (rep.sup_norm_warning)
    std::cerr << "warning: |X|_inf > 1; the closed-form bounds assume "
                 "entries in [-1, 1]\n";
  const std::string text = rep.to_json().dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    std::ofstream o(out);
    if (!o) throw format_error("cannot write " + out);
    o << text;
  }
  write_manifest((out.empty() ? "report" : out) + ".manifest.json", "report",
                 argv, rep.to_json(), 0,
                 out.empty() ? std::vector<std::string>{}
                             : std::vector<std::string>{out},
                 timer.seconds());
  return 0;
}

// -------------------------------------------------------------- replay ----

int cmd_replay(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw format_error("cannot open " + manifest_path);
  json m;
  try {
    in >> m;
  } catch (const json::exception& e) {
    throw format_error(manifest_path + ": " + std::string(e.what()));
  }
  if (!m.contains("argv") || !m["argv"].is_array())
    throw format_error(manifest_path + ": no argv recorded");
  std::vector<std::string> args;
  for (const auto& tok : m["argv"]) args.push_back(tok.get<std::string>());
  return run_argv(std::move(args));
}

// ---------------------------------------------------------------- main ----

int run_argv(std::vector<std::string> args) {
  CLI::App app{"min-wise hashing compression and regression"};
  app.require_subcommand(1);
  const std::uint64_t default_seed = env_default_seed();

  // hash
  auto* hash = app.add_subcommand("hash", "compress a sparse design matrix");
  std::string h_input, h_variant = "random-sign", h_mode = "fisher";
  std::string h_inject_perm, h_inject_signs, h_out = "hash";
  std::int64_t h_L = 1;
  int h_b = 1;
  std::uint64_t h_seed = default_seed;
  bool h_mat = false, h_rescale = false, h_emit_hm = false, h_second = false;
  bool h_csv = false;
  hash->add_option("--input", h_input, "svmlight file or .mhsm container")
      ->required();
  hash->add_option("--variant", h_variant, "bbit | bbit-shuffled | random-sign");
  hash->add_option("--L", h_L, "number of permutations");
  hash->add_option("--b", h_b, "bits per block");
  hash->add_option("--seed", h_seed, "ensemble seed");
  hash->add_option("--mode", h_mode, "fisher | hashed");
  hash->add_flag("--materialize-ranks", h_mat,
                 "sort hashed scores into explicit ranks");
  hash->add_flag("--rescale", h_rescale, "divide values by max |value|");
  hash->add_option("--inject-perm", h_inject_perm,
                   "comma list of 1-based ranks (tests; L = 1)");
  hash->add_option("--inject-signs", h_inject_signs, "comma list of +-1");
  hash->add_flag("--emit-hm", h_emit_hm, "also write H and M");
  hash->add_flag("--emit-second", h_second,
                 "also write second-min S2 and H2 (random-sign)");
  hash->add_flag("--csv", h_csv, "also write CSV copies (debug sizes)");
  hash->add_option("--out", h_out, "output prefix");

  // fit
  auto* fit = app.add_subcommand("fit", "regress a response on compressed S");
  std::string f_s, f_y, f_estimator = "ols", f_fstar, f_out;
  std::string f_importance, f_h, f_s2;
  double f_radius = -1.0, f_eta = 1.0, f_beta_norm = -1.0;
  std::int64_t f_q = 0, f_p = 0, f_L = 0;
  bool f_inter = false, f_intercept = false;
  fit->add_option("--S", f_s, ".mhdn container of S")->required();
  fit->add_option("--y", f_y, "response, one value per line")->required();
  fit->add_option("--estimator", f_estimator, "ols | ridge | logistic");
  fit->add_option("--radius", f_radius, "norm-ball radius");
  fit->add_option("--eta", f_eta, "slack eta in the radius formula");
  fit->add_option("--beta-norm", f_beta_norm, "|beta*| for the radius");
  fit->add_option("--q", f_q, "row sparsity for the radius");
  fit->add_option("--p", f_p, "original dimension for the radius");
  fit->add_option("--L", f_L, "permutation count (default: columns of S)");
  fit->add_flag("--interaction", f_inter, "use the interaction radius");
  fit->add_flag("--intercept", f_intercept, "logistic with intercept");
  fit->add_option("--f-star", f_fstar, "true signal, for train MSPE");
  fit->add_option("--importance", f_importance,
                  "write a variable-importance CSV here");
  fit->add_option("--H", f_h, "H container (importance)");
  fit->add_option("--S2", f_s2, "second-min S container (importance)");
  fit->add_option("--out", f_out, "fit JSON path (default: stdout)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "scenario sweep to CSV");
  std::string s_scenario, s_methods = "rs-ols", s_grid = "64",
                          s_out = "out.csv";
  std::string s_export;
  std::int64_t s_B = 1, s_reps = 10;
  int s_b = 1, s_threads = 0;
  double s_eta = 1.0;
  std::uint64_t s_seed = default_seed;
  bool s_seed_given = false, s_clip = false;
  sim->add_option("--scenario", s_scenario, "scenario key-value file")
      ->required();
  sim->add_option("--methods", s_methods,
                  "comma list: {rs,bbit,bbitshuf,rp}-{ols,ridge}");
  sim->add_option("--L-grid", s_grid, "comma list of L values");
  sim->add_option("--B", s_B, "compressions aggregated per fit");
  sim->add_option("--reps", s_reps, "replications per cell");
  sim->add_option("--b", s_b, "bits for the b-bit methods");
  sim->add_option("--eta", s_eta, "ridge radius slack");
  sim->add_option("--seed", s_seed, "override the scenario seed")
      ->each([&s_seed_given](const std::string&) { s_seed_given = true; });
  sim->add_flag("--clip", s_clip, "divide design values by max |value|");
  sim->add_option("--export", s_export,
                  "also write the dataset as <prefix>.svm with the signal");
  sim->add_option("--threads", s_threads, "worker cap");
  sim->add_option("--out", s_out, "CSV path");

  // verify
  auto* ver = app.add_subcommand("verify", "Monte Carlo bound verification");
  std::string v_target, v_oracle = "rs", v_out;
  std::int64_t v_n = 20, v_p = 30, v_q = 5, v_qhi = 0, v_L = 32, v_R = 20000;
  int v_b = 1, v_threads = 0;
  double v_a = 0.5, v_eta = 1.0;
  std::uint64_t v_seed = default_seed;
  ver->add_option("--target", v_target,
                  "unbiasedness | approx-error | concentration | tightness")
      ->required();
  ver->add_option("--oracle", v_oracle,
                  "rs | bbit | interaction | scaled-full | scaled-truncated | "
                  "scaled-geometric");
  ver->add_option("--n", v_n);
  ver->add_option("--p", v_p);
  ver->add_option("--q", v_q, "row sparsity (lower end if --q-hi)");
  ver->add_option("--q-hi", v_qhi, "upper row sparsity for ragged instances");
  ver->add_option("--L", v_L);
  ver->add_option("--b", v_b);
  ver->add_option("--a", v_a, "scaling exponent");
  ver->add_option("--eta", v_eta);
  ver->add_option("--R", v_R, "replications (>= 1000)");
  ver->add_option("--seed", v_seed);
  ver->add_option("--threads", v_threads);
  ver->add_option("--out", v_out, "JSON-lines report (default: stdout)");

  // report
  auto* rep = app.add_subcommand("report", "closed-form bound report");
  std::int64_t r_n = 100, r_p = 100, r_q = 10, r_L = 64;
  int r_b = 1;
  double r_sigma = 1.0, r_eta = 1.0, r_beta = 1.0, r_ell = 0.0, r_max = 1.0;
  std::string r_out;
  rep->add_option("--n", r_n);
  rep->add_option("--p", r_p);
  rep->add_option("--q", r_q);
  rep->add_option("--L", r_L);
  rep->add_option("--b", r_b);
  rep->add_option("--sigma", r_sigma);
  rep->add_option("--eta", r_eta);
  rep->add_option("--beta-norm", r_beta);
  rep->add_option("--ell", r_ell, "interaction norm l(Theta*)");
  rep->add_option("--max-abs", r_max, "max |X| entry, for the regime warning");
  rep->add_option("--out", r_out);

  // replay
  auto* replay = app.add_subcommand("replay", "re-run from a manifest");
  std::string rp_manifest;
  replay->add_option("manifest", rp_manifest, "manifest JSON")->required();

  std::vector<const char*> cargs;
  cargs.push_back("mhash");
  for (const auto& a : args) cargs.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 64;
  }

  if (hash->parsed())
    return cmd_hash(args, h_input, h_variant, h_L, h_b, h_seed, h_mode, h_mat,
                    h_rescale, h_inject_perm, h_inject_signs, h_emit_hm,
                    h_second, h_csv, h_out);
  if (fit->parsed())
    return cmd_fit(args, f_s, f_y, f_estimator, f_radius, f_eta, f_beta_norm,
                   f_q, f_p, f_L, f_inter, f_intercept, f_fstar, f_importance,
                   f_h, f_s2, f_out);
  if (sim->parsed())
    return cmd_simulate(args, s_scenario, s_methods, s_grid, s_B, s_reps, s_b,
                        s_eta, s_seed, s_seed_given, s_clip, s_threads,
                        s_export, s_out);
  if (ver->parsed())
    return cmd_verify(args, v_target, v_oracle, v_n, v_p, v_q, v_qhi, v_L, v_b,
                      v_a, v_eta, v_R, v_seed, v_threads, v_out);
  if (rep->parsed())
    return cmd_report(args, r_n, r_p, r_q, r_L, r_b, r_sigma, r_eta, r_beta,
                      r_ell, r_max, r_out);
  if (replay->parsed()) return cmd_replay(rp_manifest);
  return 64;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return run_argv(std::move(args));
  } catch (const usage_error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 64;
  } catch (const format_error& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return 65;
  } catch (const incompat_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 70;
  }
}
