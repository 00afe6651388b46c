#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "glselect/conditions.hpp"
#include "glselect/core.hpp"
#include "glselect/designs.hpp"
#include "glselect/gauss_lasso.hpp"
#include "glselect/population.hpp"
#include "glselect/rng.hpp"

namespace glselect {

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

enum class DesignKind { confounder, explicit_sigma };
enum class LambdaRule { explicit_value, theorem_deterministic, theorem_random };

/// Flat key/value experiment description; see parse_experiment_config for the
/// file format. theta0 may be given explicitly, otherwise the confounder
/// support carries theta_min everywhere.
struct ExperimentConfig {
  int schema_version = 1;
  DesignKind design = DesignKind::confounder;
  int p = 0;
  int s0 = 0;
  double a = 0.0;
  std::string sigma_file;
  std::optional<Matrix> sigma_matrix;
  std::optional<Vector> theta0;
  double theta_min = 1.0;
  int n = 0;
  double noise_sigma = 0.0;
  LambdaRule lambda_rule = LambdaRule::explicit_value;
  double lambda = 0.0;
  double c1 = 2.0;
  int select_s0 = 0;  // 0 means "use the true support size"
  int replicates = 0;
  std::uint64_t seed = 0;
  std::string sweep_param;
  std::vector<std::string> sweep_values;
};

/// Applies one `key = value` assignment; unknown keys are errors.
inline void set_config_key(ExperimentConfig& cfg, const std::string& key,
                           const std::string& value) {
  using detail::parse_double;
  using detail::parse_int;
  if (key == "schema_version") {
    long v = parse_int(key, value);
    if (v != 1) throw ParseError("unsupported schema_version " + value);
    cfg.schema_version = 1;
  } else if (key == "design") {
    if (value == "confounder") cfg.design = DesignKind::confounder;
    else if (value == "explicit") cfg.design = DesignKind::explicit_sigma;
    else throw ParseError("design must be 'confounder' or 'explicit', got '" + value + "'");
  } else if (key == "p") cfg.p = static_cast<int>(parse_int(key, value));
  else if (key == "s0") cfg.s0 = static_cast<int>(parse_int(key, value));
  else if (key == "a") cfg.a = parse_double(key, value);
  else if (key == "sigma_file") cfg.sigma_file = value;
  else if (key == "theta0") {
    auto toks = detail::split_commas(value);
    Vector t(toks.size());
    for (size_t i = 0; i < toks.size(); ++i) t[i] = parse_double(key, toks[i]);
    cfg.theta0 = std::move(t);
  } else if (key == "theta_min") cfg.theta_min = parse_double(key, value);
  else if (key == "n") cfg.n = static_cast<int>(parse_int(key, value));
  else if (key == "noise_sigma") cfg.noise_sigma = parse_double(key, value);
  else if (key == "lambda_rule") {
    if (value == "explicit") cfg.lambda_rule = LambdaRule::explicit_value;
    else if (value == "theorem-deterministic") cfg.lambda_rule = LambdaRule::theorem_deterministic;
    else if (value == "theorem-random") cfg.lambda_rule = LambdaRule::theorem_random;
    else throw ParseError("lambda_rule must be explicit, theorem-deterministic, "
                          "or theorem-random; got '" + value + "'");
  } else if (key == "lambda") cfg.lambda = parse_double(key, value);
  else if (key == "c1") cfg.c1 = parse_double(key, value);
  else if (key == "select_s0") cfg.select_s0 = static_cast<int>(parse_int(key, value));
  else if (key == "replicates") cfg.replicates = static_cast<int>(parse_int(key, value));
  else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
  else if (key == "sweep_param") cfg.sweep_param = value;
  else if (key == "sweep_values") cfg.sweep_values = detail::split_commas(value);
  else throw ParseError("unknown config key '" + key + "'");
}

/// Parses the flat `key = value` (or `key: value`) format, one pair per
/// line, '#' comments. schema_version is mandatory and pinned to 1.
inline ExperimentConfig parse_experiment_config(std::istream& is) {
  ExperimentConfig cfg;
  bool saw_version = false;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    auto sep = line.find_first_of("=:");
    if (sep == std::string::npos)
      throw ParseError("line " + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = detail::trim(line.substr(0, sep));
    std::string value = detail::trim(line.substr(sep + 1));
    if (key.empty() || value.empty())
      throw ParseError("line " + std::to_string(lineno) + ": empty key or value");
    if (key == "schema_version") saw_version = true;
    set_config_key(cfg, key, value);
  }
  if (!saw_version) throw ParseError("config is missing schema_version");
  return cfg;
}

inline ExperimentConfig parse_experiment_config(const std::string& text) {
  std::istringstream ss(text);
  return parse_experiment_config(ss);
}

/// Plain numeric CSV (no header) -> matrix; used for explicit covariances.
inline Matrix read_matrix_csv(std::istream& is) {
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    line = detail::trim(line);
    if (line.empty()) continue;
    auto toks = detail::split_commas(line);
    std::vector<double> row;
    for (size_t c = 0; c < toks.size(); ++c)
      row.push_back(detail::parse_double("row " + std::to_string(lineno), toks[c]));
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError("row " + std::to_string(lineno) + " has " +
                       std::to_string(row.size()) + " fields, expected " +
                       std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("matrix file is empty");
  Matrix m(rows.size(), rows.front().size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

// ---------------------------------------------------------------------------
// Prepared experiment and trials
// ---------------------------------------------------------------------------

/// Config resolved into concrete objects: the population covariance, theta0,
/// the extended-support oracle, and the regularization level.
struct PreparedExperiment {
  ExperimentConfig cfg;
  CovarianceModel sigma;
  Vector theta0;
  IndexSet S;
  int s0 = 0;
  ExtendedSupport ext;
  double eta_gic = 0.0;
  double lambda = 0.0;
  int select_s0 = 0;
};

inline PreparedExperiment prepare_experiment(const ExperimentConfig& cfg) {
  if (cfg.replicates < 1) throw ArgumentError("replicates must be >= 1");
  if (cfg.n < 1) throw ArgumentError("n must be >= 1");
  if (cfg.noise_sigma < 0) throw ArgumentError("noise_sigma must be >= 0");

  std::optional<CovarianceModel> sigma;
  Vector theta0;
  if (cfg.design == DesignKind::confounder) {
    ConfounderDesign d(cfg.p, cfg.s0, cfg.a);
    sigma = confounder_covariance(d);
    if (cfg.theta0) {
      theta0 = *cfg.theta0;
    } else {
      if (cfg.theta_min <= 0) throw ArgumentError("theta_min must be positive");
      theta0 = Vector::Zero(cfg.p);
      for (int i = 0; i < cfg.s0; ++i) theta0[i] = cfg.theta_min;
    }
  } else {
    Matrix m;
    if (cfg.sigma_matrix) {
      m = *cfg.sigma_matrix;
    } else if (!cfg.sigma_file.empty()) {
      std::ifstream f(cfg.sigma_file);
      if (!f) throw ArgumentError("cannot open sigma_file '" + cfg.sigma_file + "'");
      m = read_matrix_csv(f);
    } else {
      throw ArgumentError("explicit design needs sigma_file or an in-memory matrix");
    }
    sigma = CovarianceModel::population(std::move(m));
    if (!cfg.theta0) throw ArgumentError("explicit design needs an explicit theta0");
    theta0 = *cfg.theta0;
  }
  if (theta0.size() != sigma->p())
    throw DimensionError("theta0 length does not match the design dimension");

  PreparedExperiment prep{cfg,      std::move(*sigma), std::move(theta0), {}, 0, {},
                          0.0,      0.0,               0};
  for (Eigen::Index i = 0; i < prep.theta0.size(); ++i)
    if (prep.theta0[i] != 0.0) prep.S.push_back(static_cast<int>(i));
  prep.s0 = static_cast<int>(prep.S.size());
  prep.ext = extended_support(prep.sigma, prep.theta0);
  prep.eta_gic = gic_margin_from(prep.sigma, prep.ext);

  switch (cfg.lambda_rule) {
    case LambdaRule::explicit_value:
      prep.lambda = cfg.lambda;
      break;
    case LambdaRule::theorem_deterministic:
      prep.lambda = theorem_lambda(cfg.noise_sigma, prep.eta_gic, cfg.c1,
                                   prep.sigma.p(), cfg.n, Regime::deterministic);
      break;
    case LambdaRule::theorem_random:
      prep.lambda = theorem_lambda(cfg.noise_sigma, prep.eta_gic, cfg.c1,
                                   prep.sigma.p(), cfg.n, Regime::random);
      break;
  }
  if (!(prep.lambda > 0))
    throw ArgumentError("resolved lambda must be positive (got " +
                        format_double(prep.lambda) + ")");
  prep.select_s0 = cfg.select_s0 > 0 ? cfg.select_s0 : prep.s0;
  return prep;
}

/// One Monte Carlo replicate. lasso_sign_ok compares the Lasso sign pattern
/// against the extended-support signs v0 (the pattern the Lasso actually
/// converges to); lasso_truth_sign_ok compares against sign(theta0), which
/// is the classical signed-support recovery event. gl_support_ok is exact
/// recovery of supp(theta0) by the two-stage selector.
struct TrialOutcome {
  std::uint64_t seed = 0;
  int replicate = 0;
  bool lasso_sign_ok = false;
  bool lasso_truth_sign_ok = false;
  bool gl_support_ok = false;
  double gl_sup_err = std::numeric_limits<double>::quiet_NaN();
  int t_size = -1;
  bool failed = false;
  std::string failure_reason;
};

/// Deterministic per (master seed, replicate): the replicate index opens its
/// own RNG substream. Solver failures are recorded, not thrown.
inline TrialOutcome run_trial(const PreparedExperiment& prep, int replicate) {
  TrialOutcome out;
  out.seed = prep.cfg.seed;
  out.replicate = replicate;
  CounterRng rng(prep.cfg.seed, static_cast<std::uint64_t>(replicate) + 1);
  RegressionInstance inst =
      synth_instance(prep.sigma, prep.theta0, prep.cfg.n, prep.cfg.noise_sigma, rng);

  IntVector truth_sign(prep.theta0.size());
  for (Eigen::Index i = 0; i < prep.theta0.size(); ++i)
    truth_sign[i] = sign_of(prep.theta0[i], 0.0);

  try {
    Vector theta = fit_lasso(inst, prep.lambda);
    SignedSupport ss = signed_support(theta);
    out.lasso_sign_ok = (ss.v.array() == prep.ext.support.v.array()).all();
    out.lasso_truth_sign_ok = (ss.v.array() == truth_sign.array()).all();
    out.t_size = ss.t0;
    if (static_cast<int>(ss.T.size()) > inst.n())
      throw RankError("Lasso support size exceeds n");
    Vector theta_gl = ols_restricted(inst, ss.T);
    IndexSet S_hat = top_magnitude_indices(theta_gl, ss.T, prep.select_s0);
    out.gl_support_ok = (S_hat == prep.S);
    out.gl_sup_err = (theta_gl - prep.theta0).cwiseAbs().maxCoeff();
  } catch (const std::exception& e) {
    out.failed = true;
    out.failure_reason = e.what();
  }
  return out;
}

inline TrialOutcome run_trial(const ExperimentConfig& cfg, int replicate) {
  return run_trial(prepare_experiment(cfg), replicate);
}

// ---------------------------------------------------------------------------
// Recovery curves
// ---------------------------------------------------------------------------

struct Override {
  std::string key, value;
};
using SweepPoint = std::vector<Override>;

struct ResultRow {
  std::string sweep_key;  // e.g. "a=0.6", or "-" for the base config
  double lambda = 0.0;
  int replicates = 0;
  int failures = 0;
  int implication_violations = 0;
  double lasso_sign_freq = 0.0, lasso_sign_ci = 0.0;
  double lasso_truth_sign_freq = 0.0, lasso_truth_sign_ci = 0.0;
  double gl_freq = 0.0, gl_ci = 0.0;
  double mean_gl_sup_err = std::numeric_limits<double>::quiet_NaN();
  double mean_t_size = std::numeric_limits<double>::quiet_NaN();
};

struct ResultTable {
  std::vector<ResultRow> rows;
};

/// Runs the full replicate budget at each sweep point (base config plus the
/// point's overrides). Frequencies count failed trials as non-recoveries;
/// intervals are half-widths of normal-approximation 95% bands. Also counts
/// violations of the implication "Lasso pattern = v0 and selector ran with
/// the true s0 => selector recovered S".
inline ResultTable recovery_curve(const ExperimentConfig& base,
                                  const std::vector<SweepPoint>& sweep) {
  if (sweep.empty()) throw ArgumentError("sweep must be nonempty");
  ResultTable table;
  for (const SweepPoint& point : sweep) {
    ExperimentConfig cfg = base;
    std::string key;
    for (const Override& o : point) {
      set_config_key(cfg, o.key, o.value);
      if (!key.empty()) key += ",";
      key += o.key + "=" + o.value;
    }
    PreparedExperiment prep = prepare_experiment(cfg);

    ResultRow row;
    row.sweep_key = key.empty() ? "-" : key;
    row.lambda = prep.lambda;
    row.replicates = cfg.replicates;
    long n_sign = 0, n_truth = 0, n_gl = 0;
    double sum_err = 0.0, sum_t = 0.0;
    long n_err = 0;
    for (int r = 0; r < cfg.replicates; ++r) {
      TrialOutcome t = run_trial(prep, r);
      if (t.failed) {
        ++row.failures;
        continue;
      }
      n_sign += t.lasso_sign_ok;
      n_truth += t.lasso_truth_sign_ok;
      n_gl += t.gl_support_ok;
      sum_err += t.gl_sup_err;
      sum_t += t.t_size;
      ++n_err;
      if (t.lasso_sign_ok && prep.select_s0 == prep.s0 && !t.gl_support_ok)
        ++row.implication_violations;
    }
    const double R = static_cast<double>(cfg.replicates);
    auto ci = [&](double freq) { return 1.96 * std::sqrt(freq * (1 - freq) / R); };
    row.lasso_sign_freq = n_sign / R;
    row.lasso_truth_sign_freq = n_truth / R;
    row.gl_freq = n_gl / R;
    row.lasso_sign_ci = ci(row.lasso_sign_freq);
    row.lasso_truth_sign_ci = ci(row.lasso_truth_sign_freq);
    row.gl_ci = ci(row.gl_freq);
    if (n_err > 0) {
      row.mean_gl_sup_err = sum_err / n_err;
      row.mean_t_size = sum_t / n_err;
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

/// One row per sweep point, round-trip numeric precision.
inline void write_results_csv(const ResultTable& table, std::ostream& os) {
  os << "sweep,lambda,replicates,failures,lasso_sign_ok_freq,lasso_sign_ok_ci,"
        "lasso_truth_sign_freq,lasso_truth_sign_ci,gl_support_freq,gl_support_ci,"
        "mean_gl_sup_err,mean_t_size,implication_violations\n";
  for (const ResultRow& r : table.rows) {
    os << r.sweep_key << "," << format_double(r.lambda) << "," << r.replicates << ","
       << r.failures << "," << format_double(r.lasso_sign_freq) << ","
       << format_double(r.lasso_sign_ci) << "," << format_double(r.lasso_truth_sign_freq)
       << "," << format_double(r.lasso_truth_sign_ci) << "," << format_double(r.gl_freq)
       << "," << format_double(r.gl_ci) << "," << format_double(r.mean_gl_sup_err)
       << "," << format_double(r.mean_t_size) << "," << r.implication_violations
       << "\n";
  }
}

// ---------------------------------------------------------------------------
// Concentration checks
// ---------------------------------------------------------------------------

struct ConcentrationResult {
  double cov_freq = 0.0;        // ||Sig_hat - Sig||_2 >= 8 sqrt(k/n) sigma_max
  double inv_freq = 0.0;        // inverse deviation >= 8 sqrt(k/n) / sigma_min
  double bound = 0.0;           // 2 exp(-k/2), applies to each event
  double cov_threshold = 0.0;
  double inv_threshold = 0.0;
};

/// Empirical frequencies of the two spectral deviation events over seeded
/// replicates of an n-by-k standard design drawn from Sigma. The inverse
/// event needs Sigma invertible; replicates with a singular sample Gram
/// matrix count as deviations.
inline ConcentrationResult concentration_check(const CovarianceModel& sigma, int k,
                                               int n, int replicates,
                                               std::uint64_t seed) {
  if (replicates < 1) throw ArgumentError("replicates must be >= 1");
  if (k != sigma.p()) throw ArgumentError("k must equal the dimension of Sigma");
  if (k > n) throw ArgumentError("need k <= n");

  Eigen::SelfAdjointEigenSolver<Matrix> es(sigma.matrix());
  const double sigma_max = es.eigenvalues().maxCoeff();
  const double sigma_min = es.eigenvalues().minCoeff();
  const double rate = 8.0 * std::sqrt(static_cast<double>(k) / n);

  ConcentrationResult out;
  out.bound = 2.0 * std::exp(-k / 2.0);
  out.cov_threshold = rate * sigma_max;
  out.inv_threshold = sigma_min > 0 ? rate / sigma_min
                                    : std::numeric_limits<double>::quiet_NaN();
  Matrix sigma_inv;
  if (sigma_min > 1e-12) sigma_inv = sigma.matrix().inverse();

  long cov_hits = 0, inv_hits = 0;
  for (int r = 0; r < replicates; ++r) {
    CounterRng rng(seed, static_cast<std::uint64_t>(r) + 1);
    Matrix X = sample_gaussian_design(sigma, n, rng);
    Matrix gram = Matrix::Zero(k, k);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose(), 1.0 / n);
    gram = gram.selfadjointView<Eigen::Lower>();

    Eigen::SelfAdjointEigenSolver<Matrix> dev(gram - sigma.matrix(),
                                              Eigen::EigenvaluesOnly);
    double cov_dev = dev.eigenvalues().cwiseAbs().maxCoeff();
    if (cov_dev >= out.cov_threshold) ++cov_hits;

    if (sigma_min > 1e-12) {
      Eigen::SelfAdjointEigenSolver<Matrix> ges(gram, Eigen::EigenvaluesOnly);
      if (ges.eigenvalues().minCoeff() <= 0) {
        ++inv_hits;  // sample Gram not invertible: infinite deviation
      } else {
        Eigen::SelfAdjointEigenSolver<Matrix> idev(
            Matrix(gram.inverse()) - sigma_inv, Eigen::EigenvaluesOnly);
        if (idev.eigenvalues().cwiseAbs().maxCoeff() >= out.inv_threshold) ++inv_hits;
      }
    }
  }
  out.cov_freq = static_cast<double>(cov_hits) / replicates;
  out.inv_freq = sigma_min > 1e-12 ? static_cast<double>(inv_hits) / replicates
                                   : std::numeric_limits<double>::quiet_NaN();
  return out;
}

}  // namespace glselect
