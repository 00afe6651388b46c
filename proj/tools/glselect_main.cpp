// Command-line front end: fitting, selection, paths, condition diagnostics,
// Monte Carlo simulation, CSV preprocessing, and the crime-data demo.
//
// Exit codes: 0 success (including diagnose reports with failed conditions),
// 1 domain errors (bad data, solver failures), 2 usage errors.

#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "glselect/glselect.hpp"
#include "glselect/io.hpp"

namespace fs = std::filesystem;
using namespace glselect;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  std::string output_dir = ".";
  std::string format = "json";
  std::vector<std::string> argv;
  std::chrono::steady_clock::time_point t0;
};

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream f(path);
  if (!f) throw ArgumentError("cannot write '" + path.string() + "'");
  f << content;
}

void finish(const Globals& g, bool seed_used) {
  double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - g.t0).count();
  Json manifest = make_manifest(g.argv, seed_used ? g.seed : 0, wall);
  fs::create_directories(g.output_dir);
  write_text(fs::path(g.output_dir) / "manifest.json", manifest.dump(2) + "\n");
}

RegressionInstance load_instance(const std::string& input, const std::string& response,
                                 const std::string& missing_token) {
  Dataset ds = load_csv(input, response, missing_token);
  if (ds.has_missing())
    throw ArgumentError("input has missing cells; run `preprocess` first");
  return to_instance(ds);
}

Vector parse_vector(const std::string& csv) {
  auto toks = detail::split_commas(csv);
  Vector v(toks.size());
  for (size_t i = 0; i < toks.size(); ++i)
    v[i] = detail::parse_double("theta0", toks[i]);
  return v;
}

std::vector<std::string> read_name_list(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ArgumentError("cannot open '" + path + "'");
  std::vector<std::string> names;
  std::string line;
  while (std::getline(f, line))
    for (const auto& tok : detail::split_commas(line))
      if (!tok.empty()) names.push_back(tok);
  return names;
}

void print_condition_table(const ConditionReport& r, std::ostream& os) {
  auto row = [&](const char* name, bool ok, const std::string& detail) {
    os << (ok ? "  [pass] " : "  [FAIL] ") << name;
    if (!detail.empty()) os << "  (" << detail << ")";
    os << "\n";
  };
  os << "condition report (" << (r.regime == Regime::deterministic ? "deterministic" : "random")
     << " regime, p=" << r.p << ", n=" << r.n << ", s0=" << r.s0 << ", t0=" << r.t0
     << ")\n";
  row("diagonal normalization", r.pass_normalization, "");
  row("C_min > 0 on T*", r.pass_c_min, "C_min=" + format_double(r.c_min));
  row("generalized irrepresentability", r.pass_gic,
      "eta_gic=" + format_double(r.eta_gic) + ", eta_irr=" + format_double(r.eta_irr));
  row("theta_min on S", r.pass_theta_min_on_S, "lambda=" + format_double(r.lambda));
  row("inverse entries off S", r.pass_theta_min_off_S, "c2=" + format_double(r.c2));
  row("eta <= c2 sqrt(C_min)", r.pass_eta_c2, "");
  row("sample size", r.pass_n, "n_min=" + std::to_string(r.n_min));
  os << (r.pass_all ? "  => all conditions hold" : "  => some conditions fail")
     << "; probability bound " << format_double(r.probability_bound) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  Globals g;
  g.t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < argc; ++i) g.argv.push_back(argv[i]);

  CLI::App app{"Two-stage sparse selection: Lasso fitting, support selection, "
               "population diagnostics, and seeded experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--seed", g.seed, "Master RNG seed")->capture_default_str();
  app.add_option("--output-dir", g.output_dir, "Directory for result files")
      ->capture_default_str();
  app.add_option("--format", g.format, "Primary output format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();

  std::string input, response = "y", missing_token = "?";
  double lambda = 0.0;
  int s0 = 0;

  // ---- fit ----------------------------------------------------------------
  auto* fit_cmd = app.add_subcommand("fit", "Solve one Lasso problem from a CSV");
  fit_cmd->add_option("--input", input, "CSV with a header row")->required();
  fit_cmd->add_option("--response", response, "Response column name")
      ->capture_default_str();
  fit_cmd->add_option("--lambda", lambda, "Regularization level")->required();
  fit_cmd->callback([&]() {
    RegressionInstance inst = load_instance(input, response, missing_token);
    Vector theta = fit_lasso(inst, lambda);
    KktReport kkt = verify_kkt(inst, lambda, theta);
    SignedSupport ss = signed_support(theta);
    fs::create_directories(g.output_dir);
    if (g.format == "csv") {
      LassoPath single;
      single.lambdas = Vector::Constant(1, lambda);
      single.coefficients = theta.transpose();
      single.supports = {ss};
      std::ostringstream os;
      write_path_csv(single, os);
      write_text(fs::path(g.output_dir) / "fit.csv", os.str());
      std::cout << os.str();
    } else {
      Json j{{"lambda", lambda},
             {"theta", to_json(theta)},
             {"support", one_based(ss.T)},
             {"kkt", {{"max_violation", kkt.max_violation}, {"ok", kkt.ok}}}};
      write_text(fs::path(g.output_dir) / "fit.json", j.dump(2) + "\n");
      std::cout << j.dump(2) << "\n";
    }
    finish(g, false);
  });

  // ---- select -------------------------------------------------------------
  auto* select_cmd =
      app.add_subcommand("select", "Two-stage selection: Lasso support, OLS refit, "
                                   "keep the s0 largest coefficients");
  select_cmd->add_option("--input", input)->required();
  select_cmd->add_option("--response", response)->capture_default_str();
  select_cmd->add_option("--lambda", lambda)->required();
  select_cmd->add_option("--s0", s0, "Number of coefficients to keep")->required();
  select_cmd->callback([&]() {
    RegressionInstance inst = load_instance(input, response, missing_token);
    SelectionResult sel = select(inst, lambda, s0);
    fs::create_directories(g.output_dir);
    Json j = to_json(sel);
    write_text(fs::path(g.output_dir) / "select.json", j.dump(2) + "\n");
    std::cout << j.dump(2) << "\n";
    finish(g, false);
  });

  // ---- path ---------------------------------------------------------------
  double lambda_max = 0.0, lambda_min = 0.0;
  int points = 50;
  std::string lambdas_csv;
  auto* path_cmd = app.add_subcommand(
      "path", "Trace coefficient paths over a decreasing lambda grid");
  path_cmd->add_option("--input", input)->required();
  path_cmd->add_option("--response", response)->capture_default_str();
  path_cmd->add_option("--lambda-max", lambda_max,
                       "Grid upper end (default: smallest all-zero lambda)");
  path_cmd->add_option("--lambda-min", lambda_min, "Grid lower end");
  path_cmd->add_option("--points", points, "Grid size")->capture_default_str();
  path_cmd->add_option("--lambdas", lambdas_csv,
                       "Explicit comma-separated decreasing grid (overrides the "
                       "geometric grid options)");
  path_cmd->add_option("--s0", s0,
                       "Also trace the two-stage selector path keeping s0 "
                       "coefficients");
  path_cmd->callback([&]() {
    RegressionInstance inst = load_instance(input, response, missing_token);
    Vector grid;
    if (!lambdas_csv.empty()) {
      grid = parse_vector(lambdas_csv);
    } else {
      double hi = lambda_max > 0 ? lambda_max : max_lambda(inst);
      double lo = lambda_min > 0 ? lambda_min : hi / 100.0;
      grid = geometric_grid(hi, lo, points);
    }
    fs::create_directories(g.output_dir);
    LassoPath path = lasso_path(inst, grid);
    std::ostringstream os;
    write_path_csv(path, os);
    write_text(fs::path(g.output_dir) / "path.csv", os.str());
    std::cout << "wrote path.csv (" << grid.size() << " grid points)\n";
    if (s0 > 0) {
      GaussLassoPath gl = gauss_lasso_path(inst, grid, s0);
      std::ostringstream gs;
      write_gauss_lasso_path_csv(gl, inst.p(), gs);
      write_text(fs::path(g.output_dir) / "gauss_lasso_path.csv", gs.str());
      std::cout << "wrote gauss_lasso_path.csv\n";
    }
    finish(g, false);
  });

  // ---- diagnose -----------------------------------------------------------
  std::string design = "confounder", sigma_csv, theta0_csv, regime_name = "random";
  int dp = 0, ds0 = 0, dn = 1000;
  double da = 0.0, noise_sigma = 1.0, c1 = 2.0, c2 = 0.5;
  auto* diag_cmd = app.add_subcommand(
      "diagnose", "Evaluate recovery conditions for a population covariance");
  diag_cmd->add_option("--design", design, "confounder | explicit")
      ->check(CLI::IsMember({"confounder", "explicit"}))
      ->capture_default_str();
  diag_cmd->add_option("--p", dp, "Dimension (confounder design)");
  diag_cmd->add_option("--s0", ds0, "Support size (confounder design)");
  diag_cmd->add_option("--a", da, "Confounder coupling")->capture_default_str();
  diag_cmd->add_option("--sigma-csv", sigma_csv,
                       "Covariance matrix file (explicit design)");
  diag_cmd->add_option("--theta0", theta0_csv,
                       "Comma-separated coefficient vector (default: 1 on the "
                       "confounder support)");
  diag_cmd->add_option("--noise-sigma", noise_sigma, "Noise level")
      ->capture_default_str();
  diag_cmd->add_option("--n", dn, "Sample size for the report")->capture_default_str();
  diag_cmd->add_option("--c1", c1, "Probability-exponent constant (> 1)")
      ->capture_default_str();
  diag_cmd->add_option("--c2", c2, "Magnitude-condition constant")
      ->capture_default_str();
  diag_cmd->add_option("--regime", regime_name, "deterministic | random")
      ->check(CLI::IsMember({"deterministic", "random"}))
      ->capture_default_str();
  diag_cmd->callback([&]() {
    std::optional<CovarianceModel> M;
    Vector theta0;
    if (design == "confounder") {
      ConfounderDesign d(dp, ds0, da);
      M = confounder_covariance(d);
      if (!theta0_csv.empty()) {
        theta0 = parse_vector(theta0_csv);
      } else {
        theta0 = Vector::Zero(dp);
        for (int i = 0; i < ds0; ++i) theta0[i] = 1.0;
      }
    } else {
      if (sigma_csv.empty()) throw ArgumentError("explicit design needs --sigma-csv");
      std::ifstream f(sigma_csv);
      if (!f) throw ArgumentError("cannot open '" + sigma_csv + "'");
      M = CovarianceModel::population(read_matrix_csv(f));
      if (theta0_csv.empty()) throw ArgumentError("explicit design needs --theta0");
      theta0 = parse_vector(theta0_csv);
    }
    Regime regime =
        regime_name == "deterministic" ? Regime::deterministic : Regime::random;
    ConditionReport rep = theorem_report(*M, theta0, noise_sigma, dn, c1, c2, regime);
    fs::create_directories(g.output_dir);
    Json j = to_json(rep);
    write_text(fs::path(g.output_dir) / "report.json", j.dump(2) + "\n");
    std::cout << j.dump(2) << "\n";
    print_condition_table(rep, std::cout);
    finish(g, false);
  });

  // ---- simulate -----------------------------------------------------------
  std::string config_path;
  auto* sim_cmd = app.add_subcommand(
      "simulate", "Seeded Monte Carlo recovery experiment from a config file");
  sim_cmd->add_option("--config", config_path, "Experiment config file")->required();
  sim_cmd->callback([&]() {
    std::ifstream f(config_path);
    if (!f) throw ArgumentError("cannot open '" + config_path + "'");
    ExperimentConfig cfg = parse_experiment_config(f);
    if (app.count("--seed")) cfg.seed = g.seed;
    std::vector<SweepPoint> sweep;
    if (!cfg.sweep_param.empty()) {
      for (const std::string& v : cfg.sweep_values)
        sweep.push_back({Override{cfg.sweep_param, v}});
      if (sweep.empty())
        throw ArgumentError("sweep_param given but sweep_values is empty");
    } else {
      sweep.push_back({});
    }
    ResultTable table = recovery_curve(cfg, sweep);
    fs::create_directories(g.output_dir);
    std::ostringstream os;
    write_results_csv(table, os);
    write_text(fs::path(g.output_dir) / "results.csv", os.str());
    if (g.format == "json")
      write_text(fs::path(g.output_dir) / "results.json", to_json(table).dump(2) + "\n");
    std::cout << os.str();
    finish(g, true);
  });

  // ---- preprocess ---------------------------------------------------------
  std::string output_csv = "clean.csv", drop_file;
  bool rank_greedy = false;
  auto* prep_cmd = app.add_subcommand(
      "preprocess", "Impute missing cells, prune columns, and standardize");
  prep_cmd->add_option("--input", input)->required();
  prep_cmd->add_option("--response", response)->capture_default_str();
  prep_cmd->add_option("--missing-token", missing_token)->capture_default_str();
  prep_cmd->add_option("--drop", drop_file,
                       "File listing column names to drop (one per line or "
                       "comma separated)");
  prep_cmd->add_flag("--rank-greedy", rank_greedy,
                     "Drop rank-deficient columns automatically");
  prep_cmd->add_option("--output", output_csv, "Output CSV name")
      ->capture_default_str();
  prep_cmd->callback([&]() {
    if (!drop_file.empty() && rank_greedy)
      throw ArgumentError("--drop and --rank-greedy are mutually exclusive");
    Dataset ds = load_csv(input, response, missing_token);
    ds = impute_missing(ds);
    if (!drop_file.empty())
      ds = prune_columns(ds, read_name_list(drop_file));
    else if (rank_greedy)
      ds = prune_columns_rank_greedy(ds);
    ds = standardize(ds);
    fs::create_directories(g.output_dir);
    std::ostringstream os;
    write_dataset_csv(ds, os);
    write_text(fs::path(g.output_dir) / output_csv, os.str());
    std::cout << "wrote " << output_csv << ": n=" << ds.n() << ", p=" << ds.p()
              << ", prune mode: " << (ds.prune_mode.empty() ? "none" : ds.prune_mode)
              << "\n";
    finish(g, false);
  });

  // ---- demo-crime ---------------------------------------------------------
  CrimeDemoOptions demo_opts;
  double dmax = 1.0, dmin = 0.005;
  int dpoints = 50;
  auto* demo_cmd = app.add_subcommand(
      "demo-crime", "Subsampled support-recovery demo on a real dataset");
  demo_cmd->add_option("--input", input, "Raw CSV (missing cells allowed)")
      ->required();
  demo_cmd->add_option("--response", response)->capture_default_str();
  demo_cmd->add_option("--missing-token", missing_token)->capture_default_str();
  demo_cmd->add_option("--drop", drop_file, "Column elimination list file");
  demo_cmd->add_option("--n-sub", demo_opts.n_sub, "Subsample size")
      ->capture_default_str();
  demo_cmd->add_option("--sig-threshold", demo_opts.significance_threshold,
                       "Full-data coefficient magnitude that counts as relevant")
      ->capture_default_str();
  demo_cmd->add_option("--zero-threshold", demo_opts.lasso_zero_threshold,
                       "Lasso coefficient magnitude that counts as selected")
      ->capture_default_str();
  demo_cmd->add_option("--lambda-max", dmax)->capture_default_str();
  demo_cmd->add_option("--lambda-min", dmin)->capture_default_str();
  demo_cmd->add_option("--points", dpoints)->capture_default_str();
  demo_cmd->callback([&]() {
    Dataset ds = load_csv(input, response, missing_token);
    ds = impute_missing(ds);
    ds = drop_file.empty() ? prune_columns_rank_greedy(ds)
                           : prune_columns(ds, read_name_list(drop_file));
    ds = standardize(ds);
    demo_opts.lambda_grid = geometric_grid(dmax, dmin, dpoints);
    demo_opts.seed = g.seed;
    CrimeDemoReport rep = crime_demo(ds, demo_opts);
    fs::create_directories(g.output_dir);
    write_text(fs::path(g.output_dir) / "demo.json", to_json(rep).dump(2) + "\n");
    std::ostringstream lp, gp;
    write_path_csv(rep.lasso, lp);
    write_gauss_lasso_path_csv(rep.gauss_lasso, ds.p(), gp);
    write_text(fs::path(g.output_dir) / "lasso_path.csv", lp.str());
    write_text(fs::path(g.output_dir) / "gauss_lasso_path.csv", gp.str());
    std::cout << "demo: s0=" << rep.s0 << " significant columns (threshold "
              << format_double(rep.significance_threshold) << "), prune mode "
              << rep.prune_mode << ", n_sub=" << rep.n_sub << "\n";
    finish(g, true);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
