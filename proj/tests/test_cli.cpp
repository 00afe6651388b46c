// Spawns the installed binary and checks exit codes, output files, and the
// run manifest. POSIX-only (uses the shell for redirection).

#include <doctest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "glselect/data_pipeline.hpp"
#include "glselect/io.hpp"
#include "glselect/rng.hpp"

namespace fs = std::filesystem;
using glselect::Json;

namespace {

struct RunResult {
  int code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Runs `glselect <args>` with stdout/stderr captured in the scratch dir.
RunResult run_cli(const fs::path& scratch, const std::string& args) {
  fs::create_directories(scratch);
  fs::path out = scratch / "stdout.txt", err = scratch / "stderr.txt";
  std::string cmd = std::string("\"") + GLSELECT_CLI_PATH + "\" " + args + " > \"" +
                    out.string() + "\" 2> \"" + err.string() + "\"";
  int rc = std::system(cmd.c_str());
  RunResult r;
  r.code = (rc == -1) ? -1 : WEXITSTATUS(rc);
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

fs::path scratch_root() {
  static fs::path root = [] {
    fs::path p = fs::temp_directory_path() / "glselect_cli_tests";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

fs::path scratch(const std::string& name) { return scratch_root() / name; }

std::string fixture(const std::string& name) {
  return std::string(GLSELECT_TEST_DATA_DIR) + "/" + name;
}

// Small standardized dataset on disk for fit/select/path runs.
fs::path write_clean_csv(const fs::path& dir) {
  using namespace glselect;
  const int n = 24, p = 3;
  CounterRng rng(2024);
  Dataset ds;
  ds.X = rng.gaussian_matrix(n, p);
  ds.y = 1.5 * ds.X.col(0) - ds.X.col(2) + 0.05 * rng.gaussian_vector(n);
  ds.names = {"x1", "x2", "x3"};
  ds.response_name = "y";
  ds.missing_X.setConstant(n, p, false);
  ds.missing_y.setConstant(n, false);
  ds = standardize(ds);
  fs::create_directories(dir);
  fs::path file = dir / "clean.csv";
  std::ofstream f(file);
  write_dataset_csv(ds, f);
  return file;
}

Json read_json(const fs::path& p) {
  REQUIRE(fs::exists(p));
  return Json::parse(slurp(p));
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("help, usage errors, and unknown arguments") {
  RunResult help = run_cli(scratch("help"), "--help");
  CHECK(help.code == 0);
  for (const char* sub :
       {"fit", "select", "path", "diagnose", "simulate", "preprocess", "demo-crime"})
    CHECK(help.out.find(sub) != std::string::npos);

  CHECK(run_cli(scratch("nosub"), "").code == 2);
  CHECK(run_cli(scratch("badsub"), "frobnicate").code == 2);
  CHECK(run_cli(scratch("missing"), "fit").code == 2);  // required options absent
  RunResult badfmt = run_cli(scratch("badfmt"), "--format xml diagnose --p 4 --s0 2");
  CHECK(badfmt.code == 2);
  CHECK(badfmt.err.find("usage error:") != std::string::npos);
}

TEST_CASE("fit writes solution, KKT status, and a manifest") {
  fs::path dir = scratch("fit");
  fs::path csv = write_clean_csv(dir);
  fs::path out = dir / "out";
  RunResult r = run_cli(dir, "--output-dir \"" + out.string() + "\" fit --input \"" +
                                 csv.string() + "\" --lambda 0.4");
  REQUIRE(r.code == 0);

  Json fit = read_json(out / "fit.json");
  CHECK(fit["lambda"] == 0.4);
  CHECK(fit["theta"].size() == 3);
  CHECK(fit["kkt"]["ok"] == true);
  // Strong signal on x1 survives this shrinkage level; index is 1-based.
  bool has1 = false;
  for (const auto& i : fit["support"]) has1 |= (i == 1);
  CHECK(has1);

  Json man = read_json(out / "manifest.json");
  CHECK(man["schema_version"] == 1);
  CHECK(man["seed"] == 0);
  CHECK(man["wall_time_s"].get<double>() >= 0.0);
  bool saw_sub = false;
  for (const auto& a : man["argv"]) saw_sub |= (a == "fit");
  CHECK(saw_sub);
}

TEST_CASE("fit in CSV format mirrors the path layout") {
  fs::path dir = scratch("fitcsv");
  fs::path csv = write_clean_csv(dir);
  fs::path out = dir / "out";
  RunResult r = run_cli(dir, "--output-dir \"" + out.string() +
                                 "\" --format csv fit --input \"" + csv.string() +
                                 "\" --lambda 0.4");
  REQUIRE(r.code == 0);
  std::string body = slurp(out / "fit.csv");
  CHECK(body.rfind("lambda,coef_1,coef_2,coef_3\n", 0) == 0);
  CHECK(r.out == body);  // echoed to stdout
}

TEST_CASE("fit refuses un-imputed input") {
  fs::path dir = scratch("fitmiss");
  RunResult r = run_cli(dir, "--output-dir \"" + (dir / "out").string() +
                                 "\" fit --input \"" + fixture("fixture_missing.csv") +
                                 "\" --lambda 0.4");
  CHECK(r.code == 1);
  CHECK(r.err.find("preprocess") != std::string::npos);
}

TEST_CASE("select reports both stages") {
  fs::path dir = scratch("select");
  fs::path csv = write_clean_csv(dir);
  fs::path out = dir / "out";
  RunResult r = run_cli(dir, "--output-dir \"" + out.string() + "\" select --input \"" +
                                 csv.string() + "\" --lambda 0.3 --s0 2");
  REQUIRE(r.code == 0);
  Json sel = read_json(out / "select.json");
  CHECK(sel["lambda"] == 0.3);
  CHECK(sel["S_hat"].size() == 2);
  CHECK(sel["theta_gl"].size() == 3);
  CHECK(sel["flags"]["t_larger_than_n"] == false);
  // The engineered signal columns are x1 and x3 (1-based 1 and 3).
  CHECK(sel["S_hat"][0] == 1);
  CHECK(sel["S_hat"][1] == 3);
}

TEST_CASE("path traces grids, explicit or geometric") {
  fs::path dir = scratch("path");
  fs::path csv = write_clean_csv(dir);
  fs::path out = dir / "out";
  RunResult r = run_cli(dir, "--output-dir \"" + out.string() + "\" path --input \"" +
                                 csv.string() + "\" --points 8 --s0 2");
  REQUIRE(r.code == 0);
  std::istringstream path_csv(slurp(out / "path.csv"));
  std::string line;
  int lines = 0;
  while (std::getline(path_csv, line)) ++lines;
  CHECK(lines == 9);  // header + 8 grid points
  CHECK(fs::exists(out / "gauss_lasso_path.csv"));

  fs::path out2 = dir / "out2";
  r = run_cli(dir, "--output-dir \"" + out2.string() + "\" path --input \"" +
                       csv.string() + "\" --lambdas 0.5,0.25,0.1");
  REQUIRE(r.code == 0);
  std::string body = slurp(out2 / "path.csv");
  CHECK(body.find("\n0.5,") != std::string::npos);
  CHECK_FALSE(fs::exists(out2 / "gauss_lasso_path.csv"));  // no --s0 given

  r = run_cli(dir, "--output-dir \"" + (dir / "out3").string() + "\" path --input \"" +
                       csv.string() + "\" --lambdas 0.1,0.5");
  CHECK(r.code == 1);  // increasing grid is a domain error
}

TEST_CASE("diagnose exits zero even when conditions fail") {
  fs::path out = scratch("diag") / "out";
  RunResult r = run_cli(scratch("diag"),
                        "--output-dir \"" + out.string() +
                            "\" diagnose --design confounder --p 4 --s0 2 --a 0.6");
  REQUIRE(r.code == 0);
  Json rep = read_json(out / "report.json");
  CHECK(rep["passes"]["all"] == false);
  CHECK(rep["t_star"] == Json::array({1, 2, 4}));
  CHECK(rep["regime"] == "random");
  CHECK(r.out.find("[FAIL]") != std::string::npos);
  CHECK(r.out.find("condition report") != std::string::npos);
  CHECK(fs::exists(out / "manifest.json"));
}

TEST_CASE("diagnose accepts explicit covariances") {
  fs::path dir = scratch("diagx");
  fs::create_directories(dir);
  fs::path sig = dir / "sigma.csv";
  {
    std::ofstream f(sig);
    f << "1,0\n0,1\n";
  }
  fs::path out = dir / "out";
  RunResult r = run_cli(dir, "--output-dir \"" + out.string() +
                                 "\" diagnose --design explicit --sigma-csv \"" +
                                 sig.string() + "\" --theta0 1,0");
  REQUIRE(r.code == 0);
  Json rep = read_json(out / "report.json");
  CHECK(rep["t_star"] == Json::array({1}));
  CHECK(rep["eta_gic"] == 1.0);

  r = run_cli(dir, "diagnose --design explicit --theta0 1,0");
  CHECK(r.code == 1);  // no --sigma-csv
}

TEST_CASE("simulate is seed-deterministic, with a global override") {
  fs::path dir = scratch("sim");
  fs::create_directories(dir);
  fs::path cfg = dir / "exp.cfg";
  {
    std::ofstream f(cfg);
    f << "schema_version = 1\n"
         "design = confounder\n"
         "p = 4\ns0 = 2\na = 0.0\ntheta_min = 1\n"
         "n = 50\nnoise_sigma = 0.2\n"
         "lambda_rule = explicit\nlambda = 0.3\n"
         "replicates = 5\nseed = 7\n";
  }
  auto run_into = [&](const std::string& sub, const std::string& extra) {
    fs::path out = dir / sub;
    RunResult r = run_cli(dir, extra + " --output-dir \"" + out.string() +
                                   "\" simulate --config \"" + cfg.string() + "\"");
    REQUIRE(r.code == 0);
    return slurp(out / "results.csv");
  };
  std::string a = run_into("a", "");
  std::string b = run_into("b", "");
  CHECK(a == b);  // byte-identical rerun
  std::string c = run_into("c", "--seed 8");
  CHECK(a != c);  // the global seed overrides the config seed

  Json man = read_json(dir / "c" / "manifest.json");
  CHECK(man["seed"] == 8);
  Json results = read_json(dir / "a" / "results.json");
  REQUIRE(results["rows"].size() == 1);
  CHECK(results["rows"][0]["replicates"] == 5);
}

TEST_CASE("simulate sweeps and rejects bad configs") {
  fs::path dir = scratch("sweep");
  fs::create_directories(dir);
  fs::path cfg = dir / "sweep.cfg";
  {
    std::ofstream f(cfg);
    f << "schema_version = 1\np = 4\ns0 = 2\ntheta_min = 1\n"
         "n = 60\nnoise_sigma = 0.1\nlambda_rule = explicit\nlambda = 0.3\n"
         "replicates = 4\nseed = 3\n"
         "sweep_param = a\nsweep_values = 0.0, 0.3\n";
  }
  fs::path out = dir / "out";
  RunResult r = run_cli(dir, "--output-dir \"" + out.string() + "\" simulate --config \"" +
                                 cfg.string() + "\"");
  REQUIRE(r.code == 0);
  std::string body = slurp(out / "results.csv");
  CHECK(body.find("a=0.0,") != std::string::npos);
  CHECK(body.find("a=0.3,") != std::string::npos);

  fs::path bad = dir / "bad.cfg";
  {
    std::ofstream f(bad);
    f << "schema_version = 1\nwidget = 9\n";
  }
  r = run_cli(dir, "simulate --config \"" + bad.string() + "\"");
  CHECK(r.code == 1);
  CHECK(r.err.find("unknown config key") != std::string::npos);

  r = run_cli(dir, "simulate --config \"" + (dir / "nope.cfg").string() + "\"");
  CHECK(r.code == 1);
}

TEST_CASE("preprocess imputes, prunes, and standardizes") {
  fs::path dir = scratch("prep");
  fs::path out = dir / "out";
  RunResult r = run_cli(dir, "--output-dir \"" + out.string() +
                                 "\" preprocess --input \"" +
                                 fixture("fixture_missing.csv") + "\" --rank-greedy");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("prune mode: rank-greedy") != std::string::npos);
  std::string body = slurp(out / "clean.csv");
  CHECK(body.find('?') == std::string::npos);  // fully imputed

  using namespace glselect;
  Dataset ds = load_csv((out / "clean.csv").string(), "y");
  CHECK(ds.n() == 20);
  CHECK(ds.p() == 7);
  const double root_n = std::sqrt(20.0);
  for (int j = 0; j < ds.p(); ++j) {
    CHECK(std::abs(ds.X.col(j).mean()) <= 1e-10);
    CHECK(std::abs(ds.X.col(j).norm() - root_n) <= 1e-8 * root_n);
  }

  // Explicit column drops, via a names file.
  fs::create_directories(dir);
  fs::path drops = dir / "drop.txt";
  {
    std::ofstream f(drops);
    f << "x3\nx5\n";
  }
  fs::path out2 = dir / "out2";
  r = run_cli(dir, "--output-dir \"" + out2.string() + "\" preprocess --input \"" +
                       fixture("fixture_missing.csv") + "\" --drop \"" +
                       drops.string() + "\" --output pruned.csv");
  REQUIRE(r.code == 0);
  Dataset pruned = load_csv((out2 / "pruned.csv").string(), "y");
  CHECK(pruned.p() == 5);
  for (const auto& name : pruned.names) {
    CHECK(name != "x3");
    CHECK(name != "x5");
  }

  r = run_cli(dir, "preprocess --input \"" + fixture("fixture_missing.csv") +
                       "\" --drop \"" + drops.string() + "\" --rank-greedy");
  CHECK(r.code == 1);  // mutually exclusive
}

TEST_CASE("demo-crime runs the full pipeline on the bundled fixture") {
  fs::path dir = scratch("demo");
  fs::path out = dir / "out";
  std::string args = "--seed 3 --output-dir \"" + out.string() +
                     "\" demo-crime --input \"" + fixture("fixture_missing.csv") +
                     "\" --n-sub 15 --points 10 --lambda-max 1.0 --lambda-min 0.05";
  RunResult r = run_cli(dir, args);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("prune mode rank-greedy") != std::string::npos);

  Json demo = read_json(out / "demo.json");
  CHECK(demo["schema_version"] == 1);
  CHECK(demo["mode"] == "rank-greedy");
  CHECK(demo["seed"] == 3);
  CHECK(demo["n_sub"] == 15);
  CHECK(demo["s0"].get<int>() >= 1);
  CHECK(demo["lasso"].size() == 10);
  CHECK(demo["gauss_lasso"].size() == 10);
  CHECK(demo["subsample_rows"].size() == 15);
  CHECK(fs::exists(out / "lasso_path.csv"));
  CHECK(fs::exists(out / "gauss_lasso_path.csv"));
  Json man = read_json(out / "manifest.json");
  CHECK(man["seed"] == 3);

  // Same seed, same demo output bytes.
  fs::path out2 = dir / "out2";
  std::string args2 = "--seed 3 --output-dir \"" + out2.string() +
                      "\" demo-crime --input \"" + fixture("fixture_missing.csv") +
                      "\" --n-sub 15 --points 10 --lambda-max 1.0 --lambda-min 0.05";
  REQUIRE(run_cli(dir, args2).code == 0);
  CHECK(slurp(out / "demo.json") == slurp(out2 / "demo.json"));
}

}  // TEST_SUITE
