#pragma once

// JSON views of the library's result types. Index sets are serialized
// 1-based to match the column naming of the CSV outputs (coef_1...coef_p);
// non-finite reals become null.

#include <json.hpp>

#include "glselect/conditions.hpp"
#include "glselect/data_pipeline.hpp"
#include "glselect/experiments.hpp"
#include "glselect/gauss_lasso.hpp"
#include "glselect/population.hpp"
#include "glselect/version.hpp"

namespace glselect {

using Json = nlohmann::json;

inline Json json_number(double x) {
  if (std::isfinite(x)) return x;
  return nullptr;
}

inline Json to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(json_number(v[i]));
  return a;
}

inline Json to_json(const IntVector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Json one_based(const IndexSet& s) {
  Json a = Json::array();
  for (int i : s) a.push_back(i + 1);
  return a;
}

inline Json to_json(const ExtendedSupport& ext) {
  Json j;
  j["T_star"] = one_based(ext.support.T);
  j["v0"] = to_json(ext.support.v);
  j["xi0"] = ext.xi0_unbounded() ? Json(nullptr) : Json(ext.xi0);
  j["xi0_unbounded"] = ext.xi0_unbounded();
  j["u0"] = to_json(ext.u0);
  return j;
}

inline Json to_json(const SelectionResult& sel) {
  Json j;
  j["lambda"] = sel.lambda;
  j["T"] = one_based(sel.T);
  j["S_hat"] = one_based(sel.S_hat);
  j["theta_gl"] = to_json(sel.theta_gl);
  j["theta_lasso"] = to_json(sel.theta_lasso);
  j["flags"] = {{"t_larger_than_n", sel.flags.t_larger_than_n},
                {"t_smaller_than_s0", sel.flags.t_smaller_than_s0}};
  return j;
}

inline Json to_json(const ConditionReport& r) {
  Json j;
  j["regime"] = r.regime == Regime::deterministic ? "deterministic" : "random";
  j["p"] = r.p;
  j["n"] = r.n;
  j["s0"] = r.s0;
  j["t0"] = r.t0;
  j["sigma"] = r.sigma;
  j["c1"] = r.c1;
  j["c2"] = r.c2;
  j["t_star"] = one_based(r.t_star);
  j["v0"] = to_json(r.v0);
  j["eta_irr"] = json_number(r.eta_irr);
  j["eta_gic"] = json_number(r.eta_gic);
  j["c_min"] = json_number(r.c_min);
  j["kappa"] = json_number(r.kappa.value);
  j["kappa_certificate"] = r.kappa.certificate == KappaCertificate::exact
                               ? "exact"
                               : "heuristic-upper";
  j["op_norm"] = json_number(r.op_norm);
  j["inflation"] = json_number(r.inflation);
  j["lambda"] = json_number(r.lambda);
  j["w_abs"] = to_json(r.w_abs);
  j["theta_min_required"] = to_json(r.theta_min_required);
  j["detection_level"] = json_number(r.detection_level);
  j["m1"] = json_number(r.m1);
  j["m3"] = json_number(r.m3);
  j["m1_tilde"] = json_number(r.m1_tilde);
  j["m3_tilde"] = json_number(r.m3_tilde);
  j["n_min"] = r.n_min;
  j["probability_bound"] = json_number(r.probability_bound);
  j["passes"] = {{"normalization", r.pass_normalization},
                 {"c_min", r.pass_c_min},
                 {"gic", r.pass_gic},
                 {"theta_min_on_S", r.pass_theta_min_on_S},
                 {"theta_min_off_S", r.pass_theta_min_off_S},
                 {"eta_c2", r.pass_eta_c2},
                 {"n", r.pass_n},
                 {"all", r.pass_all}};
  return j;
}

inline Json to_json(const ResultTable& t) {
  Json rows = Json::array();
  for (const ResultRow& r : t.rows) {
    rows.push_back({{"sweep", r.sweep_key},
                    {"lambda", json_number(r.lambda)},
                    {"replicates", r.replicates},
                    {"failures", r.failures},
                    {"lasso_sign_ok_freq", r.lasso_sign_freq},
                    {"lasso_sign_ok_ci", r.lasso_sign_ci},
                    {"lasso_truth_sign_freq", r.lasso_truth_sign_freq},
                    {"lasso_truth_sign_ci", r.lasso_truth_sign_ci},
                    {"gl_support_freq", r.gl_freq},
                    {"gl_support_ci", r.gl_ci},
                    {"mean_gl_sup_err", json_number(r.mean_gl_sup_err)},
                    {"mean_t_size", json_number(r.mean_t_size)},
                    {"implication_violations", r.implication_violations}});
  }
  return Json{{"rows", rows}};
}

inline Json to_json(const CrimeDemoReport& rep) {
  auto points = [](const std::vector<OperatingPoint>& pts) {
    Json a = Json::array();
    for (const OperatingPoint& p : pts)
      a.push_back({{"lambda", p.lambda}, {"tp", p.tp}, {"fp", p.fp}});
    return a;
  };
  Json j;
  j["schema_version"] = 1;
  j["s0"] = rep.s0;
  j["mode"] = rep.prune_mode;
  j["seed"] = rep.seed;
  j["n_sub"] = rep.n_sub;
  j["significance_threshold"] = rep.significance_threshold;
  j["lasso_zero_threshold"] = rep.lasso_zero_threshold;
  j["significant"] = one_based(rep.significant);
  Json names = Json::array();
  for (int i : rep.significant) names.push_back(rep.names[i]);
  j["significant_names"] = names;
  j["subsample_rows"] = one_based(rep.subsample);
  j["lasso"] = points(rep.lasso_points);
  j["gauss_lasso"] = points(rep.gl_points);
  // widely-cited operating points for this dataset, for side-by-side reading
  j["reference_operating_points"] = {
      {{"method", "lasso"}, {"lambda", 0.08}, {"tp", 4}, {"fp", 4}},
      {{"method", "lasso"}, {"lambda", 0.01}, {"tp", 10}, {"fp", 8}}};
  return j;
}

/// Run manifest written next to every CLI output.
inline Json make_manifest(const std::vector<std::string>& argv, std::uint64_t seed,
                          double wall_time_s) {
  Json j;
  j["argv"] = argv;
  j["seed"] = seed;
  j["schema_version"] = 1;
  j["wall_time_s"] = wall_time_s;
  j["library_version"] = kVersion;
  return j;
}

}  // namespace glselect
