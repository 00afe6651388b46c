#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "glselect/core.hpp"
#include "glselect/gauss_lasso.hpp"
#include "glselect/lasso.hpp"
#include "glselect/rng.hpp"

namespace glselect {

/// Named tabular data with one designated response column and a mask of
/// originally-missing cells. prune_mode records how the column set was
/// reduced ("explicit", "rank-greedy", or empty when untouched).
struct Dataset {
  std::vector<std::string> names;  // predictor column names (response excluded)
  std::string response_name;
  Matrix X;
  Vector y;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> missing_X;
  Eigen::Array<bool, Eigen::Dynamic, 1> missing_y;
  std::string prune_mode;

  int n() const { return static_cast<int>(X.rows()); }
  int p() const { return static_cast<int>(X.cols()); }
  bool has_missing() const { return missing_X.any() || missing_y.any(); }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(trim(tok));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace detail

/// Header-row CSV -> Dataset. Cells equal to missing_token are masked;
/// anything else must parse as a number, reported with its row number and
/// column name otherwise.
inline Dataset load_csv(std::istream& is, const std::string& response_name,
                        const std::string& missing_token = "?") {
  std::string line;
  if (!std::getline(is, line)) throw ParseError("empty CSV: no header row");
  auto header = detail::split_csv_line(line);
  int resp_col = -1;
  for (size_t j = 0; j < header.size(); ++j)
    if (header[j] == response_name) {
      if (resp_col >= 0) throw ParseError("response column '" + response_name +
                                          "' appears more than once");
      resp_col = static_cast<int>(j);
    }
  if (resp_col < 0)
    throw ParseError("response column '" + response_name + "' not found in header");

  Dataset ds;
  ds.response_name = response_name;
  for (size_t j = 0; j < header.size(); ++j)
    if (static_cast<int>(j) != resp_col) ds.names.push_back(header[j]);

  std::vector<std::vector<double>> xrows;
  std::vector<std::vector<bool>> xmask;
  std::vector<double> yvals;
  std::vector<bool> ymask;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw ParseError("row " + std::to_string(lineno) + " has " +
                       std::to_string(cells.size()) + " fields, expected " +
                       std::to_string(header.size()));
    std::vector<double> xr;
    std::vector<bool> mr;
    for (size_t j = 0; j < cells.size(); ++j) {
      double val = 0.0;
      bool miss = (cells[j] == missing_token);
      if (!miss) {
        try {
          size_t pos = 0;
          val = std::stod(cells[j], &pos);
          if (pos != cells[j].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
          throw ParseError("row " + std::to_string(lineno) + ", column '" +
                           header[j] + "': cannot parse '" + cells[j] + "'");
        }
      }
      if (static_cast<int>(j) == resp_col) {
        yvals.push_back(val);
        ymask.push_back(miss);
      } else {
        xr.push_back(val);
        mr.push_back(miss);
      }
    }
    xrows.push_back(std::move(xr));
    xmask.push_back(std::move(mr));
  }
  if (xrows.empty()) throw ParseError("CSV has a header but no data rows");

  const int n = static_cast<int>(xrows.size());
  const int p = static_cast<int>(ds.names.size());
  ds.X.resize(n, p);
  ds.missing_X.resize(n, p);
  ds.y.resize(n);
  ds.missing_y.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) {
      ds.X(i, j) = xmask[i][j] ? std::numeric_limits<double>::quiet_NaN() : xrows[i][j];
      ds.missing_X(i, j) = xmask[i][j];
    }
    ds.y[i] = ymask[i] ? std::numeric_limits<double>::quiet_NaN() : yvals[i];
    ds.missing_y[i] = ymask[i];
  }
  return ds;
}

inline Dataset load_csv(const std::string& path, const std::string& response_name,
                        const std::string& missing_token = "?") {
  std::ifstream f(path);
  if (!f) throw ArgumentError("cannot open '" + path + "'");
  return load_csv(f, response_name, missing_token);
}

/// Replaces each masked cell by the mean of its column's observed values.
inline Dataset impute_missing(const Dataset& in) {
  Dataset ds = in;
  const int n = ds.n(), p = ds.p();
  for (int j = 0; j < p; ++j) {
    double sum = 0.0;
    int cnt = 0;
    for (int i = 0; i < n; ++i)
      if (!ds.missing_X(i, j)) {
        sum += ds.X(i, j);
        ++cnt;
      }
    if (cnt == 0)
      throw ArgumentError("column '" + ds.names[j] + "' has no observed values");
    double mean = sum / cnt;
    for (int i = 0; i < n; ++i)
      if (ds.missing_X(i, j)) ds.X(i, j) = mean;
  }
  {
    double sum = 0.0;
    int cnt = 0;
    for (int i = 0; i < n; ++i)
      if (!ds.missing_y[i]) {
        sum += ds.y[i];
        ++cnt;
      }
    if (cnt == 0)
      throw ArgumentError("response column '" + ds.response_name +
                          "' has no observed values");
    double mean = sum / cnt;
    for (int i = 0; i < n; ++i)
      if (ds.missing_y[i]) ds.y[i] = mean;
  }
  ds.missing_X.setConstant(false);
  ds.missing_y.setConstant(false);
  return ds;
}

namespace detail {

inline Dataset keep_predictors(const Dataset& in, const std::vector<int>& keep,
                               std::string mode) {
  Dataset ds;
  ds.response_name = in.response_name;
  ds.y = in.y;
  ds.missing_y = in.missing_y;
  ds.prune_mode = std::move(mode);
  ds.X.resize(in.n(), keep.size());
  ds.missing_X.resize(in.n(), keep.size());
  for (size_t a = 0; a < keep.size(); ++a) {
    ds.names.push_back(in.names[keep[a]]);
    ds.X.col(a) = in.X.col(keep[a]);
    ds.missing_X.col(a) = in.missing_X.col(keep[a]);
  }
  return ds;
}

}  // namespace detail

/// Drops the named predictor columns; every name must exist.
inline Dataset prune_columns(const Dataset& in, const std::vector<std::string>& drop) {
  std::vector<char> dead(in.p(), 0);
  for (const std::string& name : drop) {
    auto it = std::find(in.names.begin(), in.names.end(), name);
    if (it == in.names.end())
      throw ArgumentError("cannot drop unknown column '" + name + "'");
    dead[it - in.names.begin()] = 1;
  }
  std::vector<int> keep;
  for (int j = 0; j < in.p(); ++j)
    if (!dead[j]) keep.push_back(j);
  return detail::keep_predictors(in, keep, "explicit");
}

/// Drops rank-deficient predictor columns: a column-pivoted QR run keeps the
/// pivot columns whose diagonal magnitude stays above 1e-10 relative to the
/// leading one. Requires imputed data.
inline Dataset prune_columns_rank_greedy(const Dataset& in) {
  if (in.has_missing())
    throw ArgumentError("rank-greedy pruning requires imputed data");
  Eigen::ColPivHouseholderQR<Matrix> qr(in.X);
  Matrix R = qr.matrixR().topLeftCorner(std::min(in.n(), in.p()), in.p());
  double lead = std::abs(R(0, 0));
  double thresh = 1e-10 * std::max(1.0, lead);
  int rank = 0;
  for (int k = 0; k < std::min(in.n(), in.p()); ++k) {
    if (std::abs(R(k, k)) < thresh) break;
    ++rank;
  }
  std::vector<int> keep;
  auto perm = qr.colsPermutation().indices();
  std::vector<char> kept(in.p(), 0);
  for (int k = 0; k < rank; ++k) kept[perm[k]] = 1;
  for (int j = 0; j < in.p(); ++j)
    if (kept[j]) keep.push_back(j);
  return detail::keep_predictors(in, keep, "rank-greedy");
}

/// Centers every column; predictors additionally rescaled to l2 norm
/// sqrt(n). The response is centered only. Idempotent. Requires imputed
/// data; a (post-centering) zero column is an error.
inline Dataset standardize(const Dataset& in) {
  if (in.has_missing()) throw ArgumentError("standardize requires imputed data");
  Dataset ds = in;
  const int n = ds.n();
  const double root_n = std::sqrt(static_cast<double>(n));
  for (int j = 0; j < ds.p(); ++j) {
    double scale_ref = std::max(1.0, ds.X.col(j).cwiseAbs().maxCoeff());
    ds.X.col(j).array() -= ds.X.col(j).mean();
    double nrm = ds.X.col(j).norm();
    if (nrm <= 1e-13 * root_n * scale_ref)
      throw ArgumentError("column '" + ds.names[j] + "' is constant");
    ds.X.col(j) *= root_n / nrm;
  }
  ds.y.array() -= ds.y.mean();
  return ds;
}

inline RegressionInstance to_instance(const Dataset& ds) {
  if (ds.has_missing()) throw ArgumentError("instance requires imputed data");
  return RegressionInstance(ds.X, ds.y);
}

/// Exact least-squares solution on all predictor columns, via QR.
inline Vector full_ols(const Dataset& ds) {
  if (ds.has_missing()) throw ArgumentError("full_ols requires imputed data");
  if (ds.n() < ds.p())
    throw RankError("full OLS needs n >= p (" + std::to_string(ds.n()) + " < " +
                    std::to_string(ds.p()) + ")");
  Eigen::ColPivHouseholderQR<Matrix> qr(ds.X);
  qr.setThreshold(1e-10);
  if (qr.rank() < ds.p())
    throw RankError("design is rank-deficient (rank " + std::to_string(qr.rank()) +
                    " < p = " + std::to_string(ds.p()) + "); prune columns first");
  return qr.solve(ds.y);
}

/// Rows of the dataset restricted to the given (sorted) index list.
inline Dataset subsample_rows(const Dataset& in, const IndexSet& rows) {
  Dataset ds;
  ds.names = in.names;
  ds.response_name = in.response_name;
  ds.prune_mode = in.prune_mode;
  ds.X.resize(rows.size(), in.p());
  ds.missing_X.resize(rows.size(), in.p());
  ds.y.resize(rows.size());
  ds.missing_y.resize(rows.size());
  for (size_t a = 0; a < rows.size(); ++a) {
    if (rows[a] < 0 || rows[a] >= in.n()) throw ArgumentError("row index out of range");
    ds.X.row(a) = in.X.row(rows[a]);
    ds.missing_X.row(a) = in.missing_X.row(rows[a]);
    ds.y[a] = in.y[rows[a]];
    ds.missing_y[a] = in.missing_y[rows[a]];
  }
  return ds;
}

/// Writes the dataset back out as CSV (predictors in order, response last).
inline void write_dataset_csv(const Dataset& ds, std::ostream& os) {
  for (const auto& name : ds.names) os << name << ",";
  os << ds.response_name << "\n";
  for (int i = 0; i < ds.n(); ++i) {
    for (int j = 0; j < ds.p(); ++j)
      os << (ds.missing_X(i, j) ? "?" : format_double(ds.X(i, j))) << ",";
    os << (ds.missing_y[i] ? "?" : format_double(ds.y[i])) << "\n";
  }
}

// ---------------------------------------------------------------------------
// Crime-data style demo
// ---------------------------------------------------------------------------

struct CrimeDemoOptions {
  int n_sub = 85;
  double significance_threshold = 0.04;
  double lasso_zero_threshold = 0.005;
  Vector lambda_grid;  // strictly decreasing
  std::uint64_t seed = 0;
  LassoSettings solver;
};

struct OperatingPoint {
  double lambda = 0.0;
  int tp = -1, fp = -1;  // -1 marks a failed path point
};

struct CrimeDemoReport {
  int s0 = 0;
  IndexSet significant;  // predictor indices with |full-data OLS coef| > threshold
  std::string prune_mode;
  std::uint64_t seed = 0;
  int n_sub = 0;
  double significance_threshold = 0.0;
  double lasso_zero_threshold = 0.0;
  IndexSet subsample;
  std::vector<std::string> names;
  std::vector<OperatingPoint> lasso_points;
  std::vector<OperatingPoint> gl_points;
  LassoPath lasso;
  GaussLassoPath gauss_lasso;
};

/// On a preprocessed dataset: label the "truly" relevant columns by
/// thresholding the full-data OLS solution, draw a seeded row subsample,
/// re-standardize it, and trace Lasso and two-stage selector paths over the
/// grid, reporting per-lambda true/false positive counts for both methods.
inline CrimeDemoReport crime_demo(const Dataset& ds, const CrimeDemoOptions& opt) {
  if (ds.has_missing()) throw ArgumentError("demo requires a preprocessed dataset");
  for (int j = 0; j < ds.p(); ++j)
    if (std::abs(ds.X.col(j).mean()) > 1e-6)
      throw ArgumentError("demo requires a standardized dataset (column '" +
                          ds.names[j] + "' is not centered)");
  validate_grid(opt.lambda_grid);
  if (opt.n_sub < 1 || opt.n_sub > ds.n())
    throw ArgumentError("n_sub must be in [1, n]");

  CrimeDemoReport rep;
  rep.prune_mode = ds.prune_mode.empty() ? "none" : ds.prune_mode;
  rep.seed = opt.seed;
  rep.n_sub = opt.n_sub;
  rep.significance_threshold = opt.significance_threshold;
  rep.lasso_zero_threshold = opt.lasso_zero_threshold;
  rep.names = ds.names;

  Vector theta_full = full_ols(ds);
  for (int j = 0; j < ds.p(); ++j)
    if (std::abs(theta_full[j]) > opt.significance_threshold)
      rep.significant.push_back(j);
  rep.s0 = static_cast<int>(rep.significant.size());
  if (rep.s0 < 1)
    throw ArgumentError("no significant columns at threshold " +
                        format_double(opt.significance_threshold));

  CounterRng rng(opt.seed);
  rep.subsample = sample_without_replacement(ds.n(), opt.n_sub, rng);
  Dataset sub = standardize(subsample_rows(ds, rep.subsample));
  RegressionInstance inst = to_instance(sub);

  rep.lasso = lasso_path(inst, opt.lambda_grid, opt.solver);
  rep.gauss_lasso = gauss_lasso_path(inst, opt.lambda_grid, rep.s0, opt.solver);

  std::vector<char> truly(ds.p(), 0);
  for (int j : rep.significant) truly[j] = 1;
  for (Eigen::Index k = 0; k < opt.lambda_grid.size(); ++k) {
    OperatingPoint lp;
    lp.lambda = opt.lambda_grid[k];
    lp.tp = lp.fp = 0;
    for (int j = 0; j < ds.p(); ++j) {
      if (std::abs(rep.lasso.coefficients(k, j)) > opt.lasso_zero_threshold)
        (truly[j] ? lp.tp : lp.fp)++;
    }
    rep.lasso_points.push_back(lp);

    OperatingPoint gp;
    gp.lambda = opt.lambda_grid[k];
    const GaussLassoPoint& pt = rep.gauss_lasso.points[k];
    if (pt.ok) {
      gp.tp = gp.fp = 0;
      for (int j : pt.sel.S_hat) (truly[j] ? gp.tp : gp.fp)++;
    }
    rep.gl_points.push_back(gp);
  }
  return rep;
}

}  // namespace glselect
