#pragma once

#include <ostream>

#include "glselect/core.hpp"
#include "glselect/lasso.hpp"

namespace glselect {

/// Least-squares refit restricted to columns T, solved through the normal
/// equations (X_T^T X_T)^{-1} X_T^T Y as the estimator is defined. Returns a
/// full-length vector with zeros off T. Refuses |T| > n outright and designs
/// whose normal matrix has condition number above 1e12.
inline Vector ols_restricted(const RegressionInstance& inst, const IndexSet& T) {
  const int n = inst.n(), p = inst.p();
  const int t = static_cast<int>(T.size());
  if (t > n)
    throw RankError("restricted OLS refused: |T| = " + std::to_string(t) +
                    " exceeds n = " + std::to_string(n));
  Vector theta = Vector::Zero(p);
  if (t == 0) return theta;
  Matrix Xt(n, t);
  for (int a = 0; a < t; ++a) {
    if (T[a] < 0 || T[a] >= p) throw ArgumentError("index out of range");
    Xt.col(a) = inst.X.col(T[a]);
  }
  Matrix G = Xt.transpose() * Xt;
  Eigen::SelfAdjointEigenSolver<Matrix> es(G, Eigen::EigenvaluesOnly);
  double mn = es.eigenvalues().minCoeff(), mx = es.eigenvalues().maxCoeff();
  if (mn <= 0 || mx / mn > 1e12)
    throw LinearAlgebraError("restricted normal matrix is ill-conditioned "
                             "(condition number > 1e12)");
  Vector coef = Eigen::LDLT<Matrix>(G).solve(Xt.transpose() * inst.Y);
  for (int a = 0; a < t; ++a) theta[T[a]] = coef[a];
  return theta;
}

struct SelectionFlags {
  bool t_larger_than_n = false;   // OLS stage was refused
  bool t_smaller_than_s0 = false; // fewer Lasso-active columns than requested
};

/// Output of the two-stage selector: the Lasso support T, the refitted
/// coefficients, and the s0 largest-magnitude refitted coordinates S_hat.
struct SelectionResult {
  double lambda = 0.0;
  Vector theta_lasso;
  Vector theta_gl;
  IndexSet T;
  IndexSet S_hat;
  SelectionFlags flags;
};

/// Picks the s0 indices of T with largest |theta| (ties broken toward the
/// smaller index), returned sorted ascending.
inline IndexSet top_magnitude_indices(const Vector& theta, const IndexSet& T, int s0) {
  IndexSet order = T;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    double xa = std::abs(theta[a]), xb = std::abs(theta[b]);
    if (xa != xb) return xa > xb;
    return a < b;
  });
  if (static_cast<int>(order.size()) > s0) order.resize(s0);
  std::sort(order.begin(), order.end());
  return order;
}

/// Two-stage selector: Lasso support T at the given lambda, least-squares
/// refit on T, then keep the s0 largest refitted magnitudes. When fewer than
/// s0 columns are active, S_hat = T and the shortfall is flagged.
inline SelectionResult select(const RegressionInstance& inst, double lambda, int s0,
                              const LassoSettings& settings = {}) {
  if (s0 < 1) throw ArgumentError("s0 must be at least 1");
  SelectionResult out;
  out.lambda = lambda;
  out.theta_lasso = fit_lasso(inst, lambda, settings);
  out.T = signed_support(out.theta_lasso).T;
  if (static_cast<int>(out.T.size()) > inst.n()) {
    out.flags.t_larger_than_n = true;
    throw RankError("selector: Lasso support size " + std::to_string(out.T.size()) +
                    " exceeds n = " + std::to_string(inst.n()));
  }
  out.theta_gl = ols_restricted(inst, out.T);
  out.flags.t_smaller_than_s0 = static_cast<int>(out.T.size()) < s0;
  out.S_hat = top_magnitude_indices(out.theta_gl, out.T, s0);
  return out;
}

struct GaussLassoPoint {
  double lambda = 0.0;
  bool ok = false;
  std::string error;
  SelectionResult sel;
};

struct GaussLassoPath {
  Vector lambdas;
  std::vector<GaussLassoPoint> points;
};

/// Selector along a decreasing lambda grid. The Lasso stage is warm-started
/// from point to point; a failure at one grid point (support too large,
/// ill-conditioned refit, non-convergence) is recorded on that point and the
/// path continues.
inline GaussLassoPath gauss_lasso_path(const RegressionInstance& inst,
                                       const Vector& grid, int s0,
                                       LassoSettings settings = {}) {
  validate_grid(grid);
  if (s0 < 1) throw ArgumentError("s0 must be at least 1");
  GaussLassoPath path;
  path.lambdas = grid;
  path.points.resize(grid.size());
  for (Eigen::Index k = 0; k < grid.size(); ++k) {
    GaussLassoPoint& pt = path.points[k];
    pt.lambda = grid[k];
    Vector theta_lasso;
    try {
      theta_lasso = fit_lasso(inst, grid[k], settings);
    } catch (const ConvergenceError& e) {
      pt.error = e.what();
      settings.warm_start = e.best;  // still the best continuation point
      continue;
    }
    settings.warm_start = theta_lasso;
    pt.sel.lambda = grid[k];
    pt.sel.theta_lasso = theta_lasso;
    pt.sel.T = signed_support(theta_lasso).T;
    try {
      if (static_cast<int>(pt.sel.T.size()) > inst.n()) {
        pt.sel.flags.t_larger_than_n = true;
        throw RankError("Lasso support size " + std::to_string(pt.sel.T.size()) +
                        " exceeds n = " + std::to_string(inst.n()));
      }
      pt.sel.theta_gl = ols_restricted(inst, pt.sel.T);
      pt.sel.flags.t_smaller_than_s0 = static_cast<int>(pt.sel.T.size()) < s0;
      pt.sel.S_hat = top_magnitude_indices(pt.sel.theta_gl, pt.sel.T, s0);
      pt.ok = true;
    } catch (const std::exception& e) {
      pt.error = e.what();
    }
  }
  return path;
}

/// CSV with header lambda,support_size,coef_1..coef_p,selected_1..selected_p.
/// coef are the refitted coefficients, selected is the 0/1 indicator of
/// S_hat. Failed points carry support_size -1 and nan coefficients.
inline void write_gauss_lasso_path_csv(const GaussLassoPath& path, int p,
                                       std::ostream& os) {
  os << "lambda,support_size";
  for (int j = 0; j < p; ++j) os << ",coef_" << (j + 1);
  for (int j = 0; j < p; ++j) os << ",selected_" << (j + 1);
  os << "\n";
  for (const auto& pt : path.points) {
    os << format_double(pt.lambda);
    if (pt.ok) {
      os << "," << pt.sel.T.size();
      for (int j = 0; j < p; ++j) os << "," << format_double(pt.sel.theta_gl[j]);
      std::vector<char> sel(p, 0);
      for (int i : pt.sel.S_hat) sel[i] = 1;
      for (int j = 0; j < p; ++j) os << "," << int(sel[j]);
    } else {
      os << ",-1";
      for (int j = 0; j < p; ++j) os << ",nan";
      for (int j = 0; j < p; ++j) os << ",0";
    }
    os << "\n";
  }
}

}  // namespace glselect
