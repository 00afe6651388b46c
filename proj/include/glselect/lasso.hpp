#pragma once

#include <ostream>
#include <string>
#include <utility>

#include "glselect/core.hpp"

namespace glselect {

struct LassoSettings {
  int max_sweeps = 100000;
  double kkt_tol = 1e-8;
  // a sweep counts as stalled when no coordinate moved more than
  // coord_tol * max(1, ||theta||_inf)
  double coord_tol = 1e-10;
  std::optional<Vector> warm_start;
};

struct KktReport {
  double max_violation = 0.0;
  double tol = 0.0;
  bool ok = false;
};

namespace detail {

// Stationarity residual of the Lasso objective at theta given the gradient
// g = X^T (Y - X theta) / n, using the exact zero pattern of theta:
// active coordinates must satisfy g_i = lambda * sign(theta_i), inactive ones
// |g_i| <= lambda.
inline double kkt_violation(const Vector& g, const Vector& theta, double lambda) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    double v = theta[i] != 0.0 ? std::abs(g[i] - lambda * (theta[i] > 0 ? 1.0 : -1.0))
                               : std::max(0.0, std::abs(g[i]) - lambda);
    worst = std::max(worst, v);
  }
  return worst;
}

}  // namespace detail

/// Checks the subgradient optimality conditions of
///   (1/2n)||Y - X theta||^2 + lambda ||theta||_1
/// at theta, reporting the worst violation against tol.
inline KktReport verify_kkt(const RegressionInstance& inst, double lambda,
                            const Vector& theta, double tol = 1e-8) {
  if (lambda <= 0) throw ArgumentError("lambda must be positive");
  if (theta.size() != inst.p()) throw DimensionError("theta length != p");
  Vector g = inst.X.transpose() * (inst.Y - inst.X * theta) / inst.n();
  KktReport rep;
  rep.max_violation = detail::kkt_violation(g, theta, lambda);
  rep.tol = tol;
  rep.ok = rep.max_violation <= tol;
  return rep;
}

/// Lasso estimate by cyclic coordinate descent with exact per-coordinate
/// minimization. Deterministic given inputs and settings: fixed coordinate
/// order, fixed warm start (zeros unless provided). Columns that are
/// identically zero keep coefficient zero. Converged means a full sweep moved
/// no coordinate by more than coord_tol * max(1, ||theta||_inf) and the KKT
/// residual is within kkt_tol; otherwise a ConvergenceError carrying the best
/// iterate is thrown after max_sweeps.
inline Vector fit_lasso(const RegressionInstance& inst, double lambda,
                        const LassoSettings& settings = {}) {
  if (lambda <= 0) throw ArgumentError("lambda must be positive");
  const int n = inst.n(), p = inst.p();
  const double dn = static_cast<double>(n);

  Vector diag(p);  // Sigma_hat_jj = ||x_j||^2 / n
  for (int j = 0; j < p; ++j) diag[j] = inst.X.col(j).squaredNorm() / dn;

  Vector theta;
  if (settings.warm_start) {
    if (settings.warm_start->size() != p)
      throw DimensionError("warm start length != p");
    theta = *settings.warm_start;
  } else {
    theta = Vector::Zero(p);
  }
  Vector r = inst.Y - inst.X * theta;

  double obj_prev = std::numeric_limits<double>::infinity();
  double last_kkt = std::numeric_limits<double>::infinity();
  for (int sweep = 0; sweep < settings.max_sweeps; ++sweep) {
    double max_delta = 0.0;
    for (int j = 0; j < p; ++j) {
      if (diag[j] <= 0.0) {
        if (theta[j] != 0.0) {
          r += inst.X.col(j) * theta[j];
          theta[j] = 0.0;
        }
        continue;
      }
      double z = inst.X.col(j).dot(r) / dn + diag[j] * theta[j];
      double tnew = soft_threshold(z, lambda) / diag[j];
      double delta = tnew - theta[j];
      if (delta != 0.0) {
        r -= inst.X.col(j) * delta;
        theta[j] = tnew;
        max_delta = std::max(max_delta, std::abs(delta));
      }
    }
    double obj = r.squaredNorm() / (2.0 * dn) + lambda * theta.lpNorm<1>();
    if (obj > obj_prev + 1e-10 * std::max(1.0, std::abs(obj_prev)))
      throw LinearAlgebraError("coordinate descent objective increased: " +
                               format_double(obj_prev) + " -> " + format_double(obj));
    obj_prev = obj;

    if (max_delta <= settings.coord_tol * std::max(1.0, theta.cwiseAbs().maxCoeff())) {
      Vector g = inst.X.transpose() * r / dn;
      last_kkt = detail::kkt_violation(g, theta, lambda);
      if (last_kkt <= settings.kkt_tol) return theta;
    }
    if (sweep % 100 == 99) r = inst.Y - inst.X * theta;  // flush residual drift
  }
  // The loop exits without ever measuring optimality when no sweep stalls;
  // report the true residual of the final iterate either way.
  r = inst.Y - inst.X * theta;
  last_kkt = detail::kkt_violation(Vector(inst.X.transpose() * r / dn), theta, lambda);
  throw ConvergenceError("lasso coordinate descent did not converge in " +
                             std::to_string(settings.max_sweeps) +
                             " sweeps (KKT residual " + format_double(last_kkt) + ")",
                         theta, last_kkt);
}

/// Signed support with an explicit zero threshold.
inline SignedSupport signed_support(const Vector& theta, double zero_tol) {
  return SignedSupport::from_vector(theta, zero_tol);
}

/// Signed support at the scale-aware default threshold.
inline SignedSupport signed_support(const Vector& theta) {
  return SignedSupport::from_vector(theta);
}

/// Deterministic sign-pattern test: a Lasso solution with sign vector z and
/// support T = supp(z) exists iff
///   || Sig_{T^c,T} Sig_{T,T}^{-1} z_T + (r_{T^c} - Sig_{T^c,T} Sig_{T,T}^{-1} r_T)/lambda ||_inf <= 1
/// and z_T = sign(theta0_T - Sig_{T,T}^{-1} (lambda z_T - r_T)),
/// where Sig is the Gram matrix and r = X^T W / n the noise correlation.
/// The dual inequality is checked with slack tol/lambda so that solutions
/// converged to KKT tolerance tol classify consistently.
inline bool check_sign_characterization(const CovarianceModel& sigma_hat,
                                        const Vector& r_hat, const Vector& theta0,
                                        double lambda, const SignedSupport& z,
                                        double tol = 1e-8) {
  const int p = sigma_hat.p();
  if (r_hat.size() != p || theta0.size() != p || z.v.size() != p)
    throw DimensionError("sign characterization: mismatched lengths");
  if (lambda <= 0) throw ArgumentError("lambda must be positive");
  IndexSet S;
  for (int i = 0; i < p; ++i)
    if (theta0[i] != 0.0) S.push_back(i);
  if (!contains_all(z.T, S))
    throw ArgumentError("candidate support " + index_set_to_string(z.T) +
                        " does not contain supp(theta0) " + index_set_to_string(S));

  const Matrix& M = sigma_hat.matrix();
  const int t = z.t0;
  IndexSet Tc;
  for (int i = 0; i < p; ++i)
    if (z.v[i] == 0) Tc.push_back(i);

  Vector w = Vector::Zero(t), q = Vector::Zero(t), zT(t), rT(t), th0T(t);
  if (t > 0) {
    Matrix A(t, t);
    for (int a = 0; a < t; ++a) {
      zT[a] = z.v[z.T[a]];
      rT[a] = r_hat[z.T[a]];
      th0T[a] = theta0[z.T[a]];
      for (int b = 0; b < t; ++b) A(a, b) = M(z.T[a], z.T[b]);
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(A);
    double mn = es.eigenvalues().cwiseAbs().minCoeff();
    double mx = es.eigenvalues().cwiseAbs().maxCoeff();
    if (mn <= 1e-12 * std::max(1.0, mx))
      throw LinearAlgebraError("Sigma_{T,T} is numerically singular");
    Eigen::LDLT<Matrix> ldlt(A);
    w = ldlt.solve(zT);
    q = ldlt.solve(rT);
    // sign condition on T
    Vector thetaT = th0T - (lambda * w - q);
    for (int a = 0; a < t; ++a)
      if (sign_of(thetaT[a], 0.0) != static_cast<int>(zT[a])) return false;
  }
  // dual feasibility off T
  double slack = 1.0 + tol / lambda;
  for (int i : Tc) {
    double bw = 0.0, bq = 0.0;
    for (int a = 0; a < t; ++a) {
      bw += M(i, z.T[a]) * w[a];
      bq += M(i, z.T[a]) * q[a];
    }
    double d = bw + (r_hat[i] - bq) / lambda;
    if (std::abs(d) > slack) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Regularization paths
// ---------------------------------------------------------------------------

struct LassoPath {
  Vector lambdas;                       // strictly decreasing
  Matrix coefficients;                  // one row per grid point
  std::vector<SignedSupport> supports;  // at the scale-aware zero threshold
};

inline void validate_grid(const Vector& grid) {
  if (grid.size() == 0) throw ArgumentError("lambda grid is empty");
  for (Eigen::Index k = 0; k < grid.size(); ++k) {
    if (grid[k] <= 0) throw ArgumentError("lambda grid entries must be positive");
    if (k > 0 && grid[k] >= grid[k - 1])
      throw ArgumentError("lambda grid must be strictly decreasing");
  }
}

/// Geometric grid from hi down to lo with the given number of points.
inline Vector geometric_grid(double hi, double lo, int points) {
  if (!(hi > lo) || lo <= 0) throw ArgumentError("need hi > lo > 0");
  if (points < 2) throw ArgumentError("need at least two grid points");
  Vector g(points);
  double ratio = std::pow(lo / hi, 1.0 / (points - 1));
  g[0] = hi;
  for (int k = 1; k < points; ++k) g[k] = g[k - 1] * ratio;
  g[points - 1] = lo;
  return g;
}

/// Smallest lambda for which the Lasso solution from a zero start is all
/// zeros: ||X^T Y / n||_inf.
inline double max_lambda(const RegressionInstance& inst) {
  return (inst.X.transpose() * inst.Y / inst.n()).cwiseAbs().maxCoeff();
}

/// Solves along a decreasing grid, warm-starting each point from the
/// previous solution. Solver failures are rethrown annotated with the grid
/// index.
inline LassoPath lasso_path(const RegressionInstance& inst, const Vector& grid,
                            LassoSettings settings = {}) {
  validate_grid(grid);
  LassoPath path;
  path.lambdas = grid;
  path.coefficients.resize(grid.size(), inst.p());
  path.supports.reserve(grid.size());
  for (Eigen::Index k = 0; k < grid.size(); ++k) {
    Vector theta;
    try {
      theta = fit_lasso(inst, grid[k], settings);
    } catch (const ConvergenceError& e) {
      throw ConvergenceError("grid index " + std::to_string(k) + " (lambda=" +
                                 format_double(grid[k]) + "): " + e.what(),
                             e.best, e.residual);
    }
    path.coefficients.row(k) = theta.transpose();
    path.supports.push_back(signed_support(theta));
    settings.warm_start = std::move(theta);
  }
  return path;
}

/// CSV with header lambda,coef_1,...,coef_p at round-trip precision.
inline void write_path_csv(const LassoPath& path, std::ostream& os) {
  const Eigen::Index p = path.coefficients.cols();
  os << "lambda";
  for (Eigen::Index j = 0; j < p; ++j) os << ",coef_" << (j + 1);
  os << "\n";
  for (Eigen::Index k = 0; k < path.lambdas.size(); ++k) {
    os << format_double(path.lambdas[k]);
    for (Eigen::Index j = 0; j < p; ++j)
      os << "," << format_double(path.coefficients(k, j));
    os << "\n";
  }
}

}  // namespace glselect
