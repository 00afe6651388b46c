#pragma once

#include "glselect/core.hpp"
#include "glselect/lasso.hpp"

namespace glselect {

/// Extended support of the zero-noise problem around theta0: the support
/// T* and sign vector v0 shared by every minimizer of
///   (1/2) <theta - theta0, M (theta - theta0)> + xi ||theta||_1
/// for xi in (0, xi0), the direction u0 such that the minimizer is
/// theta0 + xi * u0 on that range, and the breakdown point xi0 itself
/// (+infinity when no on-support coordinate ever crosses zero).
struct ExtendedSupport {
  SignedSupport support;  // v = v0, T = T*
  double xi0 = std::numeric_limits<double>::infinity();
  Vector u0;

  bool xi0_unbounded() const { return !std::isfinite(xi0); }
};

namespace detail {

inline void require_population_pd(const CovarianceModel& M) {
  if (M.kind() == CovarianceKind::population && M.min_eigenvalue() < 1e-10)
    throw ArgumentError("population covariance must be positive definite "
                        "(min eigenvalue " + format_double(M.min_eigenvalue()) + ")");
}

}  // namespace detail

/// Minimizer of (1/2)(theta-theta0)^T M (theta-theta0) + xi ||theta||_1 by
/// cyclic coordinate descent on the gradient g = M (theta - theta0).
/// Convergence criteria mirror fit_lasso. A coordinate with M_jj ~ 0 (the
/// whole row is then zero for PSD M) is pinned at zero; if at convergence an
/// inactive coordinate sits within 1e-8 of the penalty boundary while its
/// curvature vanishes, the minimizer is not unique and a DegeneracyError is
/// raised.
inline Vector fit_zero_noise(const CovarianceModel& M, const Vector& theta0,
                             double xi, const LassoSettings& settings = {}) {
  if (xi <= 0) throw ArgumentError("xi must be positive");
  const int p = M.p();
  if (theta0.size() != p) throw DimensionError("theta0 length != p");
  detail::require_population_pd(M);
  const Matrix& A = M.matrix();

  Vector theta;
  if (settings.warm_start) {
    if (settings.warm_start->size() != p)
      throw DimensionError("warm start length != p");
    theta = *settings.warm_start;
  } else {
    theta = Vector::Zero(p);
  }
  Vector g = A * (theta - theta0);

  double obj_prev = std::numeric_limits<double>::infinity();
  double last_kkt = std::numeric_limits<double>::infinity();
  for (int sweep = 0; sweep < settings.max_sweeps; ++sweep) {
    double max_delta = 0.0;
    for (int j = 0; j < p; ++j) {
      if (A(j, j) <= 1e-12) {
        theta[j] = 0.0;  // zero row: penalty alone decides
        continue;
      }
      double z = A(j, j) * theta[j] - g[j];
      double tnew = soft_threshold(z, xi) / A(j, j);
      double delta = tnew - theta[j];
      if (delta != 0.0) {
        g += A.col(j) * delta;
        theta[j] = tnew;
        max_delta = std::max(max_delta, std::abs(delta));
      }
    }
    double obj = 0.5 * (theta - theta0).dot(g) + xi * theta.lpNorm<1>();
    if (obj > obj_prev + 1e-10 * std::max(1.0, std::abs(obj_prev)))
      throw LinearAlgebraError("zero-noise coordinate descent objective increased");
    obj_prev = obj;

    if (max_delta <= settings.coord_tol * std::max(1.0, theta.cwiseAbs().maxCoeff())) {
      last_kkt = 0.0;
      for (int j = 0; j < p; ++j) {
        double v = theta[j] != 0.0
                       ? std::abs(g[j] + xi * (theta[j] > 0 ? 1.0 : -1.0))
                       : std::max(0.0, std::abs(g[j]) - xi);
        last_kkt = std::max(last_kkt, v);
      }
      if (last_kkt <= settings.kkt_tol) {
        for (int j = 0; j < p; ++j)
          if (theta[j] == 0.0 && A(j, j) <= 1e-12 && std::abs(g[j]) >= xi - 1e-8)
            throw DegeneracyError("zero-noise minimizer is not unique: coordinate " +
                                  std::to_string(j) +
                                  " has vanishing curvature at the penalty boundary");
        return theta;
      }
    }
    if (sweep % 100 == 99) g = A * (theta - theta0);  // flush gradient drift
  }
  throw ConvergenceError("zero-noise coordinate descent did not converge (KKT " +
                             format_double(last_kkt) + ")",
                         theta, last_kkt);
}

/// Population-level solves anchor exact structure, so they default to a
/// tighter KKT tolerance than the finite-sample solver.
inline LassoSettings population_solver_settings() {
  LassoSettings s;
  s.kkt_tol = 1e-10;
  return s;
}

/// Minimizes F*(u) = (1/2) u^T M u + ||u_{S^c}||_1 + <signs_S, u_S> to KKT
/// tolerance 1e-10. Its minimizer is the direction u0 along which the
/// zero-noise solution leaves theta0 as the penalty grows.
inline Vector minimize_fstar(const CovarianceModel& M, const IndexSet& S,
                             const Vector& signs_S,
                             LassoSettings settings = population_solver_settings()) {
  const int p = M.p();
  if (static_cast<int>(S.size()) != signs_S.size())
    throw DimensionError("signs length != |S|");
  for (int i : S)
    if (i < 0 || i >= p) throw ArgumentError("support index out of range");
  detail::require_population_pd(M);
  const Matrix& A = M.matrix();

  std::vector<int> in_S(p, -1);  // position within S, or -1
  for (size_t a = 0; a < S.size(); ++a) in_S[S[a]] = static_cast<int>(a);

  Vector u = Vector::Zero(p);
  Vector g = Vector::Zero(p);  // M u
  double last_kkt = std::numeric_limits<double>::infinity();
  for (int sweep = 0; sweep < settings.max_sweeps; ++sweep) {
    double max_delta = 0.0;
    for (int j = 0; j < p; ++j) {
      double unew;
      if (A(j, j) <= 1e-12) {
        if (in_S[j] >= 0)
          throw DegeneracyError("F* is unbounded along on-support coordinate " +
                                std::to_string(j) + " with vanishing curvature");
        unew = 0.0;
      } else if (in_S[j] >= 0) {
        unew = u[j] - (g[j] + signs_S[in_S[j]]) / A(j, j);
      } else {
        unew = soft_threshold(A(j, j) * u[j] - g[j], 1.0) / A(j, j);
      }
      double delta = unew - u[j];
      if (delta != 0.0) {
        g += A.col(j) * delta;
        u[j] = unew;
        max_delta = std::max(max_delta, std::abs(delta));
      }
    }
    if (u.cwiseAbs().maxCoeff() > 1e12)
      throw LinearAlgebraError("F* minimization diverged; M is effectively singular");

    if (max_delta <= settings.coord_tol * std::max(1.0, u.cwiseAbs().maxCoeff())) {
      last_kkt = 0.0;
      for (int j = 0; j < p; ++j) {
        double v;
        if (in_S[j] >= 0)
          v = std::abs(g[j] + signs_S[in_S[j]]);
        else if (u[j] != 0.0)
          v = std::abs(g[j] + (u[j] > 0 ? 1.0 : -1.0));
        else
          v = std::max(0.0, std::abs(g[j]) - 1.0);
        last_kkt = std::max(last_kkt, v);
      }
      if (last_kkt <= settings.kkt_tol) return u;
    }
    if (sweep % 100 == 99) g = A * u;
  }
  throw ConvergenceError("F* minimization did not converge (KKT " +
                             format_double(last_kkt) + ")",
                         u, last_kkt);
}

/// Computes (T*, v0, xi0, u0) for the zero-noise problem and cross-validates
/// the result against an actual zero-noise solve at a penalty safely inside
/// (0, xi0). Throws InconsistencyError carrying both supports if the two
/// routes disagree.
inline ExtendedSupport extended_support(
    const CovarianceModel& M, const Vector& theta0,
    const LassoSettings& settings = population_solver_settings()) {
  const int p = M.p();
  if (theta0.size() != p) throw DimensionError("theta0 length != p");
  IndexSet S;
  for (int i = 0; i < p; ++i)
    if (theta0[i] != 0.0) S.push_back(i);
  if (S.empty()) throw ArgumentError("theta0 must have at least one nonzero entry");
  Vector signs(S.size());
  for (size_t a = 0; a < S.size(); ++a) signs[a] = theta0[S[a]] > 0 ? 1.0 : -1.0;

  Vector u0 = minimize_fstar(M, S, signs, settings);
  double tau = zero_threshold(u0);

  ExtendedSupport ext;
  ext.u0 = u0;
  ext.support.v.setZero(p);
  for (int i = 0; i < p; ++i) {
    if (theta0[i] != 0.0)
      ext.support.v[i] = theta0[i] > 0 ? 1 : -1;
    else
      ext.support.v[i] = sign_of(u0[i], tau);
    if (ext.support.v[i] != 0) ext.support.T.push_back(i);
  }
  ext.support.t0 = static_cast<int>(ext.support.T.size());

  ext.xi0 = std::numeric_limits<double>::infinity();
  for (int i : S)
    if (std::abs(u0[i]) > tau)
      ext.xi0 = std::min(ext.xi0, std::abs(theta0[i] / u0[i]));

  // independent check: the signed support of a real solve inside (0, xi0)
  double xi_check = ext.xi0_unbounded() ? std::max(1.0, theta0.cwiseAbs().maxCoeff())
                                        : ext.xi0 / 100.0;
  Vector theta = fit_zero_noise(M, theta0, xi_check, settings);
  SignedSupport ss = SignedSupport::from_vector(theta);
  if (ss != ext.support)
    throw InconsistencyError(
        "extended support mismatch: direction route gives " +
            index_set_to_string(ext.support.T) + ", direct solve at xi=" +
            format_double(xi_check) + " gives " + index_set_to_string(ss.T),
        ext.support.T, ss.T);
  return ext;
}

/// Result of the zero-noise sign-pattern test; theta holds the closed-form
/// solution (zeros off the candidate support) when ok.
struct ZnCharacterization {
  bool ok = false;
  Vector theta;
};

/// A sign vector z with support T = supp(z) containing supp(theta0) belongs
/// to the zero-noise minimizer at penalty xi iff
///   ||M_{T^c,T} M_{T,T}^{-1} z_T||_inf <= 1   and
///   z_T = sign(theta0_T - xi M_{T,T}^{-1} z_T).
inline ZnCharacterization verify_zero_noise_characterization(const CovarianceModel& M,
                                                             const Vector& theta0,
                                                             double xi,
                                                             const SignedSupport& z,
                                                             double tol = 1e-10) {
  const int p = M.p();
  if (theta0.size() != p || z.v.size() != p)
    throw DimensionError("characterization: mismatched lengths");
  if (xi <= 0) throw ArgumentError("xi must be positive");
  IndexSet S;
  for (int i = 0; i < p; ++i)
    if (theta0[i] != 0.0) S.push_back(i);
  if (!contains_all(z.T, S))
    throw ArgumentError("candidate support " + index_set_to_string(z.T) +
                        " does not contain supp(theta0) " + index_set_to_string(S));
  const Matrix& A = M.matrix();
  const int t = z.t0;
  ZnCharacterization out;
  out.theta = Vector::Zero(p);

  Vector w = Vector::Zero(t);
  if (t > 0) {
    Matrix B(t, t);
    Vector zT(t);
    for (int a = 0; a < t; ++a) {
      zT[a] = z.v[z.T[a]];
      for (int b = 0; b < t; ++b) B(a, b) = A(z.T[a], z.T[b]);
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(B);
    if (es.eigenvalues().cwiseAbs().minCoeff() <=
        1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff()))
      throw LinearAlgebraError("M_{T,T} is numerically singular");
    w = Eigen::LDLT<Matrix>(B).solve(zT);
    for (int a = 0; a < t; ++a) {
      double val = theta0[z.T[a]] - xi * w[a];
      if (sign_of(val, 0.0) != z.v[z.T[a]]) return out;
      out.theta[z.T[a]] = val;
    }
  }
  for (int i = 0; i < p; ++i) {
    if (z.v[i] != 0) continue;
    double d = 0.0;
    for (int a = 0; a < t; ++a) d += A(i, z.T[a]) * w[a];
    if (std::abs(d) > 1.0 + tol) {
      out.theta.setZero();
      return out;
    }
  }
  out.ok = true;
  return out;
}

/// Upper bound (1 + 4 ||M||_2 / kappa) * s0 on the extended support size,
/// with kappa a restricted eigenvalue at sparsity s0.
inline double support_size_bound(const CovarianceModel& M, int s0, double kappa) {
  if (kappa <= 0) throw ArgumentError("kappa must be positive");
  if (s0 < 0) throw ArgumentError("s0 must be nonnegative");
  Eigen::SelfAdjointEigenSolver<Matrix> es(M.matrix(), Eigen::EigenvaluesOnly);
  double op_norm = es.eigenvalues().cwiseAbs().maxCoeff();
  return (1.0 + 4.0 * op_norm / kappa) * s0;
}

}  // namespace glselect
