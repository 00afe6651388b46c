#pragma once

#include "glselect/core.hpp"
#include "glselect/rng.hpp"

namespace glselect {

/// Confounder family: identity covariance plus a coupling a between the last
/// coordinate and each of the first s0 (the true support). Positive definite
/// exactly when a sqrt(s0) < 1.
struct ConfounderDesign {
  int p = 0;
  int s0 = 0;
  double a = 0.0;

  ConfounderDesign(int p_, int s0_, double a_) : p(p_), s0(s0_), a(a_) {
    if (s0 < 1) throw ArgumentError("need s0 >= 1");
    if (p < s0 + 1) throw ArgumentError("need p >= s0 + 1 (the confounder column)");
    if (a < 0) throw ArgumentError("need a >= 0");
    if (a * std::sqrt(static_cast<double>(s0)) >= 1.0)
      throw ArgumentError("need a * sqrt(s0) < 1 for positive definiteness");
  }
};

inline CovarianceModel confounder_covariance(const ConfounderDesign& d) {
  Matrix m = Matrix::Identity(d.p, d.p);
  for (int i = 0; i < d.s0; ++i) {
    m(i, d.p - 1) = d.a;
    m(d.p - 1, i) = d.a;
  }
  return CovarianceModel::population(std::move(m));
}

/// Closed-form facts for the confounder family. inv_on_S and inv_on_p are
/// the magnitudes of [Sigma_{T*,T*}^{-1} v0] on the support and on the
/// confounder column; slope_p is the rate at which the zero-noise solution's
/// last coordinate grows with the penalty.
struct OracleFacts {
  IndexSet t_star;
  IntVector v0;
  double xi_star = 0.0;
  double slope_p = 0.0;
  double inv_on_S = 0.0;
  double inv_on_p = 0.0;
  double irr_norm = 0.0;
  double gic_norm = 0.0;
};

/// Analytic (T*, v0, xi*, norms) for theta0 positive on {1..s0} and zero
/// elsewhere. The weakly-coupled case a s0 < 1 has T* = S; the strongly
/// coupled case a s0 > 1 pulls the confounder column into T* with a positive
/// sign. At a s0 = 1 exactly, slope_p = 0, the confounder coefficient stays
/// identically zero, so T* = S and the dual norm at (T*, v0) sits exactly at
/// 1: both case formulas for xi* and inv_on_S agree there.
inline OracleFacts confounder_oracle(const ConfounderDesign& d, const Vector& theta0) {
  if (theta0.size() != d.p) throw DimensionError("theta0 length != p");
  double theta_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < d.p; ++i) {
    if (i < d.s0) {
      if (theta0[i] <= 0)
        throw ArgumentError("theta0 must be strictly positive on the support");
      theta_min = std::min(theta_min, theta0[i]);
    } else if (theta0[i] != 0.0) {
      throw ArgumentError("theta0 must be zero off the support");
    }
  }

  OracleFacts f;
  const double as0 = d.a * d.s0;
  f.irr_norm = as0;
  f.v0.setZero(d.p);
  for (int i = 0; i < d.s0; ++i) {
    f.v0[i] = 1;
    f.t_star.push_back(i);
  }
  if (as0 <= 1.0) {
    f.slope_p = as0 < 1.0 ? 0.0 : (as0 - 1.0) / (1.0 - d.a * d.a * d.s0);
    f.inv_on_S = as0 < 1.0 ? 1.0 : (1.0 - d.a) / (1.0 - d.a * d.a * d.s0);
    f.inv_on_p = f.slope_p;
    f.xi_star = theta_min / f.inv_on_S;
    f.gic_norm = as0;  // T* = S, so the dual norm is the classical one
  } else {
    const double denom = 1.0 - d.a * d.a * d.s0;  // > 0 inside the family
    f.slope_p = (as0 - 1.0) / denom;
    f.inv_on_S = (1.0 - d.a) / denom;
    f.inv_on_p = f.slope_p;
    f.xi_star = std::min(1.0, denom / (1.0 - d.a)) * theta_min;
    f.gic_norm = 0.0;
    f.v0[d.p - 1] = 1;
    f.t_star.push_back(d.p - 1);
  }
  return f;
}

/// n i.i.d. rows from N(0, Sigma) through a Cholesky factor applied to
/// seeded standard normals (row-major fill). A failed factorization is
/// retried once with 1e-12 diagonal jitter.
inline Matrix sample_gaussian_design(const CovarianceModel& sigma, int n,
                                     CounterRng& rng) {
  if (n < 1) throw ArgumentError("need n >= 1");
  const int p = sigma.p();
  Eigen::LLT<Matrix> llt(sigma.matrix());
  if (llt.info() != Eigen::Success) {
    Matrix jittered = sigma.matrix() + 1e-12 * Matrix::Identity(p, p);
    llt.compute(jittered);
    if (llt.info() != Eigen::Success)
      throw LinearAlgebraError("Cholesky factorization failed even with jitter");
  }
  Matrix Z = rng.gaussian_matrix(n, p);
  return Z * Matrix(llt.matrixL()).transpose();
}

inline Matrix sample_gaussian_design(const CovarianceModel& sigma, int n,
                                     std::uint64_t seed) {
  CounterRng rng(seed);
  return sample_gaussian_design(sigma, n, rng);
}

/// Full synthetic instance: X ~ rows N(0, Sigma), W ~ N(0, sigma_noise^2),
/// Y = X theta0 + W, with the generating truth attached.
inline RegressionInstance synth_instance(const CovarianceModel& sigma,
                                         const Vector& theta0, int n,
                                         double sigma_noise, CounterRng& rng) {
  if (theta0.size() != sigma.p()) throw DimensionError("theta0 length != p");
  if (sigma_noise < 0) throw ArgumentError("noise level must be nonnegative");
  Matrix X = sample_gaussian_design(sigma, n, rng);
  Vector W = sigma_noise * rng.gaussian_vector(n);
  Vector Y = X * theta0 + W;
  return RegressionInstance::with_truth(std::move(X), std::move(Y), theta0,
                                        std::move(W), sigma_noise);
}

inline RegressionInstance synth_instance(const CovarianceModel& sigma,
                                         const Vector& theta0, int n,
                                         double sigma_noise, std::uint64_t seed) {
  CounterRng rng(seed);
  return synth_instance(sigma, theta0, n, sigma_noise, rng);
}

}  // namespace glselect
