#pragma once

#include <cstdint>

#include "glselect/core.hpp"
#include "glselect/population.hpp"
#include "glselect/rng.hpp"

namespace glselect {

enum class Regime { deterministic, random };

enum class KappaCertificate { exact, heuristic_upper };

struct RestrictedEigenvalue {
  double value = 0.0;
  KappaCertificate certificate = KappaCertificate::exact;
};

enum class KappaMode { automatic, exact, heuristic };

struct RestrictedEigenvalueOptions {
  int restarts = 64;
  int iterations = 500;
  std::uint64_t seed = 1234;
  // extra start vectors for the heuristic search (projected before use);
  // passing the minimizer found at a smaller c0 makes sweeps over c0
  // monotone by construction
  std::vector<Vector> initial_guesses;
};

namespace detail {

/// ||M_{T^c,T} M_{T,T}^{-1} v_T||_inf, the dual norm behind both
/// irrepresentability flavors. v_T is given in the order of T.
inline double irrepresentability_norm(const Matrix& M, const IndexSet& T,
                                      const Vector& v_T) {
  const int p = static_cast<int>(M.rows());
  const int t = static_cast<int>(T.size());
  if (t == 0) throw ArgumentError("support is empty");
  Matrix A(t, t);
  for (int a = 0; a < t; ++a)
    for (int b = 0; b < t; ++b) A(a, b) = M(T[a], T[b]);
  Eigen::SelfAdjointEigenSolver<Matrix> es(A);
  if (es.eigenvalues().cwiseAbs().minCoeff() <=
      1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff()))
    throw LinearAlgebraError("M restricted to the support is numerically singular");
  Vector w = Eigen::LDLT<Matrix>(A).solve(v_T);
  std::vector<char> in_T(p, 0);
  for (int i : T) in_T[i] = 1;
  double worst = 0.0;
  for (int i = 0; i < p; ++i) {
    if (in_T[i]) continue;
    double d = 0.0;
    for (int a = 0; a < t; ++a) d += M(i, T[a]) * w[a];
    worst = std::max(worst, std::abs(d));
  }
  return worst;
}

inline IndexSet exact_support_of(const Vector& theta0) {
  IndexSet S;
  for (Eigen::Index i = 0; i < theta0.size(); ++i)
    if (theta0[i] != 0.0) S.push_back(static_cast<int>(i));
  return S;
}

}  // namespace detail

/// 1 - ||M_{S^c,S} M_{S,S}^{-1} sign(theta0_S)||_inf. Positive means the
/// classical sign-recovery condition holds with that slack.
inline double irrepresentability_margin(const CovarianceModel& M, const Vector& theta0) {
  if (theta0.size() != M.p()) throw DimensionError("theta0 length != p");
  IndexSet S = detail::exact_support_of(theta0);
  if (S.empty()) throw ArgumentError("theta0 must have a nonempty support");
  Vector signs(S.size());
  for (size_t a = 0; a < S.size(); ++a) signs[a] = theta0[S[a]] > 0 ? 1.0 : -1.0;
  return 1.0 - detail::irrepresentability_norm(M.matrix(), S, signs);
}

/// Same dual norm evaluated at the extended support (T*, v0) instead of
/// (S, sign(theta0_S)). Always >= 0 up to solver tolerance, because (T*, v0)
/// is itself a zero-noise optimum. The empty-complement case (T* covers all
/// coordinates) has norm 0 by convention.
inline double gic_margin_from(const CovarianceModel& M, const ExtendedSupport& ext) {
  if (ext.support.t0 == static_cast<int>(M.p())) return 1.0;
  Vector v_T(ext.support.t0);
  for (int a = 0; a < ext.support.t0; ++a) v_T[a] = ext.support.v[ext.support.T[a]];
  return 1.0 - detail::irrepresentability_norm(M.matrix(), ext.support.T, v_T);
}

inline double gic_margin(const CovarianceModel& M, const Vector& theta0) {
  return gic_margin_from(M, extended_support(M, theta0));
}

/// sigma_min of the principal block M_{T,T}.
inline double min_singular_value(const CovarianceModel& M, const IndexSet& T) {
  if (T.empty()) throw ArgumentError("index set is empty");
  const int t = static_cast<int>(T.size());
  Matrix A(t, t);
  for (int a = 0; a < t; ++a) {
    if (T[a] < 0 || T[a] >= M.p()) throw ArgumentError("index out of range");
    for (int b = 0; b < t; ++b) A(a, b) = M.matrix()(T[a], T[b]);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(A, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().minCoeff();
}

namespace detail {

// exact min over |J| = s of lambda_min(M_{J,J}); by eigenvalue interlacing
// this equals the min over |J| <= s. Optionally reports the minimizing
// eigenvector embedded in R^p.
inline double exact_restricted_eigenvalue(const Matrix& M, int s, Vector* argmin) {
  const int p = static_cast<int>(M.rows());
  std::vector<int> J(s);
  for (int i = 0; i < s; ++i) J[i] = i;
  double best = std::numeric_limits<double>::infinity();
  Matrix block(s, s);
  for (;;) {
    for (int a = 0; a < s; ++a)
      for (int b = 0; b < s; ++b) block(a, b) = M(J[a], J[b]);
    Eigen::SelfAdjointEigenSolver<Matrix> es(block);
    double lam = es.eigenvalues().minCoeff();
    if (lam < best) {
      best = lam;
      if (argmin) {
        argmin->setZero(p);
        for (int a = 0; a < s; ++a) (*argmin)[J[a]] = es.eigenvectors().col(0)[a];
      }
    }
    // next lexicographic s-subset of {0..p-1}
    int i = s - 1;
    while (i >= 0 && J[i] == p - s + i) --i;
    if (i < 0) break;
    ++J[i];
    for (int k = i + 1; k < s; ++k) J[k] = J[k - 1] + 1;
  }
  return best;
}

// Projects u onto {x : ||x_{J^c}||_1 <= c0 ||x_J||_1 for J = top-s entries},
// then onto the unit sphere. The cone constraint is enforced by radially
// shrinking the tail, which stays inside the cone (not the metric projection,
// but the search only needs feasible iterates).
inline bool project_to_cone(Vector& u, int s, double c0) {
  const int p = static_cast<int>(u.size());
  if (p > s) {
    std::vector<int> order(p);
    for (int i = 0; i < p; ++i) order[i] = i;
    std::nth_element(order.begin(), order.begin() + s, order.end(),
                     [&](int a, int b) { return std::abs(u[a]) > std::abs(u[b]); });
    double head = 0.0, tail = 0.0;
    for (int i = 0; i < s; ++i) head += std::abs(u[order[i]]);
    for (int i = s; i < p; ++i) tail += std::abs(u[order[i]]);
    if (tail > c0 * head) {
      double scale = tail > 0 ? c0 * head / tail : 0.0;
      for (int i = s; i < p; ++i) u[order[i]] *= scale;
    }
  }
  double nrm = u.norm();
  if (nrm < 1e-300) return false;
  u /= nrm;
  return true;
}

inline double heuristic_restricted_eigenvalue(const Matrix& M, int s, double c0,
                                              const RestrictedEigenvalueOptions& opt) {
  const int p = static_cast<int>(M.rows());
  Eigen::SelfAdjointEigenSolver<Matrix> es(M);
  double lam_max = es.eigenvalues().maxCoeff();
  if (lam_max <= 0) return 0.0;  // M is (numerically) the zero matrix
  double step = 1.0 / lam_max;

  std::vector<Vector> starts = opt.initial_guesses;
  starts.push_back(es.eigenvectors().col(0));  // global minimum direction
  CounterRng rng(opt.seed, 0);
  for (int r = 0; r < opt.restarts; ++r) starts.push_back(rng.gaussian_vector(p));

  double best = std::numeric_limits<double>::infinity();
  for (Vector u : starts) {
    if (u.size() != p) throw DimensionError("initial guess length != p");
    if (!project_to_cone(u, s, c0)) continue;
    best = std::min(best, u.dot(M * u));
    for (int it = 0; it < opt.iterations; ++it) {
      Vector g = M * u;
      u -= step * g;
      if (!project_to_cone(u, s, c0)) break;
      best = std::min(best, u.dot(M * u));
    }
  }
  return best;
}

}  // namespace detail

/// Restricted eigenvalue kappa(s, c0): the minimum Rayleigh quotient of M
/// over unit vectors whose l1 mass concentrates on some set of at most s
/// coordinates (tail <= c0 * head). c0 = 0 admits exact subset enumeration
/// (p <= 25); otherwise a seeded projected-gradient search returns an upper
/// bound, tagged as such.
inline RestrictedEigenvalue restricted_eigenvalue(
    const CovarianceModel& M, int s, double c0, KappaMode mode = KappaMode::automatic,
    const RestrictedEigenvalueOptions& options = {}) {
  const int p = M.p();
  if (s < 1 || s > p) throw ArgumentError("need 1 <= s <= p");
  if (c0 < 0) throw ArgumentError("c0 must be nonnegative");
  bool exact;
  switch (mode) {
    case KappaMode::exact:
      if (c0 != 0.0)
        throw ArgumentError("exact enumeration is only defined for c0 = 0");
      if (p > 25)
        throw CapabilityError("exact restricted eigenvalue is guarded to p <= 25");
      exact = true;
      break;
    case KappaMode::heuristic:
      exact = false;
      break;
    case KappaMode::automatic:
    default:
      exact = (c0 == 0.0 && p <= 25);
      break;
  }
  RestrictedEigenvalue out;
  if (exact) {
    out.value = detail::exact_restricted_eigenvalue(M.matrix(), s, nullptr);
    out.certificate = KappaCertificate::exact;
  } else {
    RestrictedEigenvalueOptions opt = options;
    // when affordable, seed the search with the exact s-sparse minimizer,
    // which is feasible for every c0 >= 0
    if (p <= 25) {
      double work = 1.0;
      for (int i = 0; i < s; ++i) work *= static_cast<double>(p - i) / (i + 1);
      if (work <= 2e5) {
        Vector sparse_argmin;
        detail::exact_restricted_eigenvalue(M.matrix(), s, &sparse_argmin);
        opt.initial_guesses.push_back(std::move(sparse_argmin));
      }
    }
    out.value = detail::heuristic_restricted_eigenvalue(M.matrix(), s, c0, opt);
    out.certificate = KappaCertificate::heuristic_upper;
  }
  return out;
}

/// Prescribed regularization level for the support-recovery guarantees:
/// (sigma/eta) sqrt(2 c1 log(p) / n) for fixed designs and
/// (4 sigma/eta) sqrt(c1 log(p) / n) for random Gaussian designs.
/// Natural logarithm; the guarantees require c1 > 1.
inline double theorem_lambda(double sigma, double eta, double c1, int p, int n,
                             Regime regime) {
  if (c1 <= 1) throw ArgumentError("the guarantees require c1 > 1");
  if (sigma < 0) throw ArgumentError("sigma must be nonnegative");
  if (eta <= 0) throw ArgumentError("eta must be positive");
  if (p < 2) throw ArgumentError("need p >= 2");
  if (n < 1) throw ArgumentError("need n >= 1");
  double core = std::sqrt(c1 * std::log(static_cast<double>(p)) / n);
  return regime == Regime::deterministic ? (sigma / eta) * std::sqrt(2.0) * core
                                         : (4.0 * sigma / eta) * core;
}

/// Full hypothesis evaluation for the recovery guarantees at a given
/// (M, theta0, sigma, n, c1, c2). Produced even when conditions fail; the
/// flags say which ones.
struct ConditionReport {
  Regime regime = Regime::deterministic;
  int p = 0, n = 0, s0 = 0, t0 = 0;
  double sigma = 0.0, c1 = 0.0, c2 = 0.0;
  IndexSet t_star;
  IntVector v0;
  double eta_irr = 0.0;
  double eta_gic = 0.0;
  double c_min = 0.0;
  RestrictedEigenvalue kappa;  // at sparsity s0, cone constant 1
  double op_norm = 0.0;        // ||M||_2
  double inflation = 0.0;      // 1 + 4 ||M||_2 / kappa(s0, 1)
  double lambda = 0.0;
  Vector w_abs;                // |M_{T*,T*}^{-1} v0| in the order of t_star
  Vector theta_min_required;   // per-coordinate lower bound over S
  double detection_level = 0.0;
  double m1 = 0.0, m3 = 0.0, m1_tilde = 0.0, m3_tilde = 0.0;
  long n_min = 0;              // random regime sample-size threshold
  double probability_bound = 0.0;

  bool pass_normalization = false;
  bool pass_c_min = false;
  bool pass_gic = false;
  bool pass_theta_min_on_S = false;
  bool pass_theta_min_off_S = false;
  bool pass_eta_c2 = false;
  bool pass_n = false;
  bool pass_all = false;
};

inline ConditionReport theorem_report(const CovarianceModel& M, const Vector& theta0,
                                      double sigma, int n, double c1, double c2,
                                      Regime regime) {
  if (c1 <= 1) throw ArgumentError("the guarantees require c1 > 1");
  if (c2 <= 0) throw ArgumentError("c2 must be positive");
  if (sigma < 0) throw ArgumentError("sigma must be nonnegative");
  if (n < 1) throw ArgumentError("need n >= 1");
  const int p = M.p();
  if (p < 2) throw ArgumentError("need p >= 2");

  ConditionReport rep;
  rep.regime = regime;
  rep.p = p;
  rep.n = n;
  rep.sigma = sigma;
  rep.c1 = c1;
  rep.c2 = c2;

  ExtendedSupport ext = extended_support(M, theta0);
  IndexSet S = detail::exact_support_of(theta0);
  rep.s0 = static_cast<int>(S.size());
  rep.t0 = ext.support.t0;
  rep.t_star = ext.support.T;
  rep.v0 = ext.support.v;

  rep.eta_irr = irrepresentability_margin(M, theta0);
  rep.eta_gic = gic_margin_from(M, ext);
  rep.c_min = min_singular_value(M, ext.support.T);

  Eigen::SelfAdjointEigenSolver<Matrix> es(M.matrix(), Eigen::EigenvaluesOnly);
  rep.op_norm = es.eigenvalues().cwiseAbs().maxCoeff();
  rep.kappa = restricted_eigenvalue(M, rep.s0, 1.0, KappaMode::heuristic);
  rep.inflation = rep.kappa.value > 0
                      ? 1.0 + 4.0 * rep.op_norm / rep.kappa.value
                      : std::numeric_limits<double>::infinity();

  const double logp = std::log(static_cast<double>(p));
  double core = std::sqrt(c1 * logp / n);
  rep.lambda = rep.eta_gic > 0
                   ? (regime == Regime::deterministic
                          ? (sigma / rep.eta_gic) * std::sqrt(2.0) * core
                          : (4.0 * sigma / rep.eta_gic) * core)
                   : std::numeric_limits<double>::infinity();

  // w = M_{T*,T*}^{-1} v0 restricted to T*, the quantity appearing in the
  // per-coordinate magnitude requirements and the detection level
  const int t0 = rep.t0;
  Matrix A(t0, t0);
  Vector vT(t0);
  for (int a = 0; a < t0; ++a) {
    vT[a] = ext.support.v[ext.support.T[a]];
    for (int b = 0; b < t0; ++b) A(a, b) = M.matrix()(ext.support.T[a], ext.support.T[b]);
  }
  rep.w_abs.setConstant(t0, std::numeric_limits<double>::quiet_NaN());
  double inv_inf_norm = std::numeric_limits<double>::quiet_NaN();
  if (rep.c_min > 1e-12) {
    Eigen::LDLT<Matrix> ldlt(A);
    rep.w_abs = ldlt.solve(vT).cwiseAbs();
    Matrix Ainv = ldlt.solve(Matrix::Identity(t0, t0));
    inv_inf_norm = Ainv.cwiseAbs().rowwise().sum().maxCoeff();
  }

  const double on_S_factor = regime == Regime::deterministic ? 1.0 : 1.5;
  const double off_S_factor = regime == Regime::deterministic ? 1.0 : 2.0;
  rep.theta_min_required.resize(rep.s0);
  rep.pass_theta_min_on_S = true;
  rep.pass_theta_min_off_S = true;
  std::vector<char> in_S(p, 0);
  for (int i : S) in_S[i] = 1;
  int si = 0;
  for (int a = 0; a < t0; ++a) {
    int i = ext.support.T[a];
    if (in_S[i]) {
      double req = c2 * rep.lambda + on_S_factor * rep.lambda * rep.w_abs[a];
      rep.theta_min_required[si++] = req;
      if (!(std::abs(theta0[i]) >= req)) rep.pass_theta_min_on_S = false;
    } else {
      if (!(rep.w_abs[a] >= off_S_factor * c2)) rep.pass_theta_min_off_S = false;
    }
  }

  rep.detection_level = sigma * std::sqrt(logp / n) * (1.0 + inv_inf_norm);

  double eta2 = rep.eta_gic * rep.eta_gic;
  rep.m1 = (rep.eta_gic > 0 && rep.c_min > 0)
               ? 74.0 * c1 / (eta2 * rep.c_min)
               : std::numeric_limits<double>::infinity();
  rep.m3 = rep.c_min > 0 ? 1024.0 * c1 / (c2 * c2 * rep.c_min * rep.c_min)
                         : std::numeric_limits<double>::infinity();
  rep.m1_tilde = rep.inflation * rep.m1;
  rep.m3_tilde = rep.inflation * rep.m3;

  if (regime == Regime::random) {
    double nm = std::max(rep.m1, rep.m3) * rep.t0 * logp;
    rep.n_min = std::isfinite(nm) ? static_cast<long>(std::ceil(nm))
                                  : std::numeric_limits<long>::max();
    rep.pass_n = n >= rep.n_min;
    rep.probability_bound = 1.0 - p * std::exp(-n / 10.0) -
                            6.0 * std::exp(-rep.t0 / 2.0) -
                            8.0 * std::pow(static_cast<double>(p), 1.0 - c1);
  } else {
    rep.n_min = 0;
    rep.pass_n = true;
    rep.probability_bound =
        1.0 - 4.0 * std::pow(static_cast<double>(p), 1.0 - c1);
  }

  rep.pass_normalization = M.max_diagonal() <= 1.0 + 1e-12;
  rep.pass_c_min = rep.c_min >= 1e-10;
  rep.pass_gic = rep.eta_gic > 0;
  rep.pass_eta_c2 = rep.eta_gic <= c2 * std::sqrt(std::max(rep.c_min, 0.0));
  rep.pass_all = rep.pass_normalization && rep.pass_c_min && rep.pass_gic &&
                 rep.pass_theta_min_on_S && rep.pass_theta_min_off_S &&
                 rep.pass_eta_c2 && rep.pass_n;
  return rep;
}

/// Upper bound on P(||theta_GL - theta0||_inf >= mu) for the two-stage
/// selector: the signed-support failure probability of the matching regime
/// plus the restricted-OLS tail 2 p exp(-n C_min mu^2 / (2 sigma^2)).
inline double supnorm_failure_bound(Regime regime, int p, int n, double c1,
                                    double c_min, int t0, double sigma, double mu) {
  if (sigma <= 0) throw ArgumentError("sigma must be positive");
  double ols_tail =
      2.0 * p * std::exp(-n * c_min * mu * mu / (2.0 * sigma * sigma));
  double sign_fail =
      regime == Regime::deterministic
          ? 4.0 * std::pow(static_cast<double>(p), 1.0 - c1)
          : p * std::exp(-n / 10.0) + 6.0 * std::exp(-t0 / 2.0) +
                8.0 * std::pow(static_cast<double>(p), 1.0 - c1);
  return sign_fail + ols_tail;
}

}  // namespace glselect
