#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace glselect {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using IntVector = Eigen::VectorXi;
using IndexSet = std::vector<int>;  // always kept sorted ascending, 0-based

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct LinearAlgebraError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when an iterative solver exhausts its sweep budget. Carries the
/// best iterate seen and its stationarity residual so callers can inspect it.
struct ConvergenceError : std::runtime_error {
  Vector best;
  double residual;
  ConvergenceError(const std::string& msg, Vector best_, double residual_)
      : std::runtime_error(msg), best(std::move(best_)), residual(residual_) {}
};

struct DegeneracyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RankError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CapabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Two independently computed signed supports disagreed; carries both.
struct InconsistencyError : std::runtime_error {
  IndexSet expected, actual;
  InconsistencyError(const std::string& msg, IndexSet expected_, IndexSet actual_)
      : std::runtime_error(msg), expected(std::move(expected_)), actual(std::move(actual_)) {}
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Scalar helpers
// ---------------------------------------------------------------------------

/// Scale-aware threshold below which a coefficient counts as zero.
inline double zero_threshold(const Vector& v) {
  double mx = v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
  return 1e-8 * std::max(1.0, mx);
}

inline int sign_of(double x, double tol) {
  if (std::abs(x) <= tol) return 0;
  return x > 0 ? 1 : -1;
}

inline double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

/// Shortest decimal string that round-trips to the same double.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Signed support
// ---------------------------------------------------------------------------

/// Sign pattern of a coefficient vector: entries in {-1, 0, +1}, together with
/// the sorted index set of nonzeros.
struct SignedSupport {
  IntVector v;
  IndexSet T;
  int t0 = 0;

  static SignedSupport from_vector(const Vector& theta, double zero_tol) {
    SignedSupport s;
    s.v.resize(theta.size());
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      s.v[i] = sign_of(theta[i], zero_tol);
      if (s.v[i] != 0) s.T.push_back(static_cast<int>(i));
    }
    s.t0 = static_cast<int>(s.T.size());
    return s;
  }

  /// Uses the scale-aware default threshold derived from theta itself.
  static SignedSupport from_vector(const Vector& theta) {
    return from_vector(theta, zero_threshold(theta));
  }

  bool operator==(const SignedSupport& o) const {
    return v.size() == o.v.size() && (v.array() == o.v.array()).all();
  }
  bool operator!=(const SignedSupport& o) const { return !(*this == o); }
};

/// Signed support of the nonzero entries, exact comparison (no tolerance).
inline SignedSupport exact_signed_support(const Vector& theta) {
  return SignedSupport::from_vector(theta, 0.0);
}

// ---------------------------------------------------------------------------
// Covariance model
// ---------------------------------------------------------------------------

enum class CovarianceKind { population, empirical };

/// A p-by-p covariance matrix tagged with its provenance. Population models
/// are user-supplied truths; empirical ones are X^T X / n Gram matrices.
/// Construction validates symmetry (1e-12) and positive semidefiniteness
/// (eigenvalues >= -1e-10).
class CovarianceModel {
 public:
  static CovarianceModel population(Matrix m) {
    return CovarianceModel(std::move(m), CovarianceKind::population);
  }
  static CovarianceModel empirical(Matrix m) {
    return CovarianceModel(std::move(m), CovarianceKind::empirical);
  }

  const Matrix& matrix() const { return m_; }
  CovarianceKind kind() const { return kind_; }
  int p() const { return static_cast<int>(m_.rows()); }
  double min_eigenvalue() const { return min_eig_; }

  /// Max diagonal entry; theorem evaluators expect columns normalized so that
  /// every diagonal entry is <= 1 + 1e-12.
  double max_diagonal() const { return m_.diagonal().maxCoeff(); }

 private:
  CovarianceModel(Matrix m, CovarianceKind kind) : m_(std::move(m)), kind_(kind) {
    if (m_.rows() == 0 || m_.rows() != m_.cols())
      throw DimensionError("covariance matrix must be square and nonempty");
    double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
    if ((m_ - m_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw ArgumentError("covariance matrix is not symmetric");
    m_ = ((m_ + m_.transpose()) / 2.0).eval();  // kill asymmetric rounding dust
    Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
    min_eig_ = es.eigenvalues().minCoeff();
    if (min_eig_ < -1e-10 * scale)
      throw ArgumentError("covariance matrix has eigenvalue " +
                          format_double(min_eig_) + " < -1e-10");
  }

  Matrix m_;
  CovarianceKind kind_;
  double min_eig_;
};

/// Gram matrix X^T X / n, exactly symmetric by construction.
inline CovarianceModel empirical_covariance(const Matrix& X) {
  if (X.rows() == 0 || X.cols() == 0)
    throw DimensionError("design matrix must be nonempty");
  const double n = static_cast<double>(X.rows());
  Matrix m = Matrix::Zero(X.cols(), X.cols());
  m.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose(), 1.0 / n);
  m = m.selfadjointView<Eigen::Lower>();
  return CovarianceModel::empirical(std::move(m));
}

// ---------------------------------------------------------------------------
// Regression instance
// ---------------------------------------------------------------------------

/// Known ground truth attached to a synthetic instance.
struct GroundTruth {
  Vector theta0;
  IndexSet S;   // exact nonzeros of theta0
  int s0 = 0;
  Vector W;     // noise vector, Y = X theta0 + W
  double sigma = 0.0;
};

/// Design matrix and response, optionally carrying the generating truth.
struct RegressionInstance {
  Matrix X;
  Vector Y;
  std::optional<GroundTruth> truth;

  RegressionInstance(Matrix X_, Vector Y_) : X(std::move(X_)), Y(std::move(Y_)) {
    if (X.rows() != Y.size())
      throw DimensionError("X has " + std::to_string(X.rows()) + " rows but Y has " +
                           std::to_string(Y.size()) + " entries");
    if (X.rows() == 0 || X.cols() == 0)
      throw DimensionError("design matrix must be nonempty");
  }

  static RegressionInstance with_truth(Matrix X, Vector Y, Vector theta0, Vector W,
                                       double sigma) {
    RegressionInstance inst(std::move(X), std::move(Y));
    if (theta0.size() != inst.X.cols())
      throw DimensionError("theta0 length does not match number of columns");
    if (W.size() != inst.Y.size())
      throw DimensionError("noise length does not match number of rows");
    double recon = (inst.Y - inst.X * theta0 - W).cwiseAbs().maxCoeff();
    double scale = std::max(1.0, inst.Y.cwiseAbs().maxCoeff());
    if (recon > 1e-12 * scale)
      throw ArgumentError("Y does not reconstruct as X*theta0 + W (residual " +
                          format_double(recon) + ")");
    GroundTruth t;
    t.theta0 = std::move(theta0);
    for (Eigen::Index i = 0; i < t.theta0.size(); ++i)
      if (t.theta0[i] != 0.0) t.S.push_back(static_cast<int>(i));
    t.s0 = static_cast<int>(t.S.size());
    t.W = std::move(W);
    t.sigma = sigma;
    inst.truth = std::move(t);
    return inst;
  }

  int n() const { return static_cast<int>(X.rows()); }
  int p() const { return static_cast<int>(X.cols()); }
};

/// X^T W / n, the empirical correlation of the columns with the noise.
inline Vector noise_correlation(const Matrix& X, const Vector& W) {
  if (X.rows() != W.size())
    throw DimensionError("noise length does not match number of rows");
  return X.transpose() * W / static_cast<double>(X.rows());
}

// ---------------------------------------------------------------------------
// Penalty bookkeeping
// ---------------------------------------------------------------------------

/// Regularization levels in play for a fit: the data-level lambda, the
/// population-level xi it shadows, and the breakdown point xi0 above which
/// the zero-noise signed support changes.
struct PenaltyState {
  double lambda = 0.0;
  double xi = 0.0;
  double xi0 = std::numeric_limits<double>::infinity();
};

// ---------------------------------------------------------------------------
// Small index-set helpers shared across modules
// ---------------------------------------------------------------------------

inline bool contains_all(const IndexSet& big, const IndexSet& small) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

inline IndexSet set_union(const IndexSet& a, const IndexSet& b) {
  IndexSet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline std::string index_set_to_string(const IndexSet& s) {
  std::string out = "{";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "}";
}

namespace detail {

inline std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& where, const std::string& v) {
  try {
    size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw ParseError(where + ": cannot parse '" + v + "' as a number");
  }
}

inline long parse_int(const std::string& where, const std::string& v) {
  try {
    size_t pos = 0;
    long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw ParseError(where + ": cannot parse '" + v + "' as an integer");
  }
}

inline std::vector<std::string> split_commas(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(trim(tok));
  return out;
}

}  // namespace detail

}  // namespace glselect
