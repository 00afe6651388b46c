#include <doctest.h>

#include <cmath>

#include "glselect/glselect.hpp"
#include "support/oracles.hpp"

using namespace glselect;

namespace {

CovarianceModel confounder_p(int p, int s0, double a) {
  Matrix S = Matrix::Identity(p, p);
  for (int i = 0; i < s0; ++i) S(i, p - 1) = S(p - 1, i) = a;
  return CovarianceModel::population(S);
}

Vector ones_support(int p, int s0) {
  Vector t = Vector::Zero(p);
  for (int i = 0; i < s0; ++i) t[i] = 1.0;
  return t;
}

}  // namespace

TEST_SUITE("conditions") {

TEST_CASE("irrepresentability margin on identity and confounder designs") {
  CovarianceModel I = CovarianceModel::population(Matrix::Identity(4, 4));
  Vector theta0 = ones_support(4, 2);
  CHECK(irrepresentability_margin(I, theta0) == doctest::Approx(1.0).epsilon(1e-12));

  CHECK(irrepresentability_margin(confounder_p(4, 2, 0.3), theta0) ==
        doctest::Approx(0.4).epsilon(1e-10));
  CHECK(irrepresentability_margin(confounder_p(4, 2, 0.6), theta0) ==
        doctest::Approx(-0.2).epsilon(1e-10));
  CHECK_THROWS_AS(irrepresentability_margin(I, Vector::Zero(4)), ArgumentError);
}

TEST_CASE("gic margin on identity and both confounder phases") {
  CovarianceModel I = CovarianceModel::population(Matrix::Identity(4, 4));
  Vector theta0 = ones_support(4, 2);
  CHECK(gic_margin(I, theta0) == doctest::Approx(1.0).epsilon(1e-12));

  // below the phase boundary the extended support is S: margins coincide
  CHECK(gic_margin(confounder_p(4, 2, 0.3), theta0) ==
        doctest::Approx(0.4).epsilon(1e-10));

  // above it the norm at (T*, v0) vanishes
  CHECK(gic_margin(confounder_p(4, 2, 0.6), theta0) ==
        doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("gic margin is nonnegative and reduces to irrepresentability when T*=S") {
  CounterRng rng(500, 0);
  for (int rep = 0; rep < 12; ++rep) {
    int p = 3 + static_cast<int>(rng.next_below(8));
    CovarianceModel M =
        CovarianceModel::population(oracle::random_spd_correlation(p, rng));
    Vector theta0 = Vector::Zero(p);
    IndexSet S = sample_without_replacement(p, 1 + static_cast<int>(rng.next_below(2)), rng);
    for (int i : S) theta0[i] = rng.next_gaussian() > 0 ? 1.0 : -1.0;

    ExtendedSupport ext = extended_support(M, theta0);
    double g = gic_margin_from(M, ext);
    CHECK(g >= -1e-8);
    CHECK(g <= 1.0 + 1e-12);
    if (ext.support.T == S) {
      CHECK(g == doctest::Approx(irrepresentability_margin(M, theta0)).epsilon(1e-10));
    }
  }
}

TEST_CASE("confounder sweep: irrepresentability iff a*s0 < 1, gic in both windows") {
  const int s0 = 2, p = s0 + 2;
  Vector theta0 = ones_support(p, s0);
  const double eta = 0.4;
  // grid avoids the exact boundary a = 1/s0, where the dual constraint is
  // tight and the margin degenerates to 0
  for (double a : {0.0, 0.1, 0.2, 0.3, 0.55, 0.6, 0.65, 0.7}) {
    CovarianceModel M = confounder_p(p, s0, a);
    double irr = irrepresentability_margin(M, theta0);
    CHECK((irr > 0) == (a * s0 < 1.0));
    if (a <= (1.0 - eta) / s0 || a > 1.0 / s0) {
      CHECK(gic_margin(M, theta0) >= eta - 1e-10);
    }
  }
}

TEST_CASE("restricted eigenvalue exact mode") {
  CovarianceModel I = CovarianceModel::population(Matrix::Identity(6, 6));
  for (int s : {1, 2, 4}) {
    RestrictedEigenvalue r = restricted_eigenvalue(I, s, 0.0);
    CHECK(r.value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.certificate == KappaCertificate::exact);
  }

  // worst 2-subset of the a=0.6 confounder is {i, p} with eigenvalue 1 - a
  RestrictedEigenvalue r = restricted_eigenvalue(confounder_p(4, 2, 0.6), 2, 0.0);
  CHECK(r.value == doctest::Approx(0.4).epsilon(1e-10));
  CHECK(r.certificate == KappaCertificate::exact);
}

TEST_CASE("restricted eigenvalue respects the global eigenvalue floor") {
  CovarianceModel M = confounder_p(4, 2, 0.6);
  double lam_min = 1.0 - 0.6 * std::sqrt(2.0);  // 0.15147...
  CHECK(M.min_eigenvalue() == doctest::Approx(lam_min).epsilon(1e-12));
  for (double c0 : {0.0, 1.0, 3.0}) {
    RestrictedEigenvalue r = restricted_eigenvalue(M, 2, c0);
    CHECK(r.value >= lam_min - 1e-10);
    if (c0 > 0) CHECK(r.certificate == KappaCertificate::heuristic_upper);
  }
}

TEST_CASE("restricted eigenvalue guards and modes") {
  CovarianceModel I = CovarianceModel::population(Matrix::Identity(30, 30));
  CHECK_THROWS_AS(restricted_eigenvalue(I, 2, 0.0, KappaMode::exact), CapabilityError);
  // automatic mode falls back to the heuristic above the enumeration guard
  RestrictedEigenvalue r = restricted_eigenvalue(I, 2, 0.0);
  CHECK(r.certificate == KappaCertificate::heuristic_upper);
  CHECK(r.value == doctest::Approx(1.0).epsilon(1e-9));

  CovarianceModel M = confounder_p(5, 2, 0.5);
  CHECK_THROWS_AS(restricted_eigenvalue(M, 0, 0.0), ArgumentError);
  CHECK_THROWS_AS(restricted_eigenvalue(M, 6, 0.0), ArgumentError);
  CHECK_THROWS_AS(restricted_eigenvalue(M, 2, -1.0), ArgumentError);
  CHECK_THROWS_AS(restricted_eigenvalue(M, 2, 0.5, KappaMode::exact), ArgumentError);
}

TEST_CASE("restricted eigenvalue monotonicity") {
  CounterRng rng(501, 0);
  for (int rep = 0; rep < 6; ++rep) {
    int p = 5 + static_cast<int>(rng.next_below(4));
    CovarianceModel M =
        CovarianceModel::population(oracle::random_spd_correlation(p, rng));
    // exact mode: non-increasing in s
    double prev = std::numeric_limits<double>::infinity();
    for (int s = 1; s <= p; ++s) {
      double v = restricted_eigenvalue(M, s, 0.0, KappaMode::exact).value;
      CHECK(v <= prev + 1e-12);
      CHECK(v >= M.min_eigenvalue() - 1e-10);
      prev = v;
    }
    // widening the cone cannot raise the (seeded) heuristic above the exact
    // sparse value, because the sparse minimizer stays feasible
    double exact0 = restricted_eigenvalue(M, 2, 0.0).value;
    for (double c0 : {0.5, 1.0, 2.0}) {
      CHECK(restricted_eigenvalue(M, 2, c0).value <= exact0 + 1e-9);
    }
  }
}

TEST_CASE("min singular value of principal blocks") {
  CovarianceModel I = CovarianceModel::population(Matrix::Identity(5, 5));
  CHECK(min_singular_value(I, {0, 3}) == doctest::Approx(1.0).epsilon(1e-12));

  CovarianceModel M = confounder_p(4, 2, 0.6);
  CHECK(min_singular_value(M, {0, 1, 3}) ==
        doctest::Approx(0.15147186257614298).epsilon(1e-12));
  CHECK(min_singular_value(M, {3}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(min_singular_value(M, {}), ArgumentError);
  CHECK_THROWS_AS(min_singular_value(M, {7}), ArgumentError);
}

TEST_CASE("prescribed lambda formulas") {
  CHECK(theorem_lambda(1.0, 0.5, 2.0, 100, 200, Regime::deterministic) ==
        doctest::Approx(0.6069708517540585).epsilon(1e-14));
  CHECK(theorem_lambda(1.0, 0.5, 2.0, 100, 200, Regime::random) ==
        doctest::Approx(1.7167728210314779).epsilon(1e-14));
  // doubling eta halves lambda in both regimes
  for (Regime r : {Regime::deterministic, Regime::random}) {
    double l1 = theorem_lambda(1.0, 0.5, 2.0, 100, 200, r);
    double l2 = theorem_lambda(1.0, 1.0, 2.0, 100, 200, r);
    CHECK(l1 == doctest::Approx(2.0 * l2).epsilon(1e-14));
  }
  CHECK_THROWS_AS(theorem_lambda(1.0, 0.5, 1.0, 100, 200, Regime::random),
                  ArgumentError);
  CHECK_THROWS_AS(theorem_lambda(1.0, 0.0, 2.0, 100, 200, Regime::random),
                  ArgumentError);
}

TEST_CASE("report constants M1 and M3 at eta=0.5, C_min=0.4") {
  // Engineered so the computed margins hit the reference constants exactly:
  // eta_gic = 0.2/0.4 margin = 0.5, C_min over T* = {0} is 0.4.
  Matrix m(2, 2);
  m << 0.4, 0.2, 0.2, 1.0;
  CovarianceModel M = CovarianceModel::population(m);
  Vector theta0(2);
  theta0 << 1.0, 0.0;
  ConditionReport rep = theorem_report(M, theta0, 1.0, 200, 2.0, 0.5, Regime::random);
  CHECK(rep.t_star == IndexSet{0});
  CHECK(rep.eta_gic == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rep.c_min == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(rep.m1 == doctest::Approx(1480.0).epsilon(1e-10));
  CHECK(rep.m3 == doctest::Approx(51200.0).epsilon(1e-10));
  CHECK(rep.m1_tilde == doctest::Approx(rep.inflation * rep.m1).epsilon(1e-12));
  CHECK(rep.m3_tilde == doctest::Approx(rep.inflation * rep.m3).epsilon(1e-12));
  CHECK(rep.n_min ==
        static_cast<long>(std::ceil(51200.0 * 1 * std::log(2.0))));
}

TEST_CASE("report on the confounder above the phase boundary, deterministic") {
  // theta_min requirement on S is lambda * (c2 + 10/7) and both magnitude
  // conditions hold at theta_min = 1 with sigma = 0.1, n = 1e4.
  CovarianceModel M = confounder_p(4, 2, 0.6);
  Vector theta0 = ones_support(4, 2);
  ConditionReport rep =
      theorem_report(M, theta0, 0.1, 10000, 2.0, 0.1, Regime::deterministic);
  CHECK(rep.regime == Regime::deterministic);
  CHECK(rep.t_star == IndexSet{0, 1, 3});
  CHECK(rep.s0 == 2);
  CHECK(rep.t0 == 3);
  CHECK(rep.eta_gic == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(rep.eta_irr == doctest::Approx(-0.2).epsilon(1e-10));

  double lambda = theorem_lambda(0.1, 1.0, 2.0, 4, 10000, Regime::deterministic);
  CHECK(rep.lambda == doctest::Approx(lambda).epsilon(1e-12));
  REQUIRE(rep.theta_min_required.size() == 2);
  for (int i = 0; i < 2; ++i)
    CHECK(rep.theta_min_required[i] ==
          doctest::Approx(lambda * (0.1 + 10.0 / 7.0)).epsilon(1e-10));
  CHECK(rep.pass_theta_min_on_S);
  CHECK(rep.pass_theta_min_off_S);  // |w_p| = 5/7 >= c2 = 0.1
  CHECK(rep.pass_normalization);
  CHECK(rep.pass_c_min);
  CHECK(rep.pass_gic);
  CHECK(rep.probability_bound ==
        doctest::Approx(1.0 - 4.0 * std::pow(4.0, -1.0)).epsilon(1e-12));
  // the blanket eta <= c2 sqrt(C_min) normalization cannot hold with a full
  // margin of 1 and small c2; the report must say so rather than pass
  CHECK_FALSE(rep.pass_eta_c2);
  CHECK_FALSE(rep.pass_all);
}

TEST_CASE("report random-regime factors 3/2 and 2 c2") {
  CovarianceModel M = confounder_p(4, 2, 0.6);
  Vector theta0 = ones_support(4, 2);
  ConditionReport rep =
      theorem_report(M, theta0, 1.0, 1000, 2.0, 0.5, Regime::random);
  double lambda = theorem_lambda(1.0, 1.0, 2.0, 4, 1000, Regime::random);
  REQUIRE(rep.theta_min_required.size() == 2);
  CHECK(rep.theta_min_required[0] ==
        doctest::Approx(0.5 * lambda + 1.5 * lambda * (10.0 / 7.0)).epsilon(1e-10));
  // off-S requirement |w_p| >= 2 c2 = 1.0 fails at 5/7
  CHECK_FALSE(rep.pass_theta_min_off_S);
  CHECK(rep.probability_bound ==
        doctest::Approx(1.0 - 4.0 * std::exp(-100.0) - 6.0 * std::exp(-1.5) -
                        8.0 / 4.0)
            .epsilon(1e-12));
}

TEST_CASE("report flags diagonal normalization violations") {
  Matrix m(2, 2);
  m << 1.5, 0.0, 0.0, 1.0;
  ConditionReport rep =
      theorem_report(CovarianceModel::population(m), Vector::Ones(2), 1.0, 100,
                     2.0, 0.5, Regime::deterministic);
  CHECK_FALSE(rep.pass_normalization);
}

TEST_CASE("report argument validation") {
  CovarianceModel I = CovarianceModel::population(Matrix::Identity(3, 3));
  Vector theta0 = ones_support(3, 1);
  CHECK_THROWS_AS(theorem_report(I, theta0, 1.0, 100, 1.0, 0.5, Regime::random),
                  ArgumentError);
  CHECK_THROWS_AS(theorem_report(I, theta0, 1.0, 100, 2.0, 0.0, Regime::random),
                  ArgumentError);
  CHECK_THROWS_AS(theorem_report(I, theta0, 1.0, 0, 2.0, 0.5, Regime::random),
                  ArgumentError);
}

TEST_CASE("sup-norm failure bound combines sign failure and OLS tail") {
  double det = supnorm_failure_bound(Regime::deterministic, 50, 600, 2.0, 1.0, 2,
                                     0.25, 0.1);
  double expected_det = 4.0 * std::pow(50.0, -1.0) +
                        2.0 * 50.0 * std::exp(-600.0 * 0.01 / (2.0 * 0.0625));
  CHECK(det == doctest::Approx(expected_det).epsilon(1e-12));

  double ran =
      supnorm_failure_bound(Regime::random, 50, 600, 2.0, 1.0, 2, 0.25, 0.1);
  double expected_ran = 50.0 * std::exp(-60.0) + 6.0 * std::exp(-1.0) +
                        8.0 * std::pow(50.0, -1.0) +
                        2.0 * 50.0 * std::exp(-600.0 * 0.01 / (2.0 * 0.0625));
  CHECK(ran == doctest::Approx(expected_ran).epsilon(1e-12));
  CHECK_THROWS_AS(
      supnorm_failure_bound(Regime::random, 50, 600, 2.0, 1.0, 2, 0.0, 0.1),
      ArgumentError);
}

}  // TEST_SUITE
