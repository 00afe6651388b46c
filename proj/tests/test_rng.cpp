#include <doctest.h>

#include <cmath>
#include <set>

#include "glselect/glselect.hpp"

using namespace glselect;

TEST_SUITE("rng") {

TEST_CASE("identical seed and stream reproduce the sequence exactly") {
  CounterRng a(42, 7), b(42, 7);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  CounterRng c(42, 7), d(42, 7);
  for (int i = 0; i < 100; ++i) CHECK(c.next_gaussian() == d.next_gaussian());
}

TEST_CASE("different streams from one seed decorrelate") {
  CounterRng a(42, 0), b(42, 1);
  int same = 0;
  for (int i = 0; i < 64; ++i) same += a.next_u64() == b.next_u64();
  CHECK(same == 0);
}

TEST_CASE("different seeds change the sequence") {
  CounterRng a(1, 0), b(2, 0);
  CHECK(a.next_u64() != b.next_u64());
}

TEST_CASE("uniform draws live in (0, 1]") {
  CounterRng rng(5, 0);
  for (int i = 0; i < 10000; ++i) {
    double u = rng.next_uniform();
    CHECK(u > 0.0);
    CHECK(u <= 1.0);
  }
}

TEST_CASE("gaussian draws have the right first two moments") {
  CounterRng rng(6, 0);
  const int N = 100000;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < N; ++i) {
    double g = rng.next_gaussian();
    sum += g;
    sum2 += g * g;
  }
  double mean = sum / N;
  double var = sum2 / N - mean * mean;
  // 5-sigma bands: sd(mean) = 1/sqrt(N), sd(var) ~ sqrt(2/N)
  CHECK(std::abs(mean) < 5.0 / std::sqrt(static_cast<double>(N)));
  CHECK(std::abs(var - 1.0) < 5.0 * std::sqrt(2.0 / N));
}

TEST_CASE("next_below stays in range and covers small supports") {
  CounterRng rng(7, 0);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    std::uint64_t v = rng.next_below(5);
    CHECK(v < 5);
    seen.insert(v);
  }
  CHECK(seen.size() == 5);
}

TEST_CASE("gaussian matrix is reproducible and shaped correctly") {
  CounterRng a(8, 3), b(8, 3);
  Matrix X = a.gaussian_matrix(4, 6);
  Matrix Y = b.gaussian_matrix(4, 6);
  CHECK(X.rows() == 4);
  CHECK(X.cols() == 6);
  CHECK((X - Y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("counter draws do not depend on interleaved vector granularity") {
  // One stream read as 10 singles equals the same stream read as one vector.
  CounterRng a(9, 0), b(9, 0);
  Vector v = a.gaussian_vector(10);
  for (int i = 0; i < 10; ++i) CHECK(v[i] == b.next_gaussian());
}

TEST_CASE("sample_without_replacement produces sorted unique indices") {
  CounterRng rng(10, 0);
  for (int rep = 0; rep < 50; ++rep) {
    IndexSet s = sample_without_replacement(20, 7, rng);
    REQUIRE(s.size() == 7);
    for (size_t i = 0; i + 1 < s.size(); ++i) CHECK(s[i] < s[i + 1]);
    for (int v : s) {
      CHECK(v >= 0);
      CHECK(v < 20);
    }
  }
  IndexSet full = sample_without_replacement(5, 5, rng);
  CHECK(full == IndexSet{0, 1, 2, 3, 4});
}

}  // TEST_SUITE
