#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "glselect/core.hpp"

namespace glselect {

/// Counter-based deterministic RNG. The i-th raw output of stream s under
/// master seed m is splitmix64_mix(key(m, s) + i * phi), where phi is the
/// 64-bit golden-ratio constant and key(m, s) = mix(m ^ mix(s * phi + 1)).
/// Outputs therefore depend only on (seed, stream, counter), so replicate
/// substreams can be opened independently and reproduce bit-identically
/// regardless of evaluation order.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix(seed ^ mix(stream * kPhi + 1))) {}

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * kPhi); }

  /// Uniform draw in (0, 1]. Never returns 0, so log() is always safe.
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; the paired draw is cached.
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = next_uniform();
    double u2 = next_uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  /// Uniform integer in [0, bound) by rejection; bound must be positive.
  std::uint64_t next_below(std::uint64_t bound) {
    if (bound == 0) throw ArgumentError("next_below requires a positive bound");
    std::uint64_t limit = ~std::uint64_t(0) - (~std::uint64_t(0) % bound);
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % bound;
  }

  Vector gaussian_vector(int n) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = next_gaussian();
    return v;
  }

  /// Filled row by row, each row left to right.
  Matrix gaussian_matrix(int rows, int cols) {
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = next_gaussian();
    return m;
  }

 private:
  static constexpr std::uint64_t kPhi = 0x9E3779B97F4A7C15ull;

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// k distinct indices from {0, ..., N-1}, sorted ascending (partial
/// Fisher-Yates driven by rng).
inline IndexSet sample_without_replacement(int N, int k, CounterRng& rng) {
  if (k < 0 || k > N) throw ArgumentError("cannot sample " + std::to_string(k) +
                                          " from " + std::to_string(N));
  std::vector<int> pool(N);
  for (int i = 0; i < N; ++i) pool[i] = i;
  for (int i = 0; i < k; ++i) {
    int j = i + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(N - i)));
    std::swap(pool[i], pool[j]);
  }
  IndexSet out(pool.begin(), pool.begin() + k);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace glselect
