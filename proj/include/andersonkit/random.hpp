#pragma once

// Seeded pseudo-randomness with platform-independent output.
//
// The engine is std::mt19937_64, whose output sequence the C++ standard fixes
// for a given seed. The standard distributions are implementation-defined, so
// uniforms are formed from the top 53 bits of each draw and normals by the
// Box-Muller transform. The same seed therefore gives the same matrices on
// every conforming platform.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "andersonkit/linalg.hpp"

namespace andersonkit {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 == 0.0) u1 = uniform();
    const double u2 = uniform();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    spare_ = rad * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return rad * std::cos(2.0 * std::numbers::pi * u2);
  }

  RealVector uniform_vector(std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (auto& x : v) x = uniform(lo, hi);
    return RealVector(std::move(v));
  }

  DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols) {
    std::vector<double> v(rows * cols);
    for (auto& x : v) x = normal();
    return DenseMatrix(rows, cols, std::move(v));
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Haar-distributed orthogonal matrix: Q from the QR of a Gaussian matrix,
/// with column signs fixed so that diag(R) > 0.
inline DenseMatrix random_orthogonal(std::size_t n, Rng& rng) {
  const DenseMatrix g = rng.gaussian_matrix(n, n);
  const QrFactors qr = householder_qr(g, 1e-300, false);
  std::vector<double> d(n * n);
  for (std::size_t j = 0; j < n; ++j) {
    const double sign = qr.r[j][j] < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) d[i * n + j] = sign * qr.q[j][i];
  }
  return DenseMatrix(n, n, std::move(d));
}

}  // namespace andersonkit
