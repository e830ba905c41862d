#pragma once

#include "svt/types.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace svt {

// Deterministic Gaussian stream: mt19937_64 + Box-Muller on 53-bit uniforms.
// The transform is pinned here (rather than std::normal_distribution, which is
// implementation-defined) so a seed reproduces the same values on any build.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t raw() { return engine_(); }

  /// Uniform draw in (0, 1].
  double uniform() { return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; pairs are consumed cos-first.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * kPi * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

private:
  static constexpr double kPi = 3.14159265358979323846;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

template <class Scalar>
Scalar standard_gaussian(Rng& rng);

template <>
inline double standard_gaussian<double>(Rng& rng) {
  return rng.gaussian();
}

// Real and imaginary parts are independent N(0, 1).
template <>
inline Complex standard_gaussian<Complex>(Rng& rng) {
  double re = rng.gaussian();
  double im = rng.gaussian();
  return {re, im};
}

/// iid standard Gaussian entries, filled column-major (fixed order).
template <class Scalar>
Mat<Scalar> gaussian_matrix(Index m, Index n, Rng& rng) {
  Mat<Scalar> x(m, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < m; ++i) x(i, j) = standard_gaussian<Scalar>(rng);
  return x;
}

// Haar-distributed m x r orthonormal frame: QR of a Gaussian matrix with the
// column phases fixed so the R factor has positive real diagonal.
template <class Scalar>
Mat<Scalar> haar_orthonormal(Index m, Index r, Rng& rng) {
  Mat<Scalar> g = gaussian_matrix<Scalar>(m, r, rng);
  Eigen::HouseholderQR<Mat<Scalar>> qr(g);
  Mat<Scalar> q = qr.householderQ() * Mat<Scalar>::Identity(m, r);
  for (Index j = 0; j < r; ++j) {
    Scalar d = qr.matrixQR()(j, j);
    double a = std::abs(d);
    if (a > 0.0) q.col(j) *= d / Scalar(a);
  }
  return q;
}

/// Product of Gaussian factors; rank min(r, m, n) with probability one.
template <class Scalar>
Mat<Scalar> gaussian_low_rank(Index m, Index n, Index r, Rng& rng) {
  Mat<Scalar> g1 = gaussian_matrix<Scalar>(m, r, rng);
  Mat<Scalar> g2 = gaussian_matrix<Scalar>(n, r, rng);
  return g1 * g2.adjoint();
}

}  // namespace svt
