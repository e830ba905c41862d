#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "svt/random.hpp"
#include "svt/spectral.hpp"
#include "svt/svd.hpp"
#include "svt/svd_differential.hpp"
#include "svt/types.hpp"
#include "test_support.hpp"

#include <cmath>

using svt::Complex;
using svt::ComplexMat;
using svt::Index;
using svt::Mat;
using svt::RealMat;
using svt::RealVec;
using test_support::seeded_gaussian;
using test_support::seeded_simple_full_rank;

namespace {

template <class Scalar>
void check_svd_contracts(Index m, Index n, std::uint64_t seed) {
  Mat<Scalar> x = seeded_gaussian<Scalar>(m, n, seed);
  svt::SvdFactors<Scalar> f = svt::compute_svd(x);
  const Index r = std::min(m, n);
  REQUIRE(f.u.rows() == m);
  REQUIRE(f.u.cols() == r);
  REQUIRE(f.v.rows() == n);
  REQUIRE(f.sigma.size() == r);
  CHECK((f.reconstruct() - x).norm() <= 1e-10 * std::max(1.0, f.sigma_max()));
  double tol_orth = 1e-10 * static_cast<double>(std::max(m, n));
  CHECK((f.u.adjoint() * f.u - Mat<Scalar>::Identity(r, r)).cwiseAbs().maxCoeff() <= tol_orth);
  CHECK((f.v.adjoint() * f.v - Mat<Scalar>::Identity(r, r)).cwiseAbs().maxCoeff() <= tol_orth);
  for (Index i = 0; i + 1 < r; ++i) CHECK(f.sigma(i) >= f.sigma(i + 1));
  CHECK(f.sigma(r - 1) >= 0.0);
}

}  // namespace

TEST_CASE("svd on a diagonal matrix") {
  RealMat x = RealMat::Zero(2, 2);
  x(0, 0) = 3.0;
  x(1, 1) = 1.0;
  svt::SvdFactors<double> f = svt::compute_svd(x);
  CHECK(f.sigma(0) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(f.sigma(1) == doctest::Approx(1.0).epsilon(1e-14));
  // Identity factors up to column signs; the sign convention makes them exact.
  CHECK((f.u - RealMat::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK((f.v - RealMat::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("svd of the zero matrix") {
  RealMat x = RealMat::Zero(3, 2);
  svt::SvdFactors<double> f = svt::compute_svd(x);
  CHECK(f.sigma(0) == 0.0);
  CHECK(f.sigma(1) == 0.0);
}

TEST_CASE("svd reconstruction and orthonormality over shapes and fields") {
  std::uint64_t seed = 11;
  for (auto [m, n] : {std::pair<Index, Index>{5, 4}, {4, 5}, {6, 6}, {30, 7}, {3, 20}}) {
    check_svd_contracts<double>(m, n, seed++);
    check_svd_contracts<Complex>(m, n, seed++);
  }
}

TEST_CASE("svd rejects non-finite input") {
  RealMat x = RealMat::Zero(2, 2);
  x(0, 1) = std::nan("");
  CHECK_THROWS_AS(svt::compute_svd(x), svt::Error);
}

TEST_CASE("svd is deterministic for identical input") {
  ComplexMat x = seeded_gaussian<Complex>(7, 5, 99);
  svt::SvdFactors<Complex> a = svt::compute_svd(x);
  svt::SvdFactors<Complex> b = svt::compute_svd(x);
  CHECK(a.u == b.u);
  CHECK(a.v == b.v);
  CHECK(a.sigma == b.sigma);
}

TEST_CASE("sign convention pins the largest entry of each U column") {
  ComplexMat x = seeded_gaussian<Complex>(6, 4, 123);
  svt::SvdFactors<Complex> f = svt::compute_svd(x);
  for (Index j = 0; j < f.u.cols(); ++j) {
    Index imax = 0;
    f.u.col(j).cwiseAbs().maxCoeff(&imax);
    Complex pivot = f.u(imax, j);
    CHECK(pivot.real() > 0.0);
    CHECK(std::abs(pivot.imag()) <= 1e-12 * pivot.real());
  }
}

TEST_CASE("group_spectrum basic grouping") {
  RealVec s(3);
  s << 2.0, 2.0, 1.0;
  svt::SpectrumProfile p = svt::group_spectrum(s, 1e-8);
  REQUIRE(p.count() == 2);
  CHECK(p.distinct[0] == 2.0);
  CHECK(p.distinct[1] == 1.0);
  CHECK(p.multiplicities[0] == 2);
  CHECK(p.multiplicities[1] == 1);

  RealVec t(3);
  t << 3.0, 2.0, 1.0;
  svt::SpectrumProfile q = svt::group_spectrum(t, 1e-8);
  REQUIRE(q.count() == 3);
  CHECK(q.simple());
}

TEST_CASE("group_spectrum merges near ties and snaps small groups to zero") {
  // Hand application of the greedy rule: the top two group (gap 4e-9 <= 1e-8)
  // with representative mean 1 + 2e-9; the zero stays its own group.
  RealVec s(3);
  s << 1.0 + 4e-9, 1.0, 0.0;
  svt::SpectrumProfile p = svt::group_spectrum(s, 1e-8);
  REQUIRE(p.count() == 2);
  CHECK(p.distinct[0] == doctest::Approx(1.0 + 2e-9).epsilon(1e-15));
  CHECK(p.distinct[1] == 0.0);
  CHECK(p.multiplicities[0] == 2);
  CHECK(p.multiplicities[1] == 1);
  CHECK(p.has_zero_group());
}

TEST_CASE("group_spectrum rejects unsorted input") {
  RealVec s(3);
  s << 1.0, 1.0 + 4e-9, 0.0;
  CHECK_THROWS_AS(svt::group_spectrum(s, 1e-8), svt::Error);
  try {
    svt::group_spectrum(s, 1e-8);
  } catch (const svt::Error& e) {
    CHECK(e.code() == svt::ErrorCode::UnsortedInput);
  }
}

TEST_CASE("is_simple_full_rank verdicts and diagnostics") {
  RealVec ok(2);
  ok << 3.0, 1.0;
  CHECK(svt::is_simple_full_rank(ok, 1e-8).simple_full_rank);

  RealVec repeated(2);
  repeated << 1.0, 1.0;
  auto rep = svt::is_simple_full_rank(repeated, 1e-8);
  CHECK_FALSE(rep.simple_full_rank);
  CHECK(rep.issue == svt::SimplicityCheck::Issue::RepeatedValue);
  CHECK(rep.index == 0);

  RealVec deficient(2);
  deficient << 1.0, 0.0;
  auto def = svt::is_simple_full_rank(deficient, 1e-8);
  CHECK_FALSE(def.simple_full_rank);
  CHECK(def.issue == svt::SimplicityCheck::Issue::RankDeficient);
  CHECK(def.index == 1);
}

TEST_CASE("svd differential on diag(2,1) along E12") {
  // 2x2 system solved by hand: omega_u12 = -1/3, omega_v12 = 2/3, d sigma = 0.
  RealMat x = RealMat::Zero(2, 2);
  x(0, 0) = 2.0;
  x(1, 1) = 1.0;
  RealMat delta = RealMat::Zero(2, 2);
  delta(0, 1) = 1.0;
  svt::SvdDifferential<double> d = svt::svd_differential(x, delta);
  CHECK(d.d_sigma(0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(d.d_sigma(1) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(d.omega_u(0, 1) == doctest::Approx(-1.0 / 3.0).epsilon(1e-13));
  CHECK(d.omega_v(0, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-13));
  CHECK(d.omega_u(0, 0) == 0.0);
  CHECK(d.omega_v(1, 1) == 0.0);
  CHECK((d.dx_reconstruction - delta).norm() <= 1e-12);
}

TEST_CASE("svd differential on diag(2,1) along E11") {
  RealMat x = RealMat::Zero(2, 2);
  x(0, 0) = 2.0;
  x(1, 1) = 1.0;
  RealMat delta = RealMat::Zero(2, 2);
  delta(0, 0) = 1.0;
  svt::SvdDifferential<double> d = svt::svd_differential(x, delta);
  CHECK(d.d_sigma(0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(d.d_sigma(1) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(d.omega_u.cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(d.omega_v.cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("svd differential rejects repeated and rank-deficient input") {
  RealMat tied = RealMat::Identity(2, 2);
  RealMat delta = RealMat::Ones(2, 2);
  CHECK_THROWS_AS(svt::svd_differential(tied, delta), svt::Error);

  RealMat deficient = RealMat::Zero(2, 2);
  deficient(0, 0) = 1.0;
  CHECK_THROWS_AS(svt::svd_differential(deficient, delta), svt::Error);
}

namespace {

template <class Scalar>
void check_skew_structure(std::uint64_t seed) {
  Mat<Scalar> x = seeded_simple_full_rank<Scalar>(5, 4, seed);
  Mat<Scalar> delta = seeded_gaussian<Scalar>(5, 4, seed + 7);
  svt::SvdDifferential<Scalar> d = svt::svd_differential(x, delta);
  const Index r = 4;
  Mat<Scalar> top = d.omega_u.topRows(r);
  CHECK((top + top.adjoint()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((d.omega_v + d.omega_v.adjoint()).cwiseAbs().maxCoeff() <= 1e-12);
  if constexpr (svt::scalar_traits<Scalar>::is_complex) {
    // Diagonal gauge: equal purely imaginary split across both factors.
    for (Index i = 0; i < r; ++i) {
      CHECK(std::abs(top(i, i).real()) <= 1e-14);
      CHECK(std::abs(top(i, i) - d.omega_v(i, i)) <= 1e-14);
    }
  }
  CHECK((d.dx_reconstruction - delta).norm() <= 1e-10 * delta.norm());
}

template <class Scalar>
void check_dsigma_fd(Index m, Index n, std::uint64_t seed) {
  Mat<Scalar> x = seeded_simple_full_rank<Scalar>(m, n, seed);
  Mat<Scalar> delta = seeded_gaussian<Scalar>(m, n, seed + 31);
  svt::SvdDifferential<Scalar> d = svt::svd_differential(x, delta);
  const double h = 1e-6;
  Eigen::JacobiSVD<Mat<Scalar>> plus(x + Scalar(h) * delta);
  Eigen::JacobiSVD<Mat<Scalar>> minus(x - Scalar(h) * delta);
  RealVec fd = (plus.singularValues() - minus.singularValues()) / (2.0 * h);
  CHECK((fd - d.d_sigma).cwiseAbs().maxCoeff() <= 1e-6);
}

}  // namespace

TEST_CASE("differential structure: skew blocks, gauge diagonal, reconstruction") {
  for (std::uint64_t seed : {21u, 22u, 23u}) {
    check_skew_structure<double>(seed);
    check_skew_structure<Complex>(seed);
  }
}

TEST_CASE("d sigma matches central differences on 20 seeded instances per field") {
  for (std::uint64_t seed = 300; seed < 320; ++seed) {
    check_dsigma_fd<double>(5, 4, seed);
    check_dsigma_fd<Complex>(5, 4, seed);
  }
}

TEST_CASE("d sigma matches central differences for wide matrices") {
  for (std::uint64_t seed = 900; seed < 905; ++seed) {
    check_dsigma_fd<double>(3, 6, seed);
    check_dsigma_fd<Complex>(3, 6, seed);
  }
}

TEST_CASE("differential is linear in the direction") {
  RealMat x = seeded_simple_full_rank<double>(5, 4, 42);
  RealMat d1 = seeded_gaussian<double>(5, 4, 43);
  RealMat d2 = seeded_gaussian<double>(5, 4, 44);
  const double a = 0.7, b = -1.3;
  svt::SvdDifferential<double> da = svt::svd_differential(x, d1);
  svt::SvdDifferential<double> db = svt::svd_differential(x, d2);
  svt::SvdDifferential<double> dc = svt::svd_differential<double>(x, a * d1 + b * d2);
  RealVec combo = a * da.d_sigma + b * db.d_sigma;
  CHECK((dc.d_sigma - combo).cwiseAbs().maxCoeff() <=
        1e-12 * std::max(1.0, combo.cwiseAbs().maxCoeff()));
  CHECK((dc.du - (a * da.du + b * db.du)).norm() <= 1e-10);
  CHECK((dc.dv - (a * da.dv + b * db.dv)).norm() <= 1e-10);
}

namespace {

template <class Scalar>
void check_product_rule_fd(Index m, Index n, std::uint64_t seed) {
  const svt::SpectralFunction f = svt::SpectralFunction::soft_threshold(0.5);
  Mat<Scalar> x = seeded_simple_full_rank<Scalar>(m, n, seed);
  Mat<Scalar> delta = seeded_gaussian<Scalar>(m, n, seed + 17);
  svt::SvdDifferential<Scalar> d = svt::svd_differential(x, delta);
  Mat<Scalar> analytic = svt::spectral_directional_derivative(d, f);
  const double h = 1e-6;
  Mat<Scalar> fd = (svt::apply_spectral<Scalar>(x + Scalar(h) * delta, f) -
                    svt::apply_spectral<Scalar>(x - Scalar(h) * delta, f)) /
                   Scalar(2.0 * h);
  CHECK((analytic - fd).norm() <= 1e-5);
}

}  // namespace

TEST_CASE("product-rule derivative of soft thresholding matches central differences") {
  for (std::uint64_t seed : {201u, 202u, 203u}) {
    check_product_rule_fd<double>(4, 3, seed);
    check_product_rule_fd<Complex>(4, 3, seed);
    // Wide shapes exercise the adjoint-swap route.
    check_product_rule_fd<double>(3, 6, seed + 50);
    check_product_rule_fd<Complex>(3, 6, seed + 50);
  }
}

TEST_CASE("product-rule reconstruction is invariant under the completion choice") {
  const svt::SpectralFunction f = svt::SpectralFunction::soft_threshold(0.5);
  for (std::uint64_t seed : {61u, 62u}) {
    RealMat x = seeded_simple_full_rank<double>(6, 3, seed);
    RealMat delta = seeded_gaussian<double>(6, 3, seed + 5);
    svt::SvdDifferential<double> base = svt::svd_differential(x, delta);

    // Any orthonormal basis of range(U)^perp is a valid completion; rotate the
    // default one by a seeded orthogonal matrix.
    svt::SvdFactors<double> fac = svt::compute_svd(x);
    RealMat q = svt::detail::orthonormal_completion(fac.u);
    svt::Rng rng(seed + 11);
    RealMat rot = svt::haar_orthonormal<double>(q.cols(), q.cols(), rng);
    RealMat q2 = q * rot;
    svt::SvdDifferential<double> alt = svt::svd_differential_with_completion(x, delta, q2);

    RealMat df_base = svt::spectral_directional_derivative(base, f);
    RealMat df_alt = svt::spectral_directional_derivative(alt, f);
    CHECK((df_base - df_alt).norm() <= 1e-10);
    CHECK((base.du - alt.du).norm() <= 1e-10);  // dU itself is completion-free
  }
}
