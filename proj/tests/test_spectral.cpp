#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "svt/random.hpp"
#include "svt/spectral.hpp"
#include "svt/svd.hpp"
#include "test_support.hpp"

#include <cmath>

using svt::Complex;
using svt::ComplexMat;
using svt::Index;
using svt::Mat;
using svt::RealMat;
using svt::RealVec;
using svt::SpectralFunction;
using test_support::seeded_gaussian;

TEST_CASE("soft threshold scalar") {
  CHECK(svt::soft_threshold_scalar(3.0, 2.0) == 1.0);
  CHECK(svt::soft_threshold_scalar(1.0, 2.0) == 0.0);
  CHECK(svt::soft_threshold_scalar(2.0, 2.0) == 0.0);  // boundary belongs to the zero side
}

TEST_CASE("spectral function built-ins") {
  SpectralFunction soft = SpectralFunction::soft_threshold(1.5);
  CHECK(soft.eval(0, 2.0) == 0.5);
  CHECK(soft.eval(0, 1.5) == 0.0);
  CHECK(soft.deriv(0, 2.0) == 1.0);
  CHECK(soft.deriv(0, 1.0) == 0.0);
  CHECK(soft.zero_at_zero());
  CHECK(soft.uniform());
  CHECK_FALSE(soft.differentiable_at(1.5, 1e-8));

  SpectralFunction hard = SpectralFunction::hard_threshold(1.5);
  CHECK(hard.eval(0, 2.0) == 2.0);
  CHECK(hard.eval(0, 1.5) == 0.0);  // strict inequality at the cut
  CHECK(hard.eval(0, 1.0) == 0.0);
  CHECK(hard.deriv(0, 2.0) == 1.0);

  CHECK(SpectralFunction::identity().eval(0, 0.7) == 0.7);
  CHECK(SpectralFunction::scale(0.5).eval(0, 3.0) == 1.5);
  CHECK(SpectralFunction::scale(0.5).deriv(0, 3.0) == 0.5);

  CHECK_THROWS_AS(SpectralFunction::soft_threshold(-1.0), svt::Error);
}

TEST_CASE("apply_spectral basics") {
  RealMat x = RealMat::Zero(2, 2);
  x(0, 0) = 3.0;
  x(1, 1) = 1.0;
  RealMat y = svt::apply_spectral(x, SpectralFunction::soft_threshold(2.0));
  CHECK(y(0, 0) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(std::abs(y(1, 1)) <= 1e-13);

  ComplexMat z = seeded_gaussian<Complex>(5, 4, 7);
  ComplexMat id = svt::apply_spectral(z, SpectralFunction::identity());
  svt::SvdFactors<Complex> f = svt::compute_svd(z);
  CHECK((id - z).norm() <= 1e-10 * f.sigma_max());

  ComplexMat zero = svt::apply_spectral(z, SpectralFunction::soft_threshold(2.0 * f.sigma_max()));
  CHECK(zero.norm() <= 1e-12);
}

TEST_CASE("apply_spectral rejects non-uniform rules on tied spectra") {
  auto fn = SpectralFunction::custom_indexed(
      [](Index i, double s) { return s / static_cast<double>(i + 1); },
      [](Index i, double) { return 1.0 / static_cast<double>(i + 1); });
  CHECK_FALSE(fn.uniform());

  RealMat tied = RealMat::Identity(3, 3);
  CHECK_THROWS_AS(svt::apply_spectral(tied, fn), svt::Error);
  try {
    svt::apply_spectral(tied, fn);
  } catch (const svt::Error& e) {
    CHECK(e.code() == svt::ErrorCode::AmbiguousSpectrum);
  }

  RealMat simple = RealMat::Zero(3, 3);
  simple(0, 0) = 3.0;
  simple(1, 1) = 2.0;
  simple(2, 2) = 1.0;
  CHECK_NOTHROW(svt::apply_spectral(simple, fn));
}

TEST_CASE("svt worked examples") {
  RealMat x = RealMat::Zero(2, 2);
  x(0, 0) = 3.0;
  x(1, 1) = 1.0;
  RealMat y = svt::svt(x, 2.0);
  CHECK(y(0, 0) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(std::abs(y(0, 1)) + std::abs(y(1, 0)) + std::abs(y(1, 1)) <= 1e-13);

  RealMat any = seeded_gaussian<double>(4, 3, 5);
  CHECK(svt::svt(any, 0.0) == any);  // identity, bit for bit
}

TEST_CASE("svht worked examples") {
  RealMat x = RealMat::Zero(2, 2);
  x(0, 0) = 3.0;
  x(1, 1) = 1.0;
  RealMat kept = svt::svht(x, 2.0);
  CHECK(kept(0, 0) == doctest::Approx(3.0).epsilon(1e-13));
  CHECK(std::abs(kept(1, 1)) <= 1e-13);

  RealMat all = svt::svht(x, 5.0);
  CHECK(all.norm() == 0.0);

  RealMat full = seeded_gaussian<double>(4, 3, 6);
  svt::SvdFactors<double> f = svt::compute_svd(full);
  CHECK((svt::svht(full, 0.0) - full).norm() <= 1e-10 * f.sigma_max());
}

TEST_CASE("svt is non-expansive on seeded pairs") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    RealMat a = seeded_gaussian<double>(5, 4, 2000 + seed);
    RealMat b = seeded_gaussian<double>(5, 4, 3000 + seed);
    double lambda = 0.3 + 0.02 * static_cast<double>(seed % 7);
    double lhs = (svt::svt(a, lambda) - svt::svt(b, lambda)).norm();
    double rhs = (a - b).norm();
    CHECK(lhs <= rhs * (1.0 + 1e-12));
  }
}

TEST_CASE("svt attains the prox objective against random perturbations") {
  auto objective = [](const RealMat& y, const RealMat& candidate, double lambda) {
    Eigen::JacobiSVD<RealMat> dec(candidate);
    return 0.5 * (y - candidate).squaredNorm() + lambda * dec.singularValues().sum();
  };
  RealMat y = seeded_gaussian<double>(5, 4, 77);
  double lambda = 0.8;
  RealMat prox = svt::svt(y, lambda);
  double best = objective(y, prox, lambda);
  svt::Rng rng(78);
  for (int rep = 0; rep < 200; ++rep) {
    double step = rep % 2 == 0 ? 1e-3 : 0.3;
    RealMat cand = prox + step * svt::gaussian_matrix<double>(5, 4, rng);
    CHECK(best <= objective(y, cand, lambda) * (1.0 + 1e-9));
  }
}

TEST_CASE("spectral functions are unitarily invariant") {
  for (std::uint64_t seed : {5u, 6u}) {
    ComplexMat x = seeded_gaussian<Complex>(5, 4, seed);
    svt::Rng rng(seed + 100);
    ComplexMat q = svt::haar_orthonormal<Complex>(5, 5, rng);
    ComplexMat p = svt::haar_orthonormal<Complex>(4, 4, rng);
    SpectralFunction f = SpectralFunction::soft_threshold(0.6);
    ComplexMat lhs = svt::apply_spectral<Complex>(q * x * p.adjoint(), f);
    ComplexMat rhs = q * svt::apply_spectral(x, f) * p.adjoint();
    svt::SvdFactors<Complex> fac = svt::compute_svd(x);
    CHECK((lhs - rhs).norm() <= 1e-9 * fac.sigma_max());
  }
}

TEST_CASE("svt rank is monotone in lambda") {
  RealMat y = seeded_gaussian<double>(6, 5, 31);
  auto rank_of = [](const RealMat& m) {
    Eigen::JacobiSVD<RealMat> dec(m);
    RealVec s = dec.singularValues();
    double tol = svt::default_gap_tol(s);
    Index r = 0;
    for (Index i = 0; i < s.size(); ++i)
      if (s(i) > tol) ++r;
    return r;
  };
  Index prev = rank_of(svt::svt(y, 0.0));
  for (double lambda : {0.2, 0.5, 1.0, 1.8, 3.0, 6.0}) {
    Index next = rank_of(svt::svt(y, lambda));
    CHECK(next <= prev);
    prev = next;
  }
}
