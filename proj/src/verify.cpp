#include "svt/verify.hpp"

#include "svt/blockwise.hpp"
#include "svt/divergence.hpp"
#include "svt/random.hpp"
#include "svt/spectral.hpp"
#include "svt/svd_differential.hpp"
#include "svt/sure.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace svt {

RealVec non_tangential_sigma(const SpectrumProfile& profile, double t) {
  std::vector<double> values;
  int k = 0;
  for (int i = 0; i < profile.count(); ++i)
    for (int d = 0; d < profile.multiplicities[static_cast<std::size_t>(i)]; ++d)
      values.push_back(profile.distinct[static_cast<std::size_t>(i)] + t * (0.5 + 0.2 * k++));
  std::sort(values.begin(), values.end(), std::greater<double>());
  RealVec out(static_cast<Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) out(static_cast<Index>(i)) = values[i];
  return out;
}

namespace {

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(3);
  ss << v;
  return ss.str();
}

template <class Scalar>
double svd_contract_error(Index m, Index n, Rng& rng) {
  Mat<Scalar> x = gaussian_matrix<Scalar>(m, n, rng);
  SvdFactors<Scalar> f = compute_svd(x);
  const Index r = f.rank_dim();
  double worst = (f.reconstruct() - x).norm() / std::max(1.0, f.sigma_max());
  Mat<Scalar> gu = f.u.adjoint() * f.u - Mat<Scalar>::Identity(r, r);
  Mat<Scalar> gv = f.v.adjoint() * f.v - Mat<Scalar>::Identity(r, r);
  double scale = static_cast<double>(std::max(m, n));
  worst = std::max(worst, gu.cwiseAbs().maxCoeff() / scale);
  worst = std::max(worst, gv.cwiseAbs().maxCoeff() / scale);
  return worst;
}

SuiteResult suite_svd_contracts(const VerifyOptions& opt) {
  SuiteResult res{"svd-contracts", true, ""};
  Rng rng(opt.seed);
  double worst = 0.0;
  for (auto [m, n] : opt.sizes) {
    worst = std::max(worst, svd_contract_error<double>(m, n, rng));
    worst = std::max(worst, svd_contract_error<Complex>(m, n, rng));
  }
  res.pass = worst <= 1e-10;
  res.detail = "max scaled residual " + fmt(worst) + " (tol 1e-10)";
  return res;
}

SuiteResult suite_divergence_identities(const VerifyOptions& opt) {
  SuiteResult res{"divergence-identities", true, ""};
  Rng rng(opt.seed + 1);
  double worst = 0.0;
  for (auto [m, n] : opt.sizes) {
    for (int rep = 0; rep < 5; ++rep) {
      {
        Mat<double> x = gaussian_matrix<double>(m, n, rng);
        SvdFactors<double> f = compute_svd(x);
        double expected = static_cast<double>(m * n);
        if (opt.inject_fault) expected = -expected;  // simulated corrupted build
        double got = div_svt_real_simple(f.sigma, m, n, 0.0);
        worst = std::max(worst, std::abs(got - expected) / std::abs(expected));
      }
      {
        Mat<Complex> x = gaussian_matrix<Complex>(m, n, rng);
        SvdFactors<Complex> f = compute_svd(x);
        double expected = 2.0 * static_cast<double>(m * n);
        double got = div_svt_complex_simple(f.sigma, m, n, 0.0);
        worst = std::max(worst, std::abs(got - expected) / std::abs(expected));
      }
    }
  }
  res.pass = worst <= 1e-9;
  res.detail = "max relative deviation from beta*m*n at lambda=0: " + fmt(worst) + " (tol 1e-9)";
  return res;
}

template <class Scalar>
double fd_agreement_error(Index m, Index n, Rng& rng) {
  constexpr Field field = scalar_traits<Scalar>::field;
  Mat<Scalar> x = gaussian_matrix<Scalar>(m, n, rng);
  SvdFactors<Scalar> f = compute_svd(x);
  double smax = f.sigma_max();
  double worst = 0.0;
  const SpectralFunction fns[] = {SpectralFunction::soft_threshold(0.4 * smax),
                                  SpectralFunction::scale(0.7)};
  for (const auto& fn : fns) {
    double closed = div_spectral_auto(f.sigma, m, n, fn, field).value;
    double fd = fd_divergence_oracle(x, fn, 1e-5);
    worst = std::max(worst, std::abs(closed - fd) / std::max(1.0, std::abs(closed)));
  }
  return worst;
}

SuiteResult suite_fd_oracle(const VerifyOptions& opt) {
  SuiteResult res{"fd-oracle-agreement", true, ""};
  Rng rng(opt.seed + 2);
  double worst = 0.0;
  for (auto [m, n] : opt.sizes) {
    worst = std::max(worst, fd_agreement_error<double>(m, n, rng));
    worst = std::max(worst, fd_agreement_error<Complex>(m, n, rng));
  }
  res.pass = worst <= 1e-4;
  res.detail = "max |closed-form - central difference| (scaled): " + fmt(worst) + " (tol 1e-4)";
  return res;
}

SuiteResult suite_continuity(const VerifyOptions&) {
  SuiteResult res{"continuity-extension", true, ""};
  struct Case {
    SpectrumProfile profile;
    Index m, n;
  };
  std::vector<Case> cases;
  cases.push_back({SpectrumProfile{{2.0}, {2}, 0.0}, 2, 2});
  cases.push_back({SpectrumProfile{{2.0, 1.0}, {2, 1}, 0.0}, 3, 3});
  cases.push_back({SpectrumProfile{{1.0, 0.0}, {2, 1}, 0.0}, 3, 4});
  const SpectralFunction f = SpectralFunction::soft_threshold(0.5);
  const double t = 1e-6;
  double worst = 0.0;
  for (const auto& c : cases) {
    RealVec approach = non_tangential_sigma(c.profile, t);
    for (Field field : {Field::Real, Field::Complex}) {
      double grouped = div_spectral_repeated(c.profile, c.m, c.n, f, field);
      double limit = div_spectral_simple(approach, c.m, c.n, f, field, 1e-12);
      worst = std::max(worst, std::abs(grouped - limit));
    }
  }
  // Worked value: real 2x2, one singular value 2 with multiplicity 2, lambda 1.
  double worked = div_spectral_repeated(SpectrumProfile{{2.0}, {2}, 0.0}, 2, 2,
                                        SpectralFunction::soft_threshold(1.0), Field::Real);
  bool worked_ok = std::abs(worked - 3.5) <= 1e-12;
  res.pass = worst <= 1e-5 && worked_ok;
  res.detail = "max |grouped - limit| " + fmt(worst) + " (tol 1e-5), worked value " + fmt(worked);
  return res;
}

SuiteResult suite_blockwise(const VerifyOptions& opt) {
  SuiteResult res{"blockwise-tiling", true, ""};
  Rng rng(opt.seed + 3);
  const Index nx = 4, ny = 4, t = 3, k = 2;
  Mat<double> x = gaussian_matrix<double>(nx * ny, t, rng);

  // Partition of unity through the all-ones matrix.
  Mat<double> ones = Mat<double>::Ones(nx * ny, t);
  Mat<double> acc = Mat<double>::Zero(nx * ny, t);
  for (Index b = 0; b < nx * ny; ++b) {
    std::vector<Index> rows = block_rows(nx, ny, b, k);
    for (Index r : rows) acc.row(r) += ones.row(r);
  }
  bool partition_ok = (acc.array() == static_cast<double>(k * k)).all();

  BlockConfig degenerate = BlockConfig::single_block(nx);
  Mat<double> via_blocks = bsvt(x, nx, ny, degenerate, 0.6);
  Mat<double> direct = svt(x, 0.6);
  double reduction = (via_blocks - direct).norm() / std::max(1e-300, direct.norm());

  double div0 = div_bsvt(x, nx, ny, BlockConfig::every_pixel(k), 0.0);
  bool div0_ok = div0 == static_cast<double>(nx * ny * t);

  res.pass = partition_ok && reduction <= 1e-12 && div0_ok;
  res.detail = "partition exact: " + std::string(partition_ok ? "yes" : "no") +
               ", single-block reduction " + fmt(reduction) + ", div at 0 = " + fmt(div0);
  return res;
}

template <class Scalar>
double differential_fd_error(Index m, Index n, Rng& rng) {
  const SpectralFunction f = SpectralFunction::soft_threshold(0.5);
  Mat<Scalar> x = gaussian_matrix<Scalar>(m, n, rng);
  Mat<Scalar> delta = gaussian_matrix<Scalar>(m, n, rng);
  SvdDifferential<Scalar> d = svd_differential(x, delta);
  Mat<Scalar> analytic = spectral_directional_derivative(d, f);
  const double h = 1e-6;
  Mat<Scalar> fd =
      (apply_spectral<Scalar>(x + Scalar(h) * delta, f) - apply_spectral<Scalar>(x - Scalar(h) * delta, f)) /
      Scalar(2.0 * h);
  return (analytic - fd).norm();
}

SuiteResult suite_differential(const VerifyOptions& opt) {
  SuiteResult res{"svd-differential", true, ""};
  Rng rng(opt.seed + 4);
  double worst = 0.0;
  for (int rep = 0; rep < 5; ++rep) {
    worst = std::max(worst, differential_fd_error<double>(5, 4, rng));
    worst = std::max(worst, differential_fd_error<Complex>(5, 4, rng));
  }
  res.pass = worst <= 1e-5;
  res.detail = "max product-rule vs central-difference error " + fmt(worst) + " (tol 1e-5)";
  return res;
}

}  // namespace

std::vector<SuiteResult> run_verification(const VerifyOptions& options) {
  std::vector<SuiteResult> out;
  out.push_back(suite_svd_contracts(options));
  out.push_back(suite_divergence_identities(options));
  out.push_back(suite_fd_oracle(options));
  out.push_back(suite_continuity(options));
  out.push_back(suite_blockwise(options));
  out.push_back(suite_differential(options));
  return out;
}

}  // namespace svt
