#pragma once

#include "svt/blockwise.hpp"
#include "svt/parallel.hpp"
#include "svt/random.hpp"
#include "svt/spectral.hpp"
#include "svt/sure.hpp"
#include "svt/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace svt {

struct NoiseModel {
  Field field = Field::Real;
  double tau = 1.0;  // per-real-coordinate standard deviation
  std::uint64_t seed = 0;
};

/// y = x0 + w with iid N(0, tau^2) real coordinates (complex entries get
/// independent real and imaginary parts). Deterministic in (x0, model).
template <class Scalar>
Mat<Scalar> add_noise(const Mat<Scalar>& x0, const NoiseModel& model) {
  if (model.field != scalar_traits<Scalar>::field)
    fail(ErrorCode::BadArgs, "add_noise: noise field does not match the matrix field");
  if (model.tau < 0.0 || !std::isfinite(model.tau))
    fail(ErrorCode::BadArgs, "add_noise: tau must be finite and nonnegative");
  require_finite(x0, "add_noise");
  if (model.tau == 0.0) return x0;
  Rng rng(model.seed);
  Mat<Scalar> w = gaussian_matrix<Scalar>(x0.rows(), x0.cols(), rng);
  return x0 + Scalar(model.tau) * w;
}

/// tau giving the requested SNR = ||x0||_F / (sqrt(mn) tau) under ||x0||_F = 1.
inline double tau_from_snr(double snr, Index m, Index n) {
  if (!(snr > 0.0)) fail(ErrorCode::BadArgs, "tau_from_snr: snr must be positive");
  return 1.0 / (snr * std::sqrt(static_cast<double>(m) * static_cast<double>(n)));
}

// Synthetic ground-truth ensembles, normalized to unit Frobenius norm:
//   1 - iid Gaussian (full rank)
//   2 - Gaussian factor product of rank round(min(m,n)/2)
//   3 - Gaussian factor product of rank round(min(m,n)/20)
//   4 - Haar factors with the sigmoid spectrum sqrt(m)/(1 + exp((i - m/2)/(m/10)))
template <class Scalar>
Mat<Scalar> gen_test_matrix(int kind, Index m, Index n, std::uint64_t seed) {
  if (kind < 1 || kind > 4) fail(ErrorCode::BadKind, "kind must be 1..4");
  if (m < 1 || n < 1 || m > n)
    fail(ErrorCode::BadShape, "gen_test_matrix: requires 1 <= m <= n");
  Rng rng(seed);
  Mat<Scalar> x;
  switch (kind) {
    case 1:
      x = gaussian_matrix<Scalar>(m, n, rng);
      break;
    case 2:
    case 3: {
      double divisor = kind == 2 ? 2.0 : 20.0;
      Index rank = static_cast<Index>(std::llround(static_cast<double>(std::min(m, n)) / divisor));
      rank = std::max<Index>(rank, 1);
      x = gaussian_low_rank<Scalar>(m, n, rank, rng);
      break;
    }
    case 4: {
      const Index r = std::min(m, n);
      RealVec sig(r);
      double md = static_cast<double>(m);
      for (Index i = 0; i < r; ++i) {
        double idx = static_cast<double>(i + 1);
        sig(i) = std::sqrt(md) / (1.0 + std::exp((idx - md / 2.0) / (md / 10.0)));
      }
      Mat<Scalar> u = haar_orthonormal<Scalar>(m, r, rng);
      Mat<Scalar> v = haar_orthonormal<Scalar>(n, r, rng);
      x = u * sig.asDiagonal() * v.adjoint();
      break;
    }
  }
  return x / Scalar(x.norm());
}

// Which estimator a sweep or Monte-Carlo run drives: global SVT on the matrix,
// or block-wise SVT on a Casorati matrix with the given image geometry.
struct Estimator {
  enum class Kind { GlobalSvt, BlockSvt };
  Kind kind = Kind::GlobalSvt;
  Index nx = 0;
  Index ny = 0;
  BlockConfig block;

  static Estimator global_svt() { return {}; }
  static Estimator block_svt(Index nx, Index ny, BlockConfig cfg) {
    Estimator e;
    e.kind = Kind::BlockSvt;
    e.nx = nx;
    e.ny = ny;
    e.block = cfg;
    return e;
  }
};

template <class Scalar>
Mat<Scalar> apply_estimator(const Mat<Scalar>& y, double lambda, const Estimator& est) {
  if (est.kind == Estimator::Kind::GlobalSvt) return svt(y, lambda);
  return bsvt(y, est.nx, est.ny, est.block, lambda);
}

template <class Scalar>
SureReport sure_of(const Mat<Scalar>& y, double lambda, double tau, const Estimator& est) {
  if (est.kind == Estimator::Kind::GlobalSvt) return sure_svt(y, lambda, tau);
  return sure_bsvt(y, est.nx, est.ny, est.block, lambda, tau);
}

namespace detail {

inline std::uint64_t trial_seed(std::uint64_t base, std::uint64_t trial) { return base ^ trial; }

// Squared errors ||svt_lambda(y) - x0||_F^2 for every lambda from one SVD of
// y: the cross term <svt(y), x0> reduces to sum_i (sigma_i - lambda)_+ c_i
// with c_i = Re(u_i^H x0 v_i).
template <class Scalar>
void svt_errors_from_factors(const SvdFactors<Scalar>& fac, const Mat<Scalar>& x0,
                             double x0_sqnorm, const std::vector<double>& lambdas,
                             std::vector<double>& out) {
  const Index r = fac.rank_dim();
  RealVec cross(r);
  Mat<Scalar> z = fac.u.adjoint() * x0;  // r x n
  for (Index i = 0; i < r; ++i) {
    Scalar dot = z.row(i) * fac.v.col(i);
    if constexpr (scalar_traits<Scalar>::is_complex)
      cross(i) = dot.real();
    else
      cross(i) = dot;
  }
  out.resize(lambdas.size());
  for (std::size_t l = 0; l < lambdas.size(); ++l) {
    double err = x0_sqnorm;
    for (Index i = 0; i < r; ++i) {
      double kept = soft_threshold_scalar(fac.sigma(i), lambdas[l]);
      err += kept * kept - 2.0 * kept * cross(i);
    }
    out[l] = err;
  }
}

template <class Scalar>
void bsvt_errors(const Mat<Scalar>& y, const Mat<Scalar>& x0, const Estimator& est,
                 const std::vector<double>& lambdas, std::vector<double>& out) {
  std::vector<Mat<Scalar>> estimates = bsvt_multi(y, est.nx, est.ny, est.block, lambdas);
  out.resize(lambdas.size());
  for (std::size_t l = 0; l < lambdas.size(); ++l) out[l] = (estimates[l] - x0).squaredNorm();
}

}  // namespace detail

// Monte-Carlo reference risk: per-lambda mean of ||est_lambda(x0 + W_j) - x0||_F^2
// over seeded trials, with per-trial seeds derived as seed XOR trial index.
// Trials may run concurrently; the mean accumulates in trial order.
template <class Scalar>
std::vector<double> mc_risk(const Mat<Scalar>& x0, const std::vector<double>& lambdas,
                            const NoiseModel& noise, int trials,
                            const Estimator& est = Estimator::global_svt()) {
  if (trials < 1) fail(ErrorCode::BadArgs, "mc_risk: trials must be >= 1");
  require_finite(x0, "mc_risk");
  const double x0_sqnorm = x0.squaredNorm();
  std::vector<std::vector<double>> per_trial(static_cast<std::size_t>(trials));
  parallel_for(static_cast<std::size_t>(trials), [&](std::size_t j) {
    NoiseModel local = noise;
    local.seed = detail::trial_seed(noise.seed, j);
    Mat<Scalar> y = add_noise(x0, local);
    if (est.kind != Estimator::Kind::GlobalSvt) {
      detail::bsvt_errors(y, x0, est, lambdas, per_trial[j]);
    } else if (noise.tau == 0.0) {
      // Noiseless trials reduce to the deterministic reconstruction error.
      per_trial[j].resize(lambdas.size());
      for (std::size_t l = 0; l < lambdas.size(); ++l)
        per_trial[j][l] = (svt(y, lambdas[l]) - x0).squaredNorm();
    } else {
      SvdFactors<Scalar> fac = compute_svd(y);
      detail::svt_errors_from_factors(fac, x0, x0_sqnorm, lambdas, per_trial[j]);
    }
  });
  std::vector<double> mean(lambdas.size(), 0.0);
  for (const auto& row : per_trial)
    for (std::size_t l = 0; l < lambdas.size(); ++l) mean[l] += row[l];
  for (double& v : mean) v /= static_cast<double>(trials);
  return mean;
}

// Paired per-trial samples of the true squared error and the SURE value on the
// same observation, for unbiasedness checks against the trial-difference SE.
struct PairedRisk {
  std::vector<double> mc_risk;    // per lambda, mean over trials
  std::vector<double> mean_sure;  // per lambda
  std::vector<double> se_diff;    // per lambda, SE of (err - sure) across trials
};

template <class Scalar>
PairedRisk mc_risk_paired(const Mat<Scalar>& x0, const std::vector<double>& lambdas,
                          const NoiseModel& noise, int trials, double tau,
                          const Estimator& est = Estimator::global_svt()) {
  if (trials < 2) fail(ErrorCode::BadArgs, "mc_risk_paired: trials must be >= 2");
  require_finite(x0, "mc_risk_paired");
  const double x0_sqnorm = x0.squaredNorm();
  const std::size_t nl = lambdas.size();
  std::vector<std::vector<double>> err(static_cast<std::size_t>(trials));
  std::vector<std::vector<double>> sure_vals(static_cast<std::size_t>(trials),
                                             std::vector<double>(nl, 0.0));
  parallel_for(static_cast<std::size_t>(trials), [&](std::size_t j) {
    NoiseModel local = noise;
    local.seed = detail::trial_seed(noise.seed, j);
    Mat<Scalar> y = add_noise(x0, local);
    if (est.kind == Estimator::Kind::GlobalSvt) {
      SvdFactors<Scalar> fac = compute_svd(y);
      detail::svt_errors_from_factors(fac, x0, x0_sqnorm, lambdas, err[j]);
      for (std::size_t l = 0; l < nl; ++l)
        sure_vals[j][l] = sure_svt_from_sigma(fac.sigma, y.rows(), y.cols(),
                                              scalar_traits<Scalar>::field, lambdas[l], tau)
                              .sure;
    } else {
      detail::bsvt_errors(y, x0, est, lambdas, err[j]);
      BsvtSureCurve curve = bsvt_sure_curve(y, est.nx, est.ny, est.block, lambdas);
      double tau2 = tau * tau;
      double coords = field_beta(scalar_traits<Scalar>::field) * static_cast<double>(y.rows()) *
                      static_cast<double>(y.cols());
      for (std::size_t l = 0; l < nl; ++l)
        sure_vals[j][l] = -(coords * tau2) + curve.residual[l] + 2.0 * (tau2 * curve.divergence[l]);
    }
  });

  PairedRisk out;
  out.mc_risk.assign(nl, 0.0);
  out.mean_sure.assign(nl, 0.0);
  out.se_diff.assign(nl, 0.0);
  for (int j = 0; j < trials; ++j)
    for (std::size_t l = 0; l < nl; ++l) {
      out.mc_risk[l] += err[static_cast<std::size_t>(j)][l];
      out.mean_sure[l] += sure_vals[static_cast<std::size_t>(j)][l];
    }
  for (std::size_t l = 0; l < nl; ++l) {
    out.mc_risk[l] /= trials;
    out.mean_sure[l] /= trials;
  }
  for (std::size_t l = 0; l < nl; ++l) {
    double mean_diff = out.mc_risk[l] - out.mean_sure[l];
    double ss = 0.0;
    for (int j = 0; j < trials; ++j) {
      double d = err[static_cast<std::size_t>(j)][l] - sure_vals[static_cast<std::size_t>(j)][l];
      ss += (d - mean_diff) * (d - mean_diff);
    }
    out.se_diff[l] = std::sqrt(ss / (static_cast<double>(trials) - 1.0)) /
                     std::sqrt(static_cast<double>(trials));
  }
  return out;
}

struct SweepMetadata {
  std::uint64_t seed = 0;
  Index rows = 0;
  Index cols = 0;
  double tau = 0.0;
  double snr = std::numeric_limits<double>::quiet_NaN();  // NaN when tau was given directly
  std::string estimator = "svt";
};

struct SweepResult {
  std::vector<double> lambdas;       // ascending
  std::vector<double> sure_values;
  std::vector<double> mc_risk;       // empty unless a Monte-Carlo reference was run
  double argmin_lambda = 0.0;
  SweepMetadata metadata;
};

/// SURE at every grid point from a single factorization pass; the argmin is
/// the first grid value attaining the minimum.
template <class Scalar>
SweepResult sweep(const Mat<Scalar>& y, const std::vector<double>& lambdas, double tau,
                  const Estimator& est = Estimator::global_svt()) {
  if (lambdas.empty()) fail(ErrorCode::BadArgs, "sweep: empty lambda grid");
  for (std::size_t l = 0; l + 1 < lambdas.size(); ++l)
    if (!(lambdas[l] < lambdas[l + 1]))
      fail(ErrorCode::BadArgs, "sweep: lambda grid must be strictly ascending");
  if (lambdas.front() < 0.0) fail(ErrorCode::BadArgs, "sweep: lambda must be nonnegative");
  detail::require_tau(tau);

  SweepResult out;
  out.lambdas = lambdas;
  out.sure_values.resize(lambdas.size());
  out.metadata.rows = y.rows();
  out.metadata.cols = y.cols();
  out.metadata.tau = tau;

  if (est.kind == Estimator::Kind::GlobalSvt) {
    SvdFactors<Scalar> fac = compute_svd(y);
    for (std::size_t l = 0; l < lambdas.size(); ++l)
      out.sure_values[l] = sure_svt_from_sigma(fac.sigma, y.rows(), y.cols(),
                                               scalar_traits<Scalar>::field, lambdas[l], tau)
                               .sure;
  } else {
    out.metadata.estimator = "bsvt";
    BsvtSureCurve curve = bsvt_sure_curve(y, est.nx, est.ny, est.block, lambdas);
    double tau2 = tau * tau;
    double coords = field_beta(scalar_traits<Scalar>::field) * static_cast<double>(y.rows()) *
                    static_cast<double>(y.cols());
    for (std::size_t l = 0; l < lambdas.size(); ++l)
      out.sure_values[l] = -(coords * tau2) + curve.residual[l] + 2.0 * (tau2 * curve.divergence[l]);
  }

  std::size_t best = 0;
  for (std::size_t l = 1; l < lambdas.size(); ++l)
    if (out.sure_values[l] < out.sure_values[best]) best = l;
  out.argmin_lambda = lambdas[best];
  return out;
}

// Golden-section minimization of a scalar objective assumed unimodal on
// [lo, hi]. The search runs in log-lambda space when lo > 0 (grids of interest
// are log-ranged) and falls back to the linear scale otherwise; the bracket
// shrinks by the golden ratio until its width on the original scale is at most
// tol, and the bracket midpoint is returned.
template <class Objective>
double golden_section_min(Objective&& objective, double lo, double hi, double tol) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
    fail(ErrorCode::BadBracket, "golden_section_min: need finite lo < hi");
  if (!(tol > 0.0)) fail(ErrorCode::BadBracket, "golden_section_min: tol must be positive");

  const bool log_scale = lo > 0.0;
  auto to_search = [log_scale](double x) { return log_scale ? std::log(x) : x; };
  auto from_search = [log_scale](double s) { return log_scale ? std::exp(s) : s; };

  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = to_search(lo);
  double b = to_search(hi);
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = objective(from_search(x1));
  double f2 = objective(from_search(x2));

  for (int iter = 0; iter < 400; ++iter) {
    if (from_search(b) - from_search(a) <= tol) break;
    if (b - a <= 1e-15 * (std::abs(a) + std::abs(b))) break;  // bracket exhausted in fp
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = objective(from_search(x1));
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = objective(from_search(x2));
    }
  }
  return from_search((a + b) / 2.0);
}

}  // namespace svt
