#pragma once

#include "svt/divergence.hpp"
#include "svt/spectral.hpp"
#include "svt/svd.hpp"
#include "svt/types.hpp"

#include <algorithm>
#include <cmath>

namespace svt {

// Unbiased risk estimate of a spectral estimator under the iid Gaussian model,
// broken into its three stored terms:
//   sure = constant_term + residual_term + 2 tau^2 divergence
// with constant_term = -beta m n tau^2 (beta = 1 real, 2 complex).
struct SureReport {
  double lambda = 0.0;
  double divergence = 0.0;
  double residual_term = 0.0;
  double constant_term = 0.0;
  double sure = 0.0;
  double tau = 0.0;
  bool threshold_tie_flagged = false;   // a sigma fell within gap_tol of lambda
  bool used_repeated_formula = false;   // multiplicity dispatch was taken
};

namespace detail {

inline void require_tau(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau))
    fail(ErrorCode::BadArgs, "sure: tau must be positive and finite");
}

inline SureReport assemble_sure(double lambda, double tau, Index m, Index n, Field field,
                                double residual, const DivergenceValue& divergence) {
  SureReport rep;
  rep.lambda = lambda;
  rep.tau = tau;
  double tau2 = tau * tau;
  double coords = field_beta(field) * static_cast<double>(m) * static_cast<double>(n);
  rep.constant_term = -(coords * tau2);
  rep.residual_term = residual;
  rep.divergence = divergence.value;
  rep.threshold_tie_flagged = divergence.threshold_tie_nudged;
  rep.used_repeated_formula = divergence.used_repeated_formula;
  rep.sure = rep.constant_term + rep.residual_term + 2.0 * (tau2 * rep.divergence);
  return rep;
}

}  // namespace detail

/// SURE for soft thresholding computed from singular values alone; the
/// residual is sum_i min(lambda^2, sigma_i^2).
inline SureReport sure_svt_from_sigma(const RealVec& sigma, Index m, Index n, Field field,
                                      double lambda, double tau, double gap_tol = -1.0) {
  detail::require_tau(tau);
  if (lambda < 0.0) fail(ErrorCode::BadArgs, "sure_svt: lambda must be nonnegative");
  double residual = 0.0;
  for (Index i = 0; i < sigma.size(); ++i) residual += std::min(lambda * lambda, sigma(i) * sigma(i));
  DivergenceValue div = div_spectral_auto(sigma, m, n, SpectralFunction::soft_threshold(lambda),
                                          field, gap_tol, DivergenceMode::Grouped);
  return detail::assemble_sure(lambda, tau, m, n, field, residual, div);
}

template <class Scalar>
SureReport sure_svt(const Mat<Scalar>& y, double lambda, double tau, double gap_tol = -1.0) {
  SvdFactors<Scalar> f = compute_svd(y);
  return sure_svt_from_sigma(f.sigma, y.rows(), y.cols(), scalar_traits<Scalar>::field, lambda, tau,
                             gap_tol);
}

/// SURE for a general spectral estimator; the residual ||f(Y) - Y||_F^2 is
/// evaluated on the singular values, where it equals sum_i (f(sigma_i) - sigma_i)^2.
inline SureReport sure_spectral_from_sigma(const RealVec& sigma, Index m, Index n, Field field,
                                           const SpectralFunction& fn, double tau,
                                           double gap_tol = -1.0) {
  detail::require_tau(tau);
  double residual = 0.0;
  if (fn.kind() == SpectralFunction::Kind::SoftThreshold) {
    // Same canonical form as sure_svt so the two agree bit for bit.
    double lambda = fn.threshold();
    for (Index i = 0; i < sigma.size(); ++i)
      residual += std::min(lambda * lambda, sigma(i) * sigma(i));
  } else {
    for (Index i = 0; i < sigma.size(); ++i) {
      double d = fn.eval(i, sigma(i)) - sigma(i);
      residual += d * d;
    }
  }
  DivergenceValue div = div_spectral_auto(sigma, m, n, fn, field, gap_tol, DivergenceMode::Grouped);
  SureReport rep = detail::assemble_sure(0.0, tau, m, n, field, residual, div);
  bool thresholding = fn.kind() == SpectralFunction::Kind::SoftThreshold ||
                      fn.kind() == SpectralFunction::Kind::HardThreshold;
  rep.lambda = thresholding ? fn.threshold() : 0.0;
  return rep;
}

template <class Scalar>
SureReport sure_spectral(const Mat<Scalar>& y, const SpectralFunction& fn, double tau,
                         double gap_tol = -1.0) {
  SvdFactors<Scalar> f = compute_svd(y);
  return sure_spectral_from_sigma(f.sigma, y.rows(), y.cols(), scalar_traits<Scalar>::field, fn,
                                  tau, gap_tol);
}

/// Plug-in estimate of the degrees of freedom of soft thresholding: the
/// divergence value that enters the SURE formula.
template <class Scalar>
double degrees_of_freedom(const Mat<Scalar>& y, double lambda, double gap_tol = -1.0) {
  SvdFactors<Scalar> f = compute_svd(y);
  DivergenceValue div =
      div_spectral_auto(f.sigma, y.rows(), y.cols(), SpectralFunction::soft_threshold(lambda),
                        scalar_traits<Scalar>::field, gap_tol, DivergenceMode::Grouped);
  return div.value;
}

}  // namespace svt
