#pragma once

#include "svt/parallel.hpp"
#include "svt/spectral.hpp"
#include "svt/svd.hpp"
#include "svt/types.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace svt {

// How tied spectra and threshold ties are treated when evaluating closed-form
// divergences:
//   Grouped       - dispatch to the multiplicity formula; threshold ties are
//                   reclassified as "not exceeding" and flagged.
//   StrictSimple  - error out on repeated values, rank deficiency, or ties.
//   ZeroOnNonSimple - return 0 for non-simple input (the weak-divergence
//                   convention; strictly less informative than grouping).
enum class DivergenceMode { Grouped, StrictSimple, ZeroOnNonSimple };

struct DivergenceValue {
  double value = 0.0;
  bool used_repeated_formula = false;
  bool threshold_tie_nudged = false;
};

namespace detail {

inline double pairs_of(double d) { return d * (d - 1.0) / 2.0; }  // C(d, 2)

inline void require_differentiable(const SpectralFunction& f, const RealVec& sigma, double tol) {
  for (Index i = 0; i < sigma.size(); ++i)
    if (!f.differentiable_at(sigma(i), tol))
      fail(ErrorCode::NonDifferentiablePoint,
           "divergence: spectral function is not differentiable at sigma[" + std::to_string(i) +
               "] = " + std::to_string(sigma(i)));
}

inline double div_simple_sum(const RealVec& sigma, Index m, Index n, const SpectralFunction& f,
                             Field field) {
  const double absdiff = static_cast<double>(m > n ? m - n : n - m);
  const double inv_coeff = field == Field::Real ? absdiff : 2.0 * absdiff + 1.0;
  const double cross_coeff = field == Field::Real ? 2.0 : 4.0;
  const Index r = sigma.size();
  double acc = 0.0;
  for (Index i = 0; i < r; ++i) {
    double fi = f.eval(i, sigma(i));
    acc += f.deriv(i, sigma(i)) + inv_coeff * fi / sigma(i);
    for (Index j = 0; j < r; ++j) {
      if (j == i) continue;
      acc += cross_coeff * sigma(i) * fi / (sigma(i) * sigma(i) - sigma(j) * sigma(j));
    }
  }
  return acc;
}

inline double div_repeated_sum(const SpectrumProfile& p, Index m, Index n,
                               const SpectralFunction& f, Field field) {
  const double absdiff = static_cast<double>(m > n ? m - n : n - m);
  const bool real = field == Field::Real;
  const double cross_coeff = real ? 2.0 : 4.0;
  const int k = p.count();
  double acc = 0.0;
  for (int i = 0; i < k; ++i) {
    double s = p.distinct[i];
    double d = p.multiplicities[i];
    double c2 = pairs_of(d);
    if (s > 0.0) {
      double fs = f.eval(0, s);
      double dfs = f.deriv(0, s);
      if (real)
        acc += (d + c2) * dfs + (absdiff * d + c2) * fs / s;
      else
        acc += (d + 2.0 * c2) * dfs + ((2.0 * absdiff + 1.0) * d + 2.0 * c2) * fs / s;
    } else {
      double df0 = f.deriv(0, 0.0);
      if (real)
        acc += ((absdiff + 1.0) * d + 2.0 * c2) * df0;
      else
        acc += (2.0 * (absdiff + 1.0) * d + 4.0 * c2) * df0;
    }
    for (int j = 0; j < k; ++j) {
      if (j == i || s == 0.0) continue;
      double sj = p.distinct[j];
      acc += cross_coeff * d * p.multiplicities[j] * s * f.eval(0, s) / (s * s - sj * sj);
    }
  }
  return acc;
}

/// Thresholding rule with the tie band [lambda-tol, lambda+tol] reclassified
/// as "not exceeding the threshold" (value and slope both zero there).
inline SpectralFunction nudge_threshold_ties(const SpectralFunction& f, double tol) {
  double lambda = f.threshold();
  return SpectralFunction::custom(
      [f, lambda, tol](double s) { return std::abs(s - lambda) <= tol ? 0.0 : f.eval(0, s); },
      [f, lambda, tol](double s) { return std::abs(s - lambda) <= tol ? 0.0 : f.deriv(0, s); },
      f.zero_at_zero());
}

inline bool has_threshold_tie(const RealVec& sigma, const SpectralFunction& f, double tol) {
  if (f.kind() != SpectralFunction::Kind::SoftThreshold &&
      f.kind() != SpectralFunction::Kind::HardThreshold)
    return false;
  for (Index i = 0; i < sigma.size(); ++i)
    if (std::abs(sigma(i) - f.threshold()) <= tol) return true;
  return false;
}

}  // namespace detail

// Divergence of X -> U f(S) V^H at a simple full-rank spectrum. The inverse
// singular value term uses f(sigma)/sigma in both fields; this is the form the
// soft-thresholding corollaries and the multiplicity extension reduce to, and
// the finite-difference oracle confirms it.
inline double div_spectral_simple(const RealVec& sigma, Index m, Index n,
                                  const SpectralFunction& f, Field field, double gap_tol = -1.0) {
  if (sigma.size() != std::min(m, n))
    fail(ErrorCode::BadShape, "div_spectral_simple: sigma length must be min(m, n)");
  double tol = resolve_gap_tol(gap_tol, sigma);
  SimplicityCheck check = is_simple_full_rank(sigma, tol);
  if (!check.simple_full_rank) {
    if (check.issue == SimplicityCheck::Issue::RepeatedValue)
      fail(ErrorCode::NotSimple, "div_spectral_simple: repeated singular value at index " +
                                     std::to_string(check.index));
    fail(ErrorCode::RankDeficient, "div_spectral_simple: numerically zero singular value");
  }
  detail::require_differentiable(f, sigma, tol);
  if (f.is_identity_map()) return field_beta(field) * static_cast<double>(m) * static_cast<double>(n);
  return detail::div_simple_sum(sigma, m, n, f, field);
}

// Continuity extension to repeated and zero singular values; requires a
// uniform rule with f(0) = 0.
inline double div_spectral_repeated(const SpectrumProfile& profile, Index m, Index n,
                                    const SpectralFunction& f, Field field) {
  if (!f.uniform())
    fail(ErrorCode::NonUniformFunction,
         "div_spectral_repeated: the multiplicity formula needs a uniform rule");
  if (!f.zero_at_zero())
    fail(ErrorCode::FZeroNotZero, "div_spectral_repeated: rule must map 0 to 0");
  if (profile.total() != std::min(m, n))
    fail(ErrorCode::BadShape, "div_spectral_repeated: multiplicities must sum to min(m, n)");
  if (f.is_identity_map()) return field_beta(field) * static_cast<double>(m) * static_cast<double>(n);
  for (int i = 0; i < profile.count(); ++i)
    if (!f.differentiable_at(profile.distinct[i], profile.gap_tol))
      fail(ErrorCode::NonDifferentiablePoint,
           "div_spectral_repeated: rule not differentiable at a distinct singular value");
  return detail::div_repeated_sum(profile, m, n, f, field);
}

namespace detail {

inline void require_no_threshold_tie(const RealVec& sigma, double lambda, double tol) {
  for (Index i = 0; i < sigma.size(); ++i)
    if (std::abs(sigma(i) - lambda) <= tol)
      fail(ErrorCode::ThresholdTie, "div_svt: sigma[" + std::to_string(i) +
                                        "] coincides with the threshold within gap_tol");
}

}  // namespace detail

/// Divergence of soft thresholding at level lambda, real field, simple spectrum.
inline double div_svt_real_simple(const RealVec& sigma, Index m, Index n, double lambda,
                                  double gap_tol = -1.0) {
  double tol = resolve_gap_tol(gap_tol, sigma);
  detail::require_no_threshold_tie(sigma, lambda, tol);
  return div_spectral_simple(sigma, m, n, SpectralFunction::soft_threshold(lambda), Field::Real, tol);
}

/// Complex-field counterpart; note the inverse singular value contribution is
/// present even for square matrices.
inline double div_svt_complex_simple(const RealVec& sigma, Index m, Index n, double lambda,
                                     double gap_tol = -1.0) {
  double tol = resolve_gap_tol(gap_tol, sigma);
  detail::require_no_threshold_tie(sigma, lambda, tol);
  return div_spectral_simple(sigma, m, n, SpectralFunction::soft_threshold(lambda), Field::Complex,
                             tol);
}

// Dispatching entry point: picks the simple or the multiplicity formula from
// the grouped spectrum, with the tie policy applied for thresholding rules.
inline DivergenceValue div_spectral_auto(const RealVec& sigma, Index m, Index n,
                                         const SpectralFunction& f, Field field,
                                         double gap_tol = -1.0,
                                         DivergenceMode mode = DivergenceMode::Grouped) {
  if (sigma.size() != std::min(m, n))
    fail(ErrorCode::BadShape, "div_spectral_auto: sigma length must be min(m, n)");
  double tol = resolve_gap_tol(gap_tol, sigma);
  SpectrumProfile profile = group_spectrum(sigma, tol);
  bool simple = profile.simple() && !profile.has_zero_group();
  bool tie = detail::has_threshold_tie(sigma, f, tol);

  DivergenceValue out;
  if (mode == DivergenceMode::StrictSimple) {
    if (tie) fail(ErrorCode::ThresholdTie, "divergence: singular value tied with the threshold");
    out.value = div_spectral_simple(sigma, m, n, f, field, tol);
    return out;
  }
  if (mode == DivergenceMode::ZeroOnNonSimple && (!simple || tie)) {
    out.value = 0.0;
    return out;
  }

  SpectralFunction effective = f;
  if (tie && !f.is_identity_map()) {
    // soft_threshold(0) can only tie against a zero singular value; that case
    // is the identity map and keeps its exact value on the repeated path.
    effective = detail::nudge_threshold_ties(f, tol);
    out.threshold_tie_nudged = true;
  }

  if (simple) {
    out.value = div_spectral_simple(sigma, m, n, effective, field, tol);
    return out;
  }
  out.used_repeated_formula = true;
  out.value = div_spectral_repeated(profile, m, n, effective, field);
  return out;
}

// Independent finite-difference divergence of an arbitrary matrix map:
// central differences of the matching output coordinate along every canonical
// direction, plus the imaginary directions for complex input. Perturbed
// evaluations may run concurrently; the sum is accumulated in direction order.
template <class Scalar, class MapFn>
double fd_divergence_map(const Mat<Scalar>& x, MapFn&& map, double h) {
  require_finite(x, "fd_divergence_map");
  if (h <= 0.0) {
    Eigen::JacobiSVD<Mat<Scalar>> dec(x);
    h = 1e-5 * std::max(1.0, dec.singularValues()(0));
  }
  const Index m = x.rows();
  const Index n = x.cols();
  const bool complex_field = scalar_traits<Scalar>::is_complex;
  const std::size_t directions = static_cast<std::size_t>(m * n) * (complex_field ? 2 : 1);
  std::vector<double> contrib(directions, 0.0);

  parallel_for(directions, [&](std::size_t idx) {
    const bool imaginary = idx >= static_cast<std::size_t>(m * n);
    const std::size_t flat = imaginary ? idx - static_cast<std::size_t>(m * n) : idx;
    const Index i = static_cast<Index>(flat) % m;
    const Index j = static_cast<Index>(flat) / m;
    Scalar step;
    if constexpr (scalar_traits<Scalar>::is_complex) {
      step = imaginary ? Scalar(0.0, h) : Scalar(h, 0.0);
    } else {
      step = h;
    }
    Mat<Scalar> xp = x;
    Mat<Scalar> xm = x;
    xp(i, j) += step;
    xm(i, j) -= step;
    Scalar diff = (map(xp)(i, j) - map(xm)(i, j)) / Scalar(2.0 * h);
    if constexpr (scalar_traits<Scalar>::is_complex) {
      contrib[idx] = imaginary ? diff.imag() : diff.real();
    } else {
      contrib[idx] = diff;
    }
  });

  double acc = 0.0;
  for (double c : contrib) acc += c;
  return acc;
}

template <class Scalar>
double fd_divergence_oracle(const Mat<Scalar>& x, const SpectralFunction& f, double h) {
  return fd_divergence_map(
      x, [&f](const Mat<Scalar>& z) { return apply_spectral(z, f); }, h);
}

/// As above, with an h-halving stability check against roundoff domination.
template <class Scalar>
double fd_divergence_oracle_checked(const Mat<Scalar>& x, const SpectralFunction& f, double h) {
  double coarse = fd_divergence_oracle(x, f, h);
  double fine = fd_divergence_oracle(x, f, h / 2.0);
  if (std::abs(coarse - fine) > 1e-3 * std::max(1.0, std::abs(coarse)))
    fail(ErrorCode::StepTooSmall,
         "fd_divergence_oracle: estimate unstable under step halving; step likely below roundoff");
  return fine;
}

}  // namespace svt
