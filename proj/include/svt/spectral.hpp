#pragma once

#include "svt/svd.hpp"
#include "svt/svd_differential.hpp"
#include "svt/types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>

namespace svt {

inline double soft_threshold_scalar(double sigma, double lambda) {
  return std::max(sigma - lambda, 0.0);
}

// A rule applied entrywise to singular values, together with its derivative.
// Built-ins are uniform (the same rule at every index); custom rules may vary
// by index, which restricts them to simple spectra downstream.
class SpectralFunction {
public:
  enum class Kind { SoftThreshold, HardThreshold, Identity, Scale, Custom };

  static SpectralFunction soft_threshold(double lambda) {
    check_threshold(lambda);
    SpectralFunction f(Kind::SoftThreshold);
    f.lambda_ = lambda;
    return f;
  }

  static SpectralFunction hard_threshold(double lambda) {
    check_threshold(lambda);
    SpectralFunction f(Kind::HardThreshold);
    f.lambda_ = lambda;
    return f;
  }

  static SpectralFunction identity() { return SpectralFunction(Kind::Identity); }

  static SpectralFunction scale(double a) {
    SpectralFunction f(Kind::Scale);
    f.scale_ = a;
    return f;
  }

  static SpectralFunction custom(std::function<double(double)> eval,
                                 std::function<double(double)> deriv, bool maps_zero_to_zero) {
    SpectralFunction f(Kind::Custom);
    f.eval_ = [e = std::move(eval)](Index, double s) { return e(s); };
    f.deriv_ = [d = std::move(deriv)](Index, double s) { return d(s); };
    f.zero_at_zero_ = maps_zero_to_zero;
    return f;
  }

  /// Index-dependent rule; marked non-uniform and rejected on tied spectra.
  static SpectralFunction custom_indexed(std::function<double(Index, double)> eval,
                                         std::function<double(Index, double)> deriv) {
    SpectralFunction f(Kind::Custom);
    f.eval_ = std::move(eval);
    f.deriv_ = std::move(deriv);
    f.uniform_ = false;
    f.zero_at_zero_ = false;
    return f;
  }

  Kind kind() const { return kind_; }
  bool uniform() const { return uniform_; }
  double threshold() const { return lambda_; }

  bool zero_at_zero() const {
    switch (kind_) {
      case Kind::SoftThreshold:
      case Kind::HardThreshold:
      case Kind::Identity:
      case Kind::Scale:
        return true;
      case Kind::Custom:
        return zero_at_zero_;
    }
    return false;
  }

  double eval(Index i, double s) const {
    switch (kind_) {
      case Kind::SoftThreshold: return soft_threshold_scalar(s, lambda_);
      case Kind::HardThreshold: return s > lambda_ ? s : 0.0;  // strict: s == lambda is dropped
      case Kind::Identity: return s;
      case Kind::Scale: return scale_ * s;
      case Kind::Custom: return eval_(i, s);
    }
    return 0.0;
  }

  double deriv(Index i, double s) const {
    switch (kind_) {
      case Kind::SoftThreshold:
      case Kind::HardThreshold:
        return s > lambda_ ? 1.0 : 0.0;
      case Kind::Identity: return 1.0;
      case Kind::Scale: return scale_;
      case Kind::Custom: return deriv_(i, s);
    }
    return 0.0;
  }

  // Thresholding rules have a kink at lambda; everything else is assumed
  // smooth near the spectrum (custom rules by caller contract).
  bool differentiable_at(double s, double tol) const {
    if (kind_ == Kind::SoftThreshold || kind_ == Kind::HardThreshold)
      return std::abs(s - lambda_) > tol;
    return true;
  }

  /// The estimator this rule defines is the identity map on matrices.
  bool is_identity_map() const {
    return kind_ == Kind::Identity || (kind_ == Kind::SoftThreshold && lambda_ <= 0.0);
  }

private:
  explicit SpectralFunction(Kind kind) : kind_(kind) {}

  static void check_threshold(double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
      fail(ErrorCode::BadArgs, "spectral function: threshold must be finite and nonnegative");
  }

  Kind kind_;
  double lambda_ = 0.0;
  double scale_ = 1.0;
  bool uniform_ = true;
  bool zero_at_zero_ = false;
  std::function<double(Index, double)> eval_;
  std::function<double(Index, double)> deriv_;
};

template <class Scalar>
Mat<Scalar> apply_spectral_from_factors(const SvdFactors<Scalar>& f, const SpectralFunction& fn) {
  RealVec fs(f.rank_dim());
  for (Index i = 0; i < fs.size(); ++i) fs(i) = fn.eval(i, f.sigma(i));
  return f.u * fs.asDiagonal() * f.v.adjoint();
}

/// U f(S) V^H. Non-uniform rules are rejected on spectra with ties, where the
/// assignment of the per-index rule would be ambiguous.
template <class Scalar>
Mat<Scalar> apply_spectral(const Mat<Scalar>& x, const SpectralFunction& fn,
                           double gap_tol = -1.0) {
  require_finite(x, "apply_spectral");
  SvdFactors<Scalar> f = compute_svd(x);
  if (!fn.uniform()) {
    SpectrumProfile profile = group_spectrum(f.sigma, resolve_gap_tol(gap_tol, f.sigma));
    if (!profile.simple())
      fail(ErrorCode::AmbiguousSpectrum,
           "apply_spectral: non-uniform rule on a spectrum with repeated singular values");
  }
  return apply_spectral_from_factors(f, fn);
}

// Soft-thresholding of the singular values; the prox of the nuclear norm.
// lambda = 0 is the identity and returns the input unchanged.
template <class Scalar>
Mat<Scalar> svt(const Mat<Scalar>& y, double lambda) {
  require_finite(y, "svt");
  if (lambda <= 0.0) return y;
  return apply_spectral(y, SpectralFunction::soft_threshold(lambda));
}

/// Hard thresholding: retains singular triplets with sigma strictly above lambda.
template <class Scalar>
Mat<Scalar> svht(const Mat<Scalar>& y, double lambda) {
  return apply_spectral(y, SpectralFunction::hard_threshold(lambda));
}

// Directional derivative of x -> U f(S) V^H through the product rule, using
// the factors carried by the differential. Independent of the completion
// choice made inside svd_differential.
template <class Scalar>
Mat<Scalar> spectral_directional_derivative(const SvdDifferential<Scalar>& d,
                                            const SpectralFunction& fn) {
  const SvdFactors<Scalar>& f = d.factors;
  const Index r = f.rank_dim();
  RealVec fs(r), dfs(r);
  for (Index i = 0; i < r; ++i) {
    fs(i) = fn.eval(i, f.sigma(i));
    dfs(i) = fn.deriv(i, f.sigma(i)) * d.d_sigma(i);
  }
  return d.du * fs.asDiagonal() * f.v.adjoint() + f.u * dfs.asDiagonal() * f.v.adjoint() +
         f.u * fs.asDiagonal() * d.dv.adjoint();
}

}  // namespace svt
