#pragma once

#include "svt/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace svt {

// Reduced SVD with r = min(m, n) columns, singular values sorted descending.
// Columns are normalized so the largest-magnitude entry of each column of U is
// real and positive; the matching column of V absorbs the phase, which keeps
// U diag(sigma) V^H unchanged and makes serialized factors deterministic.
template <class Scalar>
struct SvdFactors {
  Mat<Scalar> u;  // m x r
  RealVec sigma;  // r, non-increasing, nonnegative
  Mat<Scalar> v;  // n x r

  static constexpr Field field = scalar_traits<Scalar>::field;

  Index rows() const { return u.rows(); }
  Index cols() const { return v.rows(); }
  Index rank_dim() const { return sigma.size(); }
  double sigma_max() const { return sigma.size() > 0 ? sigma(0) : 0.0; }

  Mat<Scalar> reconstruct() const { return u * sigma.asDiagonal() * v.adjoint(); }
};

/// Default absolute gap tolerance: 1e-8 scaled by max(1, sigma_max).
inline double default_gap_tol(double sigma_max) { return 1e-8 * std::max(1.0, sigma_max); }

inline double default_gap_tol(const RealVec& sigma) {
  return default_gap_tol(sigma.size() > 0 ? sigma(0) : 0.0);
}

inline double resolve_gap_tol(double gap_tol, const RealVec& sigma) {
  return gap_tol < 0.0 ? default_gap_tol(sigma) : gap_tol;
}

namespace detail {

template <class Scalar>
void normalize_column_phases(Mat<Scalar>& u, Mat<Scalar>& v) {
  for (Index j = 0; j < u.cols(); ++j) {
    Index imax = 0;
    u.col(j).cwiseAbs().maxCoeff(&imax);
    Scalar pivot = u(imax, j);
    double mag = std::abs(pivot);
    if (mag == 0.0) continue;
    if constexpr (scalar_traits<Scalar>::is_complex) {
      Scalar phase = std::conj(pivot / Scalar(mag));
      u.col(j) *= phase;
      v.col(j) *= phase;
    } else {
      if (pivot < 0) {
        u.col(j) = -u.col(j);
        v.col(j) = -v.col(j);
      }
    }
  }
}

template <class Scalar>
void verify_factors(const Mat<Scalar>& x, const SvdFactors<Scalar>& f) {
  const Index r = f.rank_dim();
  const double tol_orth = 1e-10 * static_cast<double>(std::max(x.rows(), x.cols()));
  Mat<Scalar> gram_u = f.u.adjoint() * f.u - Mat<Scalar>::Identity(r, r);
  Mat<Scalar> gram_v = f.v.adjoint() * f.v - Mat<Scalar>::Identity(r, r);
  if (gram_u.cwiseAbs().maxCoeff() > tol_orth || gram_v.cwiseAbs().maxCoeff() > tol_orth)
    fail(ErrorCode::ConvergenceFailure, "svd: factor columns are not orthonormal to tolerance");
  double resid = (f.reconstruct() - x).norm();
  if (resid > 1e-10 * std::max(1.0, f.sigma_max()))
    fail(ErrorCode::ConvergenceFailure, "svd: reconstruction residual exceeds tolerance");
  for (Index i = 0; i + 1 < r; ++i)
    if (f.sigma(i) < f.sigma(i + 1))
      fail(ErrorCode::ConvergenceFailure, "svd: singular values not sorted");
  if (r > 0 && f.sigma(r - 1) < 0.0)
    fail(ErrorCode::ConvergenceFailure, "svd: negative singular value");
}

}  // namespace detail

// Jacobi for small problems (tighter), divide-and-conquer above. Deterministic
// for a fixed input on a fixed build; invariants are checked on every call.
template <class Scalar>
SvdFactors<Scalar> compute_svd(const Mat<Scalar>& x) {
  require_finite(x, "svd");
  SvdFactors<Scalar> out;
  constexpr unsigned options = Eigen::ComputeThinU | Eigen::ComputeThinV;
  if (std::min(x.rows(), x.cols()) <= 16) {
    Eigen::JacobiSVD<Mat<Scalar>> dec(x, options);
    if (dec.info() != Eigen::Success) fail(ErrorCode::ConvergenceFailure, "svd: Jacobi iteration failed");
    out.u = dec.matrixU();
    out.sigma = dec.singularValues();
    out.v = dec.matrixV();
  } else {
    Eigen::BDCSVD<Mat<Scalar>> dec(x, options);
    if (dec.info() != Eigen::Success) fail(ErrorCode::ConvergenceFailure, "svd: BDC iteration failed");
    out.u = dec.matrixU();
    out.sigma = dec.singularValues();
    out.v = dec.matrixV();
  }
  detail::normalize_column_phases(out.u, out.v);
  detail::verify_factors(x, out);
  return out;
}

// Distinct singular values with multiplicities. Representatives are group
// means; a representative at or below gap_tol is snapped to exactly zero.
struct SpectrumProfile {
  std::vector<double> distinct;      // strictly descending
  std::vector<int> multiplicities;   // same length, positive
  double gap_tol = 0.0;

  int count() const { return static_cast<int>(distinct.size()); }
  int total() const {
    int t = 0;
    for (int d : multiplicities) t += d;
    return t;
  }
  bool simple() const {
    for (int d : multiplicities)
      if (d != 1) return false;
    return true;
  }
  bool has_zero_group() const { return !distinct.empty() && distinct.back() == 0.0; }
};

// Greedy left-to-right grouping: a new group starts when the previous value
// exceeds the current one by more than gap_tol.
inline SpectrumProfile group_spectrum(const RealVec& sigma, double gap_tol) {
  SpectrumProfile out;
  out.gap_tol = gap_tol;
  for (Index i = 0; i + 1 < sigma.size(); ++i)
    if (sigma(i) < sigma(i + 1))
      fail(ErrorCode::UnsortedInput, "group_spectrum: singular values must be non-increasing");
  if (sigma.size() > 0 && sigma(sigma.size() - 1) < 0.0)
    fail(ErrorCode::UnsortedInput, "group_spectrum: singular values must be nonnegative");

  Index i = 0;
  while (i < sigma.size()) {
    Index j = i + 1;
    while (j < sigma.size() && sigma(j - 1) - sigma(j) <= gap_tol) ++j;
    double mean = 0.0;
    for (Index k = i; k < j; ++k) mean += sigma(k);
    mean /= static_cast<double>(j - i);
    if (mean <= gap_tol) mean = 0.0;
    out.distinct.push_back(mean);
    out.multiplicities.push_back(static_cast<int>(j - i));
    i = j;
  }
  return out;
}

struct SimplicityCheck {
  bool simple_full_rank = false;
  enum class Issue { None, RepeatedValue, RankDeficient } issue = Issue::None;
  Index index = -1;  // offending position in sigma
};

/// True iff consecutive gaps and the smallest value all exceed gap_tol.
inline SimplicityCheck is_simple_full_rank(const RealVec& sigma, double gap_tol) {
  SimplicityCheck out;
  for (Index i = 0; i + 1 < sigma.size(); ++i) {
    if (sigma(i) < sigma(i + 1))
      fail(ErrorCode::UnsortedInput, "is_simple_full_rank: input must be sorted descending");
    if (sigma(i) - sigma(i + 1) <= gap_tol) {
      out.issue = SimplicityCheck::Issue::RepeatedValue;
      out.index = i;
      return out;
    }
  }
  if (sigma.size() > 0 && sigma(sigma.size() - 1) <= gap_tol) {
    out.issue = SimplicityCheck::Issue::RankDeficient;
    out.index = sigma.size() - 1;
    return out;
  }
  out.simple_full_rank = true;
  return out;
}

}  // namespace svt
