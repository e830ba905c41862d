#pragma once

#include "svt/svd.hpp"
#include "svt/types.hpp"

#include <cmath>

namespace svt {

// First-order perturbation of the reduced SVD at a simple, full-rank matrix.
// omega_u stacks the r x r block U^H dU on top of the tail Q^H dU, where Q is
// an orthonormal completion of range(U); omega_v is the r x r block dV^H V.
// Top blocks are anti-symmetric (real) or skew-Hermitian (complex). In the
// complex case the phase freedom on each singular pair is fixed by splitting
// the imaginary diagonal budget equally between omega_u and omega_v.
template <class Scalar>
struct SvdDifferential {
  SvdFactors<Scalar> factors;
  RealVec d_sigma;             // r
  Mat<Scalar> omega_u;         // (r + max(0, m-r)) x r
  Mat<Scalar> omega_v;         // r x r
  Mat<Scalar> du;              // m x r
  Mat<Scalar> dv;              // n x r
  Mat<Scalar> dx_reconstruction;  // du S V^H + U dS V^H + U S dv^H; equals delta up to roundoff
};

namespace detail {

/// Orthonormal basis of range(u)^perp, m x (m - r).
template <class Scalar>
Mat<Scalar> orthonormal_completion(const Mat<Scalar>& u) {
  const Index m = u.rows();
  const Index r = u.cols();
  if (m == r) return Mat<Scalar>(m, 0);
  Eigen::HouseholderQR<Mat<Scalar>> qr(u);
  Mat<Scalar> full = qr.householderQ() * Mat<Scalar>::Identity(m, m);
  return full.rightCols(m - r);
}

// Requires x.rows() >= x.cols(); the public entry point reduces to this case.
template <class Scalar>
SvdDifferential<Scalar> svd_differential_tall(const Mat<Scalar>& x, const Mat<Scalar>& delta,
                                              double gap_tol, const Mat<Scalar>* completion) {
  SvdDifferential<Scalar> out;
  out.factors = compute_svd(x);
  const SvdFactors<Scalar>& f = out.factors;
  const Index m = f.rows();
  const Index r = f.rank_dim();
  const RealVec& s = f.sigma;

  double tol = resolve_gap_tol(gap_tol, s);
  SimplicityCheck check = is_simple_full_rank(s, tol);
  if (!check.simple_full_rank) {
    if (check.issue == SimplicityCheck::Issue::RepeatedValue)
      fail(ErrorCode::NotSimple, "svd_differential: repeated singular value at index " +
                                     std::to_string(check.index));
    fail(ErrorCode::RankDeficient, "svd_differential: singular value at index " +
                                       std::to_string(check.index) + " is numerically zero");
  }

  Mat<Scalar> q;
  if (completion != nullptr) {
    q = *completion;
    if (q.rows() != m || q.cols() != m - r)
      fail(ErrorCode::ShapeMismatch, "svd_differential: completion has wrong shape");
  } else {
    q = orthonormal_completion(f.u);
  }

  Mat<Scalar> a_top = f.u.adjoint() * delta * f.v;   // r x r
  Mat<Scalar> a_tail = q.adjoint() * delta * f.v;    // (m-r) x r

  out.d_sigma.resize(r);
  Mat<Scalar> omega_u_top = Mat<Scalar>::Zero(r, r);
  out.omega_v = Mat<Scalar>::Zero(r, r);

  for (Index i = 0; i < r; ++i) {
    if constexpr (scalar_traits<Scalar>::is_complex) {
      out.d_sigma(i) = a_top(i, i).real();
      Scalar gauge = Scalar(0, a_top(i, i).imag() / (2.0 * s(i)));
      omega_u_top(i, i) = gauge;
      out.omega_v(i, i) = gauge;
    } else {
      out.d_sigma(i) = a_top(i, i);
    }
    for (Index j = 0; j < r; ++j) {
      if (i == j) continue;
      Scalar aij = a_top(i, j);
      Scalar bji;
      if constexpr (scalar_traits<Scalar>::is_complex) {
        bji = std::conj(a_top(j, i));
      } else {
        bji = a_top(j, i);
      }
      double denom = s(i) * s(i) - s(j) * s(j);
      omega_u_top(i, j) = -(s(j) * aij + s(i) * bji) / denom;
      out.omega_v(i, j) = (s(i) * aij + s(j) * bji) / denom;
    }
  }

  Mat<Scalar> omega_tail(m - r, r);
  for (Index i = 0; i < m - r; ++i)
    for (Index j = 0; j < r; ++j) omega_tail(i, j) = a_tail(i, j) / s(j);

  out.omega_u.resize(m, r);
  out.omega_u.topRows(r) = omega_u_top;
  if (m > r) out.omega_u.bottomRows(m - r) = omega_tail;

  out.du = f.u * omega_u_top + q * omega_tail;
  out.dv = f.v * out.omega_v.adjoint();
  out.dx_reconstruction = out.du * s.asDiagonal() * f.v.adjoint() +
                          f.u * out.d_sigma.asDiagonal() * f.v.adjoint() +
                          f.u * s.asDiagonal() * out.dv.adjoint();
  return out;
}

}  // namespace detail

template <class Scalar>
SvdDifferential<Scalar> svd_differential(const Mat<Scalar>& x, const Mat<Scalar>& delta,
                                         double gap_tol = -1.0) {
  require_finite(x, "svd_differential");
  require_finite(delta, "svd_differential");
  require_same_shape(x, delta, "svd_differential");
  if (x.rows() >= x.cols()) return detail::svd_differential_tall<Scalar>(x, delta, gap_tol, nullptr);

  // Wide matrices: differentiate the adjoint problem and swap the roles of the
  // two factors. With X = U S V^H we have X^H = V S U^H, so the adjoint's
  // U-side differential is dV and its V-side differential is dU.
  Mat<Scalar> xh = x.adjoint();
  Mat<Scalar> dh = delta.adjoint();
  SvdDifferential<Scalar> adj = detail::svd_differential_tall<Scalar>(xh, dh, gap_tol, nullptr);

  SvdDifferential<Scalar> out;
  const Index r = adj.factors.rank_dim();
  out.factors.u = adj.factors.v;
  out.factors.sigma = adj.factors.sigma;
  out.factors.v = adj.factors.u;
  out.d_sigma = adj.d_sigma;
  out.du = adj.dv;
  out.dv = adj.du;
  // U^H dU = (dU'^H U')^H restricted to the top block = -omega_v', and
  // dV^H V = -(V'^H dV') = -omega_u' top block, by skew symmetry.
  out.omega_u = -adj.omega_v;
  out.omega_v = -adj.omega_u.topRows(r);
  out.dx_reconstruction = out.du * out.factors.sigma.asDiagonal() * out.factors.v.adjoint() +
                          out.factors.u * out.d_sigma.asDiagonal() * out.factors.v.adjoint() +
                          out.factors.u * out.factors.sigma.asDiagonal() * out.dv.adjoint();
  return out;
}

// Same computation with a caller-supplied completion of range(U); exposed so
// gauge invariance of downstream reconstructions can be checked directly.
// Requires x.rows() >= x.cols().
template <class Scalar>
SvdDifferential<Scalar> svd_differential_with_completion(const Mat<Scalar>& x,
                                                         const Mat<Scalar>& delta,
                                                         const Mat<Scalar>& completion,
                                                         double gap_tol = -1.0) {
  require_finite(x, "svd_differential");
  require_finite(delta, "svd_differential");
  require_same_shape(x, delta, "svd_differential");
  if (x.rows() < x.cols())
    fail(ErrorCode::BadShape, "svd_differential: custom completion requires rows >= cols");
  return detail::svd_differential_tall<Scalar>(x, delta, gap_tol, &completion);
}

}  // namespace svt
