#pragma once

#include "svt/divergence.hpp"
#include "svt/parallel.hpp"
#include "svt/spectral.hpp"
#include "svt/sure.hpp"
#include "svt/svd.hpp"
#include "svt/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace svt {

template <class Scalar>
struct ImageSeries {
  Index nx = 0;
  Index ny = 0;
  std::vector<Mat<Scalar>> frames;  // each nx x ny

  Index t() const { return static_cast<Index>(frames.size()); }

  void validate() const {
    if (nx <= 0 || ny <= 0 || frames.empty())
      fail(ErrorCode::BadShape, "image series: dimensions must be positive");
    for (const auto& fr : frames) {
      if (fr.rows() != nx || fr.cols() != ny)
        fail(ErrorCode::ShapeMismatch, "image series: all frames must be nx x ny");
      require_finite(fr, "image series");
    }
  }
};

// Periodic tiling with one k x k block anchored at every pixel, in which case
// each pixel is covered by exactly k^2 blocks and the partition weight is
// c = k^2. The single-block tiling (k = nx = ny, one anchor, c = 1) is the
// degenerate configuration under which block-wise SVT is plain SVT.
struct BlockConfig {
  enum class Tiling { EveryPixel, SingleBlock };

  Index k = 1;
  Tiling tiling = Tiling::EveryPixel;

  static BlockConfig every_pixel(Index k) { return BlockConfig{k, Tiling::EveryPixel}; }
  static BlockConfig single_block(Index k) { return BlockConfig{k, Tiling::SingleBlock}; }

  void validate(Index nx, Index ny) const {
    if (k < 1 || k > std::min(nx, ny))
      fail(ErrorCode::BadShape, "block config: k must satisfy 1 <= k <= min(nx, ny)");
    if (tiling == Tiling::SingleBlock && (k != nx || k != ny))
      fail(ErrorCode::ShapeMismatch, "block config: single-block tiling requires k = nx = ny");
  }

  double normalization() const {
    return tiling == Tiling::SingleBlock ? 1.0 : static_cast<double>(k) * static_cast<double>(k);
  }

  Index anchor_count(Index nx, Index ny) const {
    return tiling == Tiling::SingleBlock ? 1 : nx * ny;
  }
};

/// Casorati matrix: column j is frame j vectorized in column-major pixel
/// order, so pixel (ix, iy) maps to row ix + nx*iy.
template <class Scalar>
Mat<Scalar> casorati(const ImageSeries<Scalar>& series) {
  series.validate();
  Mat<Scalar> out(series.nx * series.ny, series.t());
  for (Index j = 0; j < series.t(); ++j)
    out.col(j) = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(
        series.frames[static_cast<std::size_t>(j)].data(), series.nx * series.ny);
  return out;
}

template <class Scalar>
ImageSeries<Scalar> inverse_casorati(const Mat<Scalar>& x, Index nx, Index ny) {
  if (nx <= 0 || ny <= 0 || x.rows() != nx * ny)
    fail(ErrorCode::ShapeMismatch, "inverse_casorati: rows must equal nx*ny");
  ImageSeries<Scalar> out;
  out.nx = nx;
  out.ny = ny;
  out.frames.reserve(static_cast<std::size_t>(x.cols()));
  for (Index j = 0; j < x.cols(); ++j) {
    Mat<Scalar> frame(nx, ny);
    Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(frame.data(), nx * ny) = x.col(j);
    out.frames.push_back(std::move(frame));
  }
  return out;
}

// Casorati row indices of the k x k block anchored at pixel b, with periodic
// wraparound. Anchors are ordered row-major over pixels (b = bx*ny + by); rows
// within a block are ordered row-major over the block offsets.
inline std::vector<Index> block_rows(Index nx, Index ny, Index anchor, Index k) {
  if (anchor < 0 || anchor >= nx * ny)
    fail(ErrorCode::ShapeMismatch, "block_rows: anchor out of range");
  const Index bx = anchor / ny;
  const Index by = anchor % ny;
  std::vector<Index> rows;
  rows.reserve(static_cast<std::size_t>(k * k));
  for (Index dx = 0; dx < k; ++dx)
    for (Index dy = 0; dy < k; ++dy) {
      Index px = (bx + dx) % nx;
      Index py = (by + dy) % ny;
      rows.push_back(px + nx * py);
    }
  return rows;
}

/// R_b applied to a Casorati matrix: the k^2 x t submatrix of block b.
template <class Scalar>
Mat<Scalar> extract_block(const Mat<Scalar>& x, Index nx, Index ny, Index anchor, Index k) {
  if (x.rows() != nx * ny)
    fail(ErrorCode::ShapeMismatch, "extract_block: matrix rows must equal nx*ny");
  std::vector<Index> rows = block_rows(nx, ny, anchor, k);
  Mat<Scalar> out(static_cast<Index>(rows.size()), x.cols());
  for (Index i = 0; i < out.rows(); ++i) out.row(i) = x.row(rows[static_cast<std::size_t>(i)]);
  return out;
}

namespace detail {

template <class Scalar>
void embed_block_add(Mat<Scalar>& acc, const std::vector<Index>& rows, const Mat<Scalar>& block) {
  for (Index i = 0; i < block.rows(); ++i) acc.row(rows[static_cast<std::size_t>(i)]) += block.row(i);
}

template <class Scalar>
void require_casorati(const Mat<Scalar>& x, Index nx, Index ny, const BlockConfig& cfg,
                      const char* who) {
  cfg.validate(nx, ny);
  if (x.rows() != nx * ny)
    fail(ErrorCode::ShapeMismatch, std::string(who) + ": matrix rows must equal nx*ny");
  require_finite(x, who);
}

}  // namespace detail

// Block-wise SVT estimates for several thresholds from one pass of per-block
// SVDs; blocks are accumulated in ascending anchor order. lambda <= 0 entries
// reproduce the input exactly.
template <class Scalar>
std::vector<Mat<Scalar>> bsvt_multi(const Mat<Scalar>& x, Index nx, Index ny,
                                    const BlockConfig& cfg, const std::vector<double>& lambdas) {
  detail::require_casorati(x, nx, ny, cfg, "bsvt");
  const double c = cfg.normalization();
  const Index anchors = cfg.anchor_count(nx, ny);
  std::vector<Mat<Scalar>> acc;
  std::vector<std::size_t> active;  // lambda indices that need accumulation
  acc.reserve(lambdas.size());
  for (std::size_t l = 0; l < lambdas.size(); ++l) {
    acc.emplace_back(Mat<Scalar>::Zero(x.rows(), x.cols()));
    if (lambdas[l] > 0.0) active.push_back(l);
  }

  if (!active.empty()) {
    for (Index b = 0; b < anchors; ++b) {
      std::vector<Index> rows = block_rows(nx, ny, b, cfg.k);
      Mat<Scalar> sub = extract_block(x, nx, ny, b, cfg.k);
      SvdFactors<Scalar> fac = compute_svd(sub);
      parallel_for(active.size(), [&](std::size_t a) {
        std::size_t l = active[a];
        RealVec fs(fac.rank_dim());
        for (Index i = 0; i < fs.size(); ++i)
          fs(i) = soft_threshold_scalar(fac.sigma(i), lambdas[l]);
        Mat<Scalar> denoised = fac.u * fs.asDiagonal() * fac.v.adjoint();
        detail::embed_block_add(acc[l], rows, denoised);
      });
    }
  }
  for (std::size_t l = 0; l < lambdas.size(); ++l) {
    if (lambdas[l] > 0.0)
      acc[l] /= Scalar(c);
    else
      acc[l] = x;
  }
  return acc;
}

/// c^{-1} sum_b R_b^* svt(R_b x, lambda) over the configured tiling.
template <class Scalar>
Mat<Scalar> bsvt(const Mat<Scalar>& x, Index nx, Index ny, const BlockConfig& cfg, double lambda) {
  detail::require_casorati(x, nx, ny, cfg, "bsvt");
  if (lambda <= 0.0) return x;
  const double c = cfg.normalization();
  const Index anchors = cfg.anchor_count(nx, ny);
  Mat<Scalar> out = Mat<Scalar>::Zero(x.rows(), x.cols());

  // Chunked so per-block results can be computed concurrently while the
  // accumulation stays in ascending anchor order.
  const Index chunk = 64;
  std::vector<Mat<Scalar>> slot(static_cast<std::size_t>(std::min(chunk, anchors)));
  for (Index base = 0; base < anchors; base += chunk) {
    const Index count = std::min(chunk, anchors - base);
    parallel_for(static_cast<std::size_t>(count), [&](std::size_t i) {
      Index b = base + static_cast<Index>(i);
      Mat<Scalar> sub = extract_block(x, nx, ny, b, cfg.k);
      SvdFactors<Scalar> fac = compute_svd(sub);
      RealVec fs(fac.rank_dim());
      for (Index s = 0; s < fs.size(); ++s) fs(s) = soft_threshold_scalar(fac.sigma(s), lambda);
      slot[i] = fac.u * fs.asDiagonal() * fac.v.adjoint();
    });
    for (Index i = 0; i < count; ++i) {
      std::vector<Index> rows = block_rows(nx, ny, base + i, cfg.k);
      detail::embed_block_add(out, rows, slot[static_cast<std::size_t>(i)]);
    }
  }
  return out / Scalar(c);
}

struct BsvtSureCurve {
  std::vector<double> divergence;     // c^{-1} sum_b div per lambda
  std::vector<double> residual;       // c^{-2} ||sum_b R_b^* U_b H(S_b) V_b^H||_F^2 per lambda
  std::vector<bool> tie_flagged;
  std::vector<bool> repeated_used;
};

// One pass of per-block SVDs serving every threshold in the grid: divergence
// terms from the block spectra, residual terms from the accumulated
// min(lambda, sigma) reconstructions.
template <class Scalar>
BsvtSureCurve bsvt_sure_curve(const Mat<Scalar>& x, Index nx, Index ny, const BlockConfig& cfg,
                              const std::vector<double>& lambdas, double gap_tol = -1.0) {
  detail::require_casorati(x, nx, ny, cfg, "sure_bsvt");
  constexpr Field field = scalar_traits<Scalar>::field;
  const double c = cfg.normalization();
  const Index anchors = cfg.anchor_count(nx, ny);
  const std::size_t nl = lambdas.size();

  BsvtSureCurve out;
  out.divergence.assign(nl, 0.0);
  out.residual.assign(nl, 0.0);
  out.tie_flagged.assign(nl, false);
  out.repeated_used.assign(nl, false);
  std::vector<Mat<Scalar>> h_acc(nl, Mat<Scalar>::Zero(x.rows(), x.cols()));

  for (Index b = 0; b < anchors; ++b) {
    std::vector<Index> rows = block_rows(nx, ny, b, cfg.k);
    Mat<Scalar> sub = extract_block(x, nx, ny, b, cfg.k);
    SvdFactors<Scalar> fac = compute_svd(sub);
    parallel_for(nl, [&](std::size_t l) {
      DivergenceValue dv =
          div_spectral_auto(fac.sigma, sub.rows(), sub.cols(),
                            SpectralFunction::soft_threshold(lambdas[l]), field, gap_tol);
      out.divergence[l] += dv.value;
      if (dv.threshold_tie_nudged) out.tie_flagged[l] = true;
      if (dv.used_repeated_formula) out.repeated_used[l] = true;
      RealVec clipped(fac.rank_dim());
      for (Index i = 0; i < clipped.size(); ++i) clipped(i) = std::min(lambdas[l], fac.sigma(i));
      Mat<Scalar> h_block = fac.u * clipped.asDiagonal() * fac.v.adjoint();
      detail::embed_block_add(h_acc[l], rows, h_block);
    });
  }
  for (std::size_t l = 0; l < nl; ++l) {
    out.divergence[l] /= c;
    out.residual[l] = h_acc[l].squaredNorm() / (c * c);
  }
  return out;
}

/// c^{-1} sum_b div svt(R_b x, lambda); per-block formulas dispatch on the
/// block spectrum exactly as in the global case.
template <class Scalar>
double div_bsvt(const Mat<Scalar>& x, Index nx, Index ny, const BlockConfig& cfg, double lambda,
                double gap_tol = -1.0) {
  detail::require_casorati(x, nx, ny, cfg, "div_bsvt");
  constexpr Field field = scalar_traits<Scalar>::field;
  const Index anchors = cfg.anchor_count(nx, ny);
  std::vector<double> per_block(static_cast<std::size_t>(anchors), 0.0);
  parallel_for(static_cast<std::size_t>(anchors), [&](std::size_t b) {
    Mat<Scalar> sub = extract_block(x, nx, ny, static_cast<Index>(b), cfg.k);
    Eigen::JacobiSVD<Mat<Scalar>> dec(sub);  // values only
    DivergenceValue dv = div_spectral_auto(dec.singularValues(), sub.rows(), sub.cols(),
                                           SpectralFunction::soft_threshold(lambda), field, gap_tol);
    per_block[b] = dv.value;
  });
  double acc = 0.0;
  for (double v : per_block) acc += v;
  return acc / cfg.normalization();
}

template <class Scalar>
SureReport sure_bsvt(const Mat<Scalar>& x, Index nx, Index ny, const BlockConfig& cfg,
                     double lambda, double tau, double gap_tol = -1.0) {
  detail::require_tau(tau);
  if (lambda < 0.0) fail(ErrorCode::BadArgs, "sure_bsvt: lambda must be nonnegative");
  BsvtSureCurve curve = bsvt_sure_curve(x, nx, ny, cfg, {lambda}, gap_tol);
  SureReport rep;
  rep.lambda = lambda;
  rep.tau = tau;
  double tau2 = tau * tau;
  double coords = field_beta(scalar_traits<Scalar>::field) * static_cast<double>(x.rows()) *
                  static_cast<double>(x.cols());
  rep.constant_term = -(coords * tau2);
  rep.residual_term = curve.residual[0];
  rep.divergence = curve.divergence[0];
  rep.threshold_tie_flagged = curve.tie_flagged[0];
  rep.used_repeated_formula = curve.repeated_used[0];
  rep.sure = rep.constant_term + rep.residual_term + 2.0 * (tau2 * rep.divergence);
  return rep;
}

}  // namespace svt
