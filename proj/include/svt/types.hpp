#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace svt {

using Complex = std::complex<double>;

template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using RealMat    = Mat<double>;
using ComplexMat = Mat<Complex>;
using RealVec    = Eigen::VectorXd;
using Index      = Eigen::Index;

enum class Field { Real, Complex };

/// Number of real coordinates per matrix entry (1 real, 2 complex).
inline double field_beta(Field f) { return f == Field::Real ? 1.0 : 2.0; }

inline const char* field_name(Field f) { return f == Field::Real ? "real" : "complex"; }

template <class Scalar>
struct scalar_traits;

template <>
struct scalar_traits<double> {
  static constexpr Field field = Field::Real;
  static constexpr bool is_complex = false;
};

template <>
struct scalar_traits<Complex> {
  static constexpr Field field = Field::Complex;
  static constexpr bool is_complex = true;
};

enum class ErrorCode {
  NonFinite,
  ConvergenceFailure,
  UnsortedInput,
  NotSimple,
  RankDeficient,
  ThresholdTie,
  AmbiguousSpectrum,
  NonDifferentiablePoint,
  NonUniformFunction,
  FZeroNotZero,
  ShapeMismatch,
  StepTooSmall,
  BadKind,
  BadShape,
  BadBracket,
  BadArgs,
  IoFailure,
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

template <class Scalar>
void require_finite(const Mat<Scalar>& x, const char* who) {
  if (!x.allFinite()) fail(ErrorCode::NonFinite, std::string(who) + ": input contains NaN or Inf");
}

template <class Scalar>
void require_same_shape(const Mat<Scalar>& a, const Mat<Scalar>& b, const char* who) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    fail(ErrorCode::ShapeMismatch, std::string(who) + ": operands have different shapes");
}

}  // namespace svt
