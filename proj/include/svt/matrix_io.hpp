#pragma once

#include "svt/blockwise.hpp"
#include "svt/risk_lab.hpp"
#include "svt/types.hpp"

#include <iosfwd>
#include <string>
#include <variant>

namespace svt {

// Runtime-tagged dense matrix for file I/O and CLI dispatch; the numeric core
// is templated on the scalar and reached through visit().
class Matrix {
public:
  explicit Matrix(RealMat m) : value_(std::move(m)) {}
  explicit Matrix(ComplexMat m) : value_(std::move(m)) {}

  Field field() const { return std::holds_alternative<RealMat>(value_) ? Field::Real : Field::Complex; }
  Index rows() const {
    return std::visit([](const auto& m) { return m.rows(); }, value_);
  }
  Index cols() const {
    return std::visit([](const auto& m) { return m.cols(); }, value_);
  }

  const RealMat& real() const {
    if (field() != Field::Real) fail(ErrorCode::BadArgs, "matrix: expected real field");
    return std::get<RealMat>(value_);
  }
  const ComplexMat& cplx() const {
    if (field() != Field::Complex) fail(ErrorCode::BadArgs, "matrix: expected complex field");
    return std::get<ComplexMat>(value_);
  }

  template <class F>
  decltype(auto) visit(F&& f) const {
    return std::visit(std::forward<F>(f), value_);
  }

private:
  std::variant<RealMat, ComplexMat> value_;
};

class Series {
public:
  explicit Series(ImageSeries<double> s) : value_(std::move(s)) {}
  explicit Series(ImageSeries<Complex> s) : value_(std::move(s)) {}

  Field field() const {
    return std::holds_alternative<ImageSeries<double>>(value_) ? Field::Real : Field::Complex;
  }
  Index nx() const {
    return std::visit([](const auto& s) { return s.nx; }, value_);
  }
  Index ny() const {
    return std::visit([](const auto& s) { return s.ny; }, value_);
  }
  Index t() const {
    return std::visit([](const auto& s) { return s.t(); }, value_);
  }

  template <class F>
  decltype(auto) visit(F&& f) const {
    return std::visit(std::forward<F>(f), value_);
  }

private:
  std::variant<ImageSeries<double>, ImageSeries<Complex>> value_;
};

/// 17-significant-digit decimal; round-trips any finite double exactly and is
/// locale-independent.
std::string format_double(double v);

double parse_double(const std::string& token, const char* context);

// MAT1: header "MAT1 <rows> <cols> <real|complex>", then <rows> lines of
// whitespace-separated values; complex entries are consecutive re im pairs.
Matrix read_mat1(std::istream& in, const std::string& origin);
void write_mat1(std::ostream& out, const Matrix& m);

// SER1: header "SER1 <nx> <ny> <t> <real|complex>", then t frame blocks of
// nx lines with ny entries each (complex as pairs), blank line between frames.
Series read_ser1(std::istream& in, const std::string& origin);
void write_ser1(std::ostream& out, const Series& s);

enum class FileKind { Mat1, Ser1 };

FileKind detect_file_kind(const std::string& path);
Matrix load_mat1(const std::string& path);
Series load_ser1(const std::string& path);
void save_mat1(const std::string& path, const Matrix& m);
void save_ser1(const std::string& path, const Series& s);

// Sweep CSV: header "lambda,sure" (plus ",mc_risk" when present), one row per
// grid point, then a trailing "# argmin_lambda=<value>" comment.
void write_sweep_csv(std::ostream& out, const SweepResult& result);
void save_sweep_csv(const std::string& path, const SweepResult& result);

}  // namespace svt
