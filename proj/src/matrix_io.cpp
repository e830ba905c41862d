#include "svt/matrix_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <system_error>
#include <vector>

namespace svt {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& token, const char* context) {
  double v = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  auto res = std::from_chars(begin, end, v, std::chars_format::general);
  if (res.ec != std::errc() || res.ptr != end)
    fail(ErrorCode::IoFailure, std::string(context) + ": cannot parse number '" + token + "'");
  return v;
}

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

bool next_content_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (!line.empty() && line.find_first_not_of(" \t\r") != std::string::npos) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return true;
    }
  }
  return false;
}

Field parse_field_token(const std::string& tok, const std::string& origin) {
  if (tok == "real") return Field::Real;
  if (tok == "complex") return Field::Complex;
  fail(ErrorCode::IoFailure, origin + ": field must be 'real' or 'complex', got '" + tok + "'");
}

long parse_dim(const std::string& tok, const std::string& origin) {
  double v = parse_double(tok, origin.c_str());
  long n = static_cast<long>(v);
  if (v != static_cast<double>(n) || n <= 0)
    fail(ErrorCode::IoFailure, origin + ": dimension '" + tok + "' is not a positive integer");
  return n;
}

// Reads `rows` content lines of `cols` entries into a dense block.
template <class Scalar>
Mat<Scalar> read_value_block(std::istream& in, Index rows, Index cols, const std::string& origin) {
  constexpr bool complex_field = scalar_traits<Scalar>::is_complex;
  const std::size_t per_line = static_cast<std::size_t>(cols) * (complex_field ? 2 : 1);
  Mat<Scalar> m(rows, cols);
  std::string line;
  for (Index i = 0; i < rows; ++i) {
    if (!next_content_line(in, line))
      fail(ErrorCode::IoFailure, origin + ": unexpected end of file at row " + std::to_string(i));
    std::vector<std::string> toks = split_ws(line);
    if (toks.size() != per_line)
      fail(ErrorCode::IoFailure, origin + ": row " + std::to_string(i) + " has " +
                                     std::to_string(toks.size()) + " values, expected " +
                                     std::to_string(per_line));
    for (Index j = 0; j < cols; ++j) {
      if constexpr (complex_field) {
        double re = parse_double(toks[static_cast<std::size_t>(2 * j)], origin.c_str());
        double im = parse_double(toks[static_cast<std::size_t>(2 * j + 1)], origin.c_str());
        m(i, j) = Complex(re, im);
      } else {
        m(i, j) = parse_double(toks[static_cast<std::size_t>(j)], origin.c_str());
      }
    }
  }
  if (!m.allFinite()) fail(ErrorCode::NonFinite, origin + ": file contains non-finite values");
  return m;
}

template <class Scalar>
void write_value_block(std::ostream& out, const Mat<Scalar>& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ' ';
      if constexpr (scalar_traits<Scalar>::is_complex) {
        out << format_double(m(i, j).real()) << ' ' << format_double(m(i, j).imag());
      } else {
        out << format_double(m(i, j));
      }
    }
    out << '\n';
  }
}

}  // namespace

Matrix read_mat1(std::istream& in, const std::string& origin) {
  std::string line;
  if (!next_content_line(in, line)) fail(ErrorCode::IoFailure, origin + ": empty file");
  std::vector<std::string> toks = split_ws(line);
  if (toks.size() != 4 || toks[0] != "MAT1")
    fail(ErrorCode::IoFailure, origin + ": expected header 'MAT1 <rows> <cols> <real|complex>'");
  Index rows = parse_dim(toks[1], origin);
  Index cols = parse_dim(toks[2], origin);
  Field field = parse_field_token(toks[3], origin);
  if (field == Field::Real) return Matrix(read_value_block<double>(in, rows, cols, origin));
  return Matrix(read_value_block<Complex>(in, rows, cols, origin));
}

void write_mat1(std::ostream& out, const Matrix& m) {
  out << "MAT1 " << m.rows() << ' ' << m.cols() << ' ' << field_name(m.field()) << '\n';
  m.visit([&](const auto& mat) { write_value_block(out, mat); });
}

Series read_ser1(std::istream& in, const std::string& origin) {
  std::string line;
  if (!next_content_line(in, line)) fail(ErrorCode::IoFailure, origin + ": empty file");
  std::vector<std::string> toks = split_ws(line);
  if (toks.size() != 5 || toks[0] != "SER1")
    fail(ErrorCode::IoFailure, origin + ": expected header 'SER1 <nx> <ny> <t> <real|complex>'");
  Index nx = parse_dim(toks[1], origin);
  Index ny = parse_dim(toks[2], origin);
  Index t = parse_dim(toks[3], origin);
  Field field = parse_field_token(toks[4], origin);

  auto read_frames = [&](auto tag) {
    using Scalar = decltype(tag);
    ImageSeries<Scalar> s;
    s.nx = nx;
    s.ny = ny;
    s.frames.reserve(static_cast<std::size_t>(t));
    for (Index f = 0; f < t; ++f) s.frames.push_back(read_value_block<Scalar>(in, nx, ny, origin));
    s.validate();
    return Series(std::move(s));
  };
  if (field == Field::Real) return read_frames(double{});
  return read_frames(Complex{});
}

void write_ser1(std::ostream& out, const Series& s) {
  out << "SER1 " << s.nx() << ' ' << s.ny() << ' ' << s.t() << ' ' << field_name(s.field()) << '\n';
  s.visit([&](const auto& series) {
    for (std::size_t f = 0; f < series.frames.size(); ++f) {
      if (f > 0) out << '\n';
      write_value_block(out, series.frames[f]);
    }
  });
}

namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoFailure, "cannot open '" + path + "' for reading");
  return in;
}

}  // namespace

FileKind detect_file_kind(const std::string& path) {
  std::ifstream in = open_input(path);
  std::string magic;
  in >> magic;
  if (magic == "MAT1") return FileKind::Mat1;
  if (magic == "SER1") return FileKind::Ser1;
  fail(ErrorCode::IoFailure, "'" + path + "': unrecognized format (expected MAT1 or SER1 header)");
}

Matrix load_mat1(const std::string& path) {
  std::ifstream in = open_input(path);
  return read_mat1(in, path);
}

Series load_ser1(const std::string& path) {
  std::ifstream in = open_input(path);
  return read_ser1(in, path);
}

namespace {

template <class WriteFn>
void save_text(const std::string& path, WriteFn&& write) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoFailure, "cannot open '" + path + "' for writing");
  write(out);
  out.flush();
  if (!out) fail(ErrorCode::IoFailure, "failed writing '" + path + "'");
}

}  // namespace

void save_mat1(const std::string& path, const Matrix& m) {
  save_text(path, [&](std::ostream& out) { write_mat1(out, m); });
}

void save_ser1(const std::string& path, const Series& s) {
  save_text(path, [&](std::ostream& out) { write_ser1(out, s); });
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  const bool with_mc = !result.mc_risk.empty();
  out << (with_mc ? "lambda,sure,mc_risk" : "lambda,sure") << '\n';
  for (std::size_t i = 0; i < result.lambdas.size(); ++i) {
    out << format_double(result.lambdas[i]) << ',' << format_double(result.sure_values[i]);
    if (with_mc) out << ',' << format_double(result.mc_risk[i]);
    out << '\n';
  }
  out << "# argmin_lambda=" << format_double(result.argmin_lambda) << '\n';
}

void save_sweep_csv(const std::string& path, const SweepResult& result) {
  save_text(path, [&](std::ostream& out) { write_sweep_csv(out, result); });
}

}  // namespace svt
