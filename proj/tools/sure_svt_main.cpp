// sure_svt: generate synthetic low-rank data, denoise matrices and image
// series by (block-wise) singular value thresholding, sweep or auto-select the
// threshold by unbiased risk estimation, and self-verify the numerics.

#include "svt/blockwise.hpp"
#include "svt/divergence.hpp"
#include "svt/matrix_io.hpp"
#include "svt/risk_lab.hpp"
#include "svt/spectral.hpp"
#include "svt/sure.hpp"
#include "svt/verify.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using svt::Error;
using svt::ErrorCode;
using svt::Field;
using svt::Index;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;   // verification or validation failure
constexpr int kExitBadArgs = 2;
constexpr int kExitIo = 3;

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::BadArgs:
    case ErrorCode::BadKind:
    case ErrorCode::BadShape:
    case ErrorCode::BadBracket:
      return kExitBadArgs;
    case ErrorCode::IoFailure:
      return kExitIo;
    default:
      return kExitFailure;
  }
}

std::vector<double> parse_grid(const std::string& text) {
  // lo:hi:count:log|lin ; log spacing requires lo > 0.
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t next = text.find(':', pos);
    if (next == std::string::npos) {
      parts.push_back(text.substr(pos));
      break;
    }
    parts.push_back(text.substr(pos, next - pos));
    pos = next + 1;
  }
  if (parts.size() != 4) svt::fail(ErrorCode::BadArgs, "grid must be lo:hi:count:log|lin");
  double lo = svt::parse_double(parts[0], "grid");
  double hi = svt::parse_double(parts[1], "grid");
  double count_raw = svt::parse_double(parts[2], "grid");
  long count = static_cast<long>(count_raw);
  if (count_raw != static_cast<double>(count) || count < 1)
    svt::fail(ErrorCode::BadArgs, "grid count must be a positive integer");
  bool log_spaced;
  if (parts[3] == "log")
    log_spaced = true;
  else if (parts[3] == "lin")
    log_spaced = false;
  else
    svt::fail(ErrorCode::BadArgs, "grid spacing must be 'log' or 'lin'");
  if (lo < 0.0) svt::fail(ErrorCode::BadArgs, "grid lambdas must be nonnegative");
  if (count == 1) return {lo};
  if (!(lo < hi)) svt::fail(ErrorCode::BadArgs, "grid requires lo < hi");
  if (log_spaced && lo <= 0.0) svt::fail(ErrorCode::BadArgs, "log grid requires lo > 0");
  std::vector<double> grid(static_cast<std::size_t>(count));
  for (long i = 0; i < count; ++i) {
    double frac = static_cast<double>(i) / static_cast<double>(count - 1);
    grid[static_cast<std::size_t>(i)] =
        log_spaced ? lo * std::pow(hi / lo, frac) : lo + frac * (hi - lo);
  }
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

// An input file plus the matrix view the estimators run on: SER1 files are
// flattened to their Casorati matrix and restored on output.
struct LoadedInput {
  std::optional<svt::Matrix> matrix;
  std::optional<svt::Series> series;
  svt::Matrix data_matrix() const {
    if (matrix) return *matrix;
    return series->visit([](const auto& s) { return svt::Matrix(svt::casorati(s)); });
  }
  Field field() const { return matrix ? matrix->field() : series->field(); }
};

LoadedInput load_input(const std::string& path) {
  LoadedInput in;
  if (svt::detect_file_kind(path) == svt::FileKind::Mat1)
    in.matrix = svt::load_mat1(path);
  else
    in.series = svt::load_ser1(path);
  return in;
}

struct EstimatorArgs {
  std::string name = "svt";  // svt | bsvt
  Index block_size = 0;
  Index nx = 0;
  Index ny = 0;
};

svt::Estimator resolve_estimator(const EstimatorArgs& args, const LoadedInput& input) {
  if (args.name == "svt") return svt::Estimator::global_svt();
  if (args.name != "bsvt") svt::fail(ErrorCode::BadArgs, "estimator must be 'svt' or 'bsvt'");
  Index nx = args.nx;
  Index ny = args.ny;
  if (input.series) {
    nx = input.series->nx();
    ny = input.series->ny();
  }
  if (nx <= 0 || ny <= 0)
    svt::fail(ErrorCode::BadArgs, "bsvt needs --nx and --ny (or a SER1 input)");
  if (args.block_size <= 0) svt::fail(ErrorCode::BadArgs, "bsvt needs --block-size");
  svt::Matrix data = input.data_matrix();
  if (nx * ny != data.rows())
    svt::fail(ErrorCode::BadArgs, "bsvt: nx*ny must equal the matrix row count");
  return svt::Estimator::block_svt(nx, ny, svt::BlockConfig::every_pixel(args.block_size));
}

double resolve_tau(std::optional<double> tau, std::optional<double> snr, Index rows, Index cols) {
  if (tau.has_value() == snr.has_value())
    svt::fail(ErrorCode::BadArgs, "exactly one of --tau and --snr must be given");
  if (tau) {
    if (!(*tau > 0.0)) svt::fail(ErrorCode::BadArgs, "--tau must be positive");
    return *tau;
  }
  return svt::tau_from_snr(*snr, rows, cols);
}

double sigma_max_of(const svt::Matrix& data) {
  return data.visit([](const auto& m) {
    Eigen::JacobiSVD<std::decay_t<decltype(m)>> dec(m);
    return dec.singularValues()(0);
  });
}

// ---------------------------------------------------------------------------

int cmd_gen(int kind, Index m, Index n, std::uint64_t seed, const std::string& field_name,
            const std::string& out_path) {
  Field field;
  if (field_name == "real")
    field = Field::Real;
  else if (field_name == "complex")
    field = Field::Complex;
  else
    svt::fail(ErrorCode::BadArgs, "--field must be 'real' or 'complex'");
  svt::Matrix out = field == Field::Real
                        ? svt::Matrix(svt::gen_test_matrix<double>(kind, m, n, seed))
                        : svt::Matrix(svt::gen_test_matrix<svt::Complex>(kind, m, n, seed));
  svt::save_mat1(out_path, out);
  static const char* kEnsembles[] = {"gaussian", "gaussian-factor-product-rank-min/2",
                                     "gaussian-factor-product-rank-min/20", "sigmoid-spectrum"};
  std::cout << "kind=" << kind << " ensemble=" << kEnsembles[kind - 1] << " m=" << m << " n=" << n
            << " seed=" << seed << " field=" << field_name << " frobenius_norm=1\n";
  return kExitOk;
}

int cmd_sweep(const std::string& in_path, std::optional<double> tau_opt,
              std::optional<double> snr_opt, const std::string& grid_text,
              const EstimatorArgs& est_args, int mc_trials, const std::string& x0_path,
              std::uint64_t seed, const std::string& out_path) {
  LoadedInput input = load_input(in_path);
  svt::Matrix data = input.data_matrix();
  std::vector<double> grid = parse_grid(grid_text);
  double tau = resolve_tau(tau_opt, snr_opt, data.rows(), data.cols());
  svt::Estimator est = resolve_estimator(est_args, input);

  svt::SweepResult result = data.visit([&](const auto& y) { return svt::sweep(y, grid, tau, est); });
  result.metadata.seed = seed;
  if (snr_opt) result.metadata.snr = *snr_opt;

  if (mc_trials > 0) {
    if (x0_path.empty()) svt::fail(ErrorCode::BadArgs, "--mc requires --x0 <ground truth>");
    LoadedInput truth = load_input(x0_path);
    svt::Matrix x0 = truth.data_matrix();
    if (x0.field() != data.field() || x0.rows() != data.rows() || x0.cols() != data.cols())
      svt::fail(ErrorCode::BadArgs, "--x0 must match the input's field and shape");
    svt::NoiseModel noise{x0.field(), tau, seed};
    result.mc_risk = x0.visit(
        [&](const auto& m) { return svt::mc_risk(m, grid, noise, mc_trials, est); });
  }
  svt::save_sweep_csv(out_path, result);
  return kExitOk;
}

int cmd_select(const std::string& in_path, std::optional<double> tau_opt,
               std::optional<double> snr_opt, double lo, double hi, double tol,
               const EstimatorArgs& est_args) {
  LoadedInput input = load_input(in_path);
  svt::Matrix data = input.data_matrix();
  double tau = resolve_tau(tau_opt, snr_opt, data.rows(), data.cols());
  svt::Estimator est = resolve_estimator(est_args, input);

  double lambda_star = 0.0, sure_star = 0.0;
  data.visit([&](const auto& y) {
    using Scalar = typename std::decay_t<decltype(y)>::Scalar;
    if (est.kind == svt::Estimator::Kind::GlobalSvt) {
      svt::SvdFactors<Scalar> fac = svt::compute_svd(y);
      auto objective = [&](double lambda) {
        return svt::sure_svt_from_sigma(fac.sigma, y.rows(), y.cols(),
                                        svt::scalar_traits<Scalar>::field, lambda, tau)
            .sure;
      };
      lambda_star = svt::golden_section_min(objective, lo, hi, tol);
      sure_star = objective(lambda_star);
    } else {
      auto objective = [&](double lambda) {
        return svt::sure_bsvt(y, est.nx, est.ny, est.block, lambda, tau).sure;
      };
      lambda_star = svt::golden_section_min(objective, lo, hi, tol);
      sure_star = objective(lambda_star);
    }
  });
  std::cout << "lambda_star=" << svt::format_double(lambda_star) << '\n'
            << "sure=" << svt::format_double(sure_star) << '\n';
  return kExitOk;
}

int cmd_denoise(const std::string& in_path, std::optional<double> lambda_opt, bool auto_select,
                std::optional<double> tau_opt, std::optional<double> snr_opt,
                std::optional<double> lo_opt, std::optional<double> hi_opt,
                std::optional<double> tol_opt, const EstimatorArgs& est_args,
                const std::string& out_path) {
  if (lambda_opt.has_value() == auto_select)
    svt::fail(ErrorCode::BadArgs, "exactly one of --lambda and --auto must be given");
  LoadedInput input = load_input(in_path);
  svt::Matrix data = input.data_matrix();
  svt::Estimator est = resolve_estimator(est_args, input);

  double lambda = 0.0;
  if (auto_select) {
    double tau = resolve_tau(tau_opt, snr_opt, data.rows(), data.cols());
    double smax = sigma_max_of(data);
    double hi = hi_opt.value_or(1.05 * smax);
    double lo = lo_opt.value_or(hi * 1e-7);
    double tol = tol_opt.value_or(hi * 1e-6);
    data.visit([&](const auto& y) {
      using Scalar = typename std::decay_t<decltype(y)>::Scalar;
      if (est.kind == svt::Estimator::Kind::GlobalSvt) {
        svt::SvdFactors<Scalar> fac = svt::compute_svd(y);
        auto objective = [&](double l) {
          return svt::sure_svt_from_sigma(fac.sigma, y.rows(), y.cols(),
                                          svt::scalar_traits<Scalar>::field, l, tau)
              .sure;
        };
        lambda = svt::golden_section_min(objective, lo, hi, tol);
      } else {
        auto objective = [&](double l) {
          return svt::sure_bsvt(y, est.nx, est.ny, est.block, l, tau).sure;
        };
        lambda = svt::golden_section_min(objective, lo, hi, tol);
      }
    });
    std::cout << "lambda_star=" << svt::format_double(lambda) << '\n';
  } else {
    lambda = *lambda_opt;
    if (lambda < 0.0) svt::fail(ErrorCode::BadArgs, "--lambda must be nonnegative");
  }

  svt::Matrix denoised = data.visit(
      [&](const auto& y) { return svt::Matrix(svt::apply_estimator(y, lambda, est)); });

  if (input.series) {
    Index nx = input.series->nx();
    Index ny = input.series->ny();
    svt::Series out_series = denoised.visit(
        [&](const auto& m) { return svt::Series(svt::inverse_casorati(m, nx, ny)); });
    svt::save_ser1(out_path, out_series);
  } else {
    svt::save_mat1(out_path, denoised);
  }
  return kExitOk;
}

int cmd_verify(std::uint64_t seed, const std::string& sizes_text, bool inject_fault) {
  svt::VerifyOptions options;
  options.seed = seed;
  options.inject_fault = inject_fault;
  if (!sizes_text.empty()) {
    options.sizes.clear();
    std::size_t pos = 0;
    while (pos < sizes_text.size()) {
      std::size_t comma = sizes_text.find(',', pos);
      std::string item = sizes_text.substr(pos, comma == std::string::npos ? comma : comma - pos);
      std::size_t x = item.find('x');
      if (x == std::string::npos || x == 0 || x + 1 >= item.size())
        svt::fail(ErrorCode::BadArgs, "--sizes wants a comma list like 5x4,6x6");
      long m = std::strtol(item.substr(0, x).c_str(), nullptr, 10);
      long n = std::strtol(item.substr(x + 1).c_str(), nullptr, 10);
      if (m < 2 || n < 2) svt::fail(ErrorCode::BadArgs, "--sizes entries must be at least 2x2");
      options.sizes.emplace_back(m, n);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  }
  std::vector<svt::SuiteResult> results = svt::run_verification(options);
  const svt::SuiteResult* first_fail = nullptr;
  for (const auto& r : results) {
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
    if (!r.pass && first_fail == nullptr) first_fail = &r;
  }
  if (first_fail != nullptr) {
    std::cout << "verification failed: " << first_fail->name << '\n';
    return kExitFailure;
  }
  std::cout << "all verification suites passed\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-rank matrix and image-series denoising by singular value thresholding,\n"
               "with closed-form unbiased risk estimation for threshold selection."};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a synthetic unit-norm test matrix (MAT1)");
  int gen_kind = 1;
  long gen_m = 200, gen_n = 500;
  std::uint64_t gen_seed = 0;
  std::string gen_field = "real", gen_out;
  gen->add_option("--kind", gen_kind, "Ensemble: 1 full rank, 2 rank min/2, 3 rank min/20, 4 sigmoid spectrum")
      ->required();
  gen->add_option("--m", gen_m, "Rows (must be <= cols)")->required();
  gen->add_option("--n", gen_n, "Cols")->required();
  gen->add_option("--seed", gen_seed, "RNG seed");
  gen->add_option("--field", gen_field, "real|complex");
  gen->add_option("--out", gen_out, "Output MAT1 path")->required();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "SURE (optionally + Monte-Carlo risk) over a lambda grid, to CSV");
  std::string sweep_in, sweep_grid, sweep_x0, sweep_out;
  std::optional<double> sweep_tau, sweep_snr;
  EstimatorArgs sweep_est;
  int sweep_mc = 0;
  std::uint64_t sweep_seed = 0;
  sweep->add_option("--in", sweep_in, "Input MAT1/SER1 path")->required();
  sweep->add_option("--tau", sweep_tau, "Noise standard deviation per real coordinate");
  sweep->add_option("--snr", sweep_snr, "Signal-to-noise ratio (alternative to --tau)");
  sweep->add_option("--grid", sweep_grid, "lo:hi:count:log|lin")->required();
  sweep->add_option("--estimator", sweep_est.name, "svt|bsvt");
  sweep->add_option("--block-size", sweep_est.block_size, "Block side k (bsvt)");
  sweep->add_option("--nx", sweep_est.nx, "Image rows (bsvt on MAT1 input)");
  sweep->add_option("--ny", sweep_est.ny, "Image cols (bsvt on MAT1 input)");
  sweep->add_option("--mc", sweep_mc, "Monte-Carlo trials for the reference risk column");
  sweep->add_option("--x0", sweep_x0, "Ground-truth file for --mc");
  sweep->add_option("--seed", sweep_seed, "Noise seed for --mc");
  sweep->add_option("--out", sweep_out, "Output CSV path")->required();

  // select
  auto* select = app.add_subcommand("select", "Pick lambda by golden-section search on SURE");
  std::string select_in;
  std::optional<double> select_tau, select_snr;
  double select_lo = 0.0, select_hi = 0.0, select_tol = 0.0;
  EstimatorArgs select_est;
  select->add_option("--in", select_in, "Input MAT1/SER1 path")->required();
  select->add_option("--tau", select_tau, "Noise standard deviation");
  select->add_option("--snr", select_snr, "Signal-to-noise ratio");
  select->add_option("--lo", select_lo, "Bracket lower end")->required();
  select->add_option("--hi", select_hi, "Bracket upper end")->required();
  select->add_option("--tol", select_tol, "Bracket width tolerance")->required();
  select->add_option("--estimator", select_est.name, "svt|bsvt");
  select->add_option("--block-size", select_est.block_size, "Block side k (bsvt)");
  select->add_option("--nx", select_est.nx, "Image rows (bsvt on MAT1 input)");
  select->add_option("--ny", select_est.ny, "Image cols (bsvt on MAT1 input)");

  // denoise
  auto* denoise = app.add_subcommand("denoise", "Apply (block-wise) SVT at a fixed or auto-selected lambda");
  std::string denoise_in, denoise_out;
  std::optional<double> denoise_lambda, denoise_tau, denoise_snr, denoise_lo, denoise_hi, denoise_tol;
  bool denoise_auto = false;
  EstimatorArgs denoise_est;
  denoise->add_option("--in", denoise_in, "Input MAT1/SER1 path")->required();
  denoise->add_option("--lambda", denoise_lambda, "Threshold value");
  denoise->add_flag("--auto", denoise_auto, "Select lambda by golden-section search on SURE");
  denoise->add_option("--tau", denoise_tau, "Noise standard deviation (for --auto)");
  denoise->add_option("--snr", denoise_snr, "Signal-to-noise ratio (for --auto)");
  denoise->add_option("--lo", denoise_lo, "Bracket lower end (for --auto)");
  denoise->add_option("--hi", denoise_hi, "Bracket upper end (for --auto)");
  denoise->add_option("--tol", denoise_tol, "Bracket tolerance (for --auto)");
  denoise->add_option("--estimator", denoise_est.name, "svt|bsvt");
  denoise->add_option("--block-size", denoise_est.block_size, "Block side k (bsvt)");
  denoise->add_option("--nx", denoise_est.nx, "Image rows (bsvt on MAT1 input)");
  denoise->add_option("--ny", denoise_est.ny, "Image cols (bsvt on MAT1 input)");
  denoise->add_option("--out", denoise_out, "Output path (format follows input)")->required();

  // verify
  auto* verify = app.add_subcommand("verify", "Run the numerical self-check suites");
  std::uint64_t verify_seed = svt::VerifyOptions{}.seed;
  std::string verify_sizes;
  bool verify_fault = false;
  verify->add_option("--seed", verify_seed, "RNG seed for the suites");
  verify->add_option("--sizes", verify_sizes, "Comma list of shapes, e.g. 5x4,6x6");
  verify->add_flag("--inject-fault", verify_fault, "Corrupt one check to prove failures are caught");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitBadArgs;
  }

  try {
    if (gen->parsed())
      return cmd_gen(gen_kind, gen_m, gen_n, gen_seed, gen_field, gen_out);
    if (sweep->parsed())
      return cmd_sweep(sweep_in, sweep_tau, sweep_snr, sweep_grid, sweep_est, sweep_mc, sweep_x0,
                       sweep_seed, sweep_out);
    if (select->parsed())
      return cmd_select(select_in, select_tau, select_snr, select_lo, select_hi, select_tol,
                        select_est);
    if (denoise->parsed())
      return cmd_denoise(denoise_in, denoise_lambda, denoise_auto, denoise_tau, denoise_snr,
                         denoise_lo, denoise_hi, denoise_tol, denoise_est, denoise_out);
    if (verify->parsed()) return cmd_verify(verify_seed, verify_sizes, verify_fault);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitBadArgs;
}
