#pragma once

#include "svt/svd.hpp"
#include "svt/types.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace svt {

// Simple full-rank spectrum approaching the profile non-tangentially: member k
// of the flattened spectrum is offset by t * (0.5 + 0.2 k), so all gap ratios
// stay bounded away from one as t -> 0.
RealVec non_tangential_sigma(const SpectrumProfile& profile, double t);

struct VerifyOptions {
  std::uint64_t seed = 20260808;
  std::vector<std::pair<Index, Index>> sizes = {{5, 4}, {4, 5}, {6, 6}};
  // Deliberately corrupts one computation so the harness can be seen to fail.
  bool inject_fault = false;
};

struct SuiteResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Runs the self-check suites in a fixed order; each result carries a
/// one-line detail suitable for printing.
std::vector<SuiteResult> run_verification(const VerifyOptions& options);

}  // namespace svt
