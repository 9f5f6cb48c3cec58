#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace pinnstab {

/// Worst relative discrepancies between autodiff and central differences.
struct FdErrors {
  double grad = 0.0;    ///< input gradient
  double hess = 0.0;    ///< input Hessian
  double params = 0.0;  ///< parameter gradient of a jet-based loss
};

/// Random tanh nets of input dimension `dim` at random points, `trials` pairs.
FdErrors autodiff_fd_errors(int dim, int trials, std::uint64_t seed);

struct CheckResult {
  std::string id;
  bool passed = false;
  double value = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct SelftestOptions {
  int fd_trials = 100;
  std::uint64_t seed = 1;
  /// Applied to every quadrature weight vector before use (fault injection).
  std::function<void(std::vector<double>&)> weight_fault;
};

std::vector<CheckResult> run_selftest(const SelftestOptions& options = {});

/// One line per check; returns true iff all passed.
bool report(const std::vector<CheckResult>& checks, std::ostream& out);

}  // namespace pinnstab
