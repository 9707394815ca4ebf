#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sysrisk::cli {

enum ExitCode : int {
  kSuccess = 0,
  kIoFailure = 1,
  kUsageError = 2,
  kNumericalFailure = 3,
};

/// Runs the command line `args` (without the program name). Primary output
/// goes to `out` unless --out redirects it to a file; diagnostics and
/// summaries to `err`.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace sysrisk::cli
