#pragma once

#include "spcr/error.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace spcr::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUsage = 2,
  kIngest = 3,
  kNumerical = 4,
};

int exit_code_for(ErrorKind kind) noexcept;

/// Runs the command line `args` (without the program name). Commands:
/// rank, select-dim, fit, predict, sweep, simulate, bench.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spcr::cli
