#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace echochan::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kConfig = 2,   // bad flags, config file or parameter values
  kData = 3,     // missing or malformed files
  kNumeric = 4,  // shape mismatches, solver failures, divergence
};

/// Runs the echochan command line; returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace echochan::cli
