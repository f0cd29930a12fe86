#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sticky::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,
  kExitConvergence = 3,
  kExitData = 4,
};

/// Runs one invocation; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sticky::cli
