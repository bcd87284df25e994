#pragma once

#include <ostream>
#include <span>
#include <string>

namespace pseudolabel::cli {

enum ExitCode : int {
  kOk = 0,
  kUsageError = 1,
  kDataError = 2,
  kBackendError = 3,
};

// Runs one CLI invocation. args excludes the program name. Machine-readable
// results go to `out`; logs go to stderr.
int run(std::span<const std::string> args, std::ostream& out);

}  // namespace pseudolabel::cli
