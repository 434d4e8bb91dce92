#pragma once

#include <ostream>

namespace awt::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kDataError = 2,
  kRuntimeError = 3,
};

// Entry point of the awt command; `out` gets the human summary (or JSON when
// no --out is given), `err` gets diagnostics.
int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace awt::cli
