#pragma once

#include <iosfwd>

namespace stabfem {

/// Exit codes of the command-line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitNumerical = 3,
  kExitIo = 4,
};

/// Runs `stabfem <command> [flags]`; commands are analyze, optimize, solve
/// and convergence. Summaries go to `out`, diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace stabfem
