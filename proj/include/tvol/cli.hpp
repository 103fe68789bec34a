#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tvol {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitError = 1,
  /// --assert was given and an acceptance threshold was violated.
  kExitAssertion = 2,
};

/// Entry point behind the `tvol` binary. `args` excludes the program name.
/// Subcommands: simulate, estimate, rate-eval, check-regime, run-experiment.
int parse_and_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tvol
