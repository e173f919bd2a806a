#pragma once

// Command-line front end: train, eval, predict, inspect and synth.

#include <iosfwd>
#include <string>
#include <vector>

namespace sebert {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitDivergence = 3,
};

/// Runs one command. `args` excludes the program name. Results go to `out`,
/// progress and diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sebert
