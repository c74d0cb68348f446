#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ganland {

/// Process exit codes.
enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitDivergence = 2, kExitIo = 3 };

/// Runs the command line `args` (args[0] is the program name). Normal output
/// goes to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ganland
