#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cscg::cli {

enum ExitCode : int { kOk = 0, kValidationError = 1, kRuntimeError = 2 };

/// Runs the command line `args` (without the program name). Messages go to
/// `out` / `err`; artifacts go to the --out-dir directory.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cscg::cli
