#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qclam::cli {

enum ExitCode : int { Success = 0, Invalid = 1, NumericalFailure = 2 };

/// Runs one subcommand. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qclam::cli
