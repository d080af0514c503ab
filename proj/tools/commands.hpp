#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace blendfit::cli {

enum ExitCode : int { kExitOk = 0, kExitDomain = 1, kExitUsage = 2 };

/// Parses `args` (without the program name) and runs the chosen subcommand.
/// "-" as a path means the given standard stream. Diagnostics go to `err`;
/// the log level comes from the BLENDFIT_LOG environment variable.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace blendfit::cli
