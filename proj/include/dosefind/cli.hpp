#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dosefind::cli {

enum ExitCode : int {
    kOk = 0,
    kConfigError = 2,
    kNumericalFailure = 3,
};

/// Runs `dosefind <args...>` (args excludes the program name). Subcommands:
/// schedule, simulate, compare, keyboard-table, serve.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dosefind::cli
