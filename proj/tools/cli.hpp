#pragma once
#include <iosfwd>
#include <string>
#include <vector>

namespace socialsparse::cli {

enum ExitCode : int {
    exit_ok = 0,
    exit_usage = 2,
    exit_format = 3,
    exit_numeric = 4,
};

/// Runs one `socialsparse` subcommand. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace socialsparse::cli
