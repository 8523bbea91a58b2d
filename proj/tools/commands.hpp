#pragma once

namespace prnu::cli {

/// Parses the command line and runs one subcommand. Returns the exit code:
/// 0 for H0 or success, 1 for H1, 2 for errors.
int run(int argc, char** argv);

}  // namespace prnu::cli
