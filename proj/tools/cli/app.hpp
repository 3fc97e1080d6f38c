#pragma once

#include <iosfwd>

namespace oed::cli {

/// Parses the command line, runs one subcommand and returns the exit status.
/// Failures print a one-line JSON error record to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace oed::cli
