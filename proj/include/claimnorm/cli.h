#pragma once

#include <iosfwd>

namespace claimnorm::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int { kOk = 0, kRunFailure = 1, kUsageError = 2 };

/// Entry point of the `claimnorm` tool. Results go to `out`, diagnostics to
/// `err`; log lines with timestamps go to stderr through the shared logger.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace claimnorm::cli
